"""Hierarchical Shapley saliency maps for classifiers with localized evidence.

The package computes exact Shapley attributions over a recursive partition
of the input: each tree node is a small cooperative game among its parts,
and only parts whose coefficient clears a relevance tolerance are explored
further. For models that fire exactly when some important feature is kept
(the bag-label setting), the resulting map equals the exact Shapley map at
an exponentially smaller evaluation cost, and the ``theory`` module ships
executable forms of the cost and similarity guarantees together with Monte
Carlo validators.
"""

from .bridge import BridgeConfig, BridgeOracle
from .errors import (
    BridgeError,
    BridgeTimeout,
    DegenerateRegion,
    EmptyDataset,
    HshapError,
    InvalidParams,
    LengthMismatch,
    OracleFailure,
    OutOfBounds,
    PackingFailure,
    PlayerLimitExceeded,
    ProtocolError,
    ServerCrashed,
    ShapeMismatch,
    ZeroVector,
)
from .explain import (
    ExplainerConfig,
    NodeScore,
    SaliencyMap,
    Tolerance,
    assemble_map,
    evaluation_budget,
    explain,
    explain_breadth_first,
    explain_depth_first,
)
from .games import (
    CharacteristicOracle,
    GameSpec,
    ShapleyVector,
    brute_force_shapley,
    node_shapley,
    shapley_weights,
    singleton_players,
)
from .masking import (
    Baseline,
    MaskedBatch,
    MaskedInput,
    compute_baseline,
    load_baseline,
    mask,
    save_baseline,
)
from .metrics import AblationCurve, EvalReport, ablate_topk, f1_score
from .partition import PartitionTree, Region, is_leaf, split
from .synthetic import (
    MilInstance,
    PatchMilOracle,
    PixelMilOracle,
    SyntheticSpec,
    generate,
    patch_mil_oracle,
    pixel_mil_oracle,
    write_dataset,
)
from .theory import (
    MilParams,
    cosine_similarity,
    exact_mil_map,
    expected_visited_nodes,
    similarity_lower_bound,
    simulate_visited_nodes,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
