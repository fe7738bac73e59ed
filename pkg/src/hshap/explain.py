"""Hierarchical Shapley saliency maps.

The explainer walks the partition tree of a sample, solves the small node
game at every visited node, and keeps descending only where a coefficient
clears the relevance tolerance. Leaves that clear the tolerance at minimal
feature size form the relevant set L; the final map is uniform 1/|L| on the
features L covers (|L| counts features, i.e. the summed leaf areas).

Depth-first traversal uses an absolute tolerance. Breadth-first traversal
recomputes the threshold per level, either as the same absolute constant or
as a nearest-rank percentile of the level's pooled coefficients. Absolute
thresholds compare strictly by default (a zero tolerance must not expand
zero-coefficient subtrees) with an opt-in >= flag for breadth-first;
percentile thresholds always prune zero coefficients but keep ties at the
threshold, since equally attributed siblings are the norm rather than the
exception here.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParams
from .games import GameSpec, node_shapley, solve_level
from .masking import baseline_array, to_chw
from .partition import Region, is_leaf, split

COEFFICIENT_NOISE_FLOOR = 1e-12

DEPTH_FIRST = "depth"
BREADTH_FIRST = "breadth"


@dataclass(frozen=True)
class Tolerance:
    """Relevance threshold: an absolute value or a per-level percentile."""

    kind: str
    value: float

    @classmethod
    def absolute(cls, tau: float) -> "Tolerance":
        if tau < 0:
            raise InvalidParams("absolute tolerance must be >= 0")
        return cls("absolute", float(tau))

    @classmethod
    def percentile(cls, q: float) -> "Tolerance":
        if not 0 <= q <= 100:
            raise InvalidParams("percentile must lie in [0, 100]")
        return cls("percentile", float(q))

    @property
    def is_absolute(self) -> bool:
        return self.kind == "absolute"


@dataclass(frozen=True)
class ExplainerConfig:
    gamma: int = 4
    min_feature_size: int = 1
    tolerance: Tolerance = field(default_factory=lambda: Tolerance.absolute(0.0))
    traversal: str = DEPTH_FIRST
    score_head: int = 0
    breadth_inclusive: bool = False

    def __post_init__(self) -> None:
        if self.gamma not in (2, 4):
            raise InvalidParams(f"gamma must be 2 or 4, got {self.gamma}")
        if self.min_feature_size < 1:
            raise InvalidParams("min_feature_size must be >= 1")
        if self.traversal not in (DEPTH_FIRST, BREADTH_FIRST):
            raise InvalidParams(f"unknown traversal {self.traversal!r}")
        if self.traversal == DEPTH_FIRST and not self.tolerance.is_absolute:
            raise InvalidParams("depth-first traversal needs an absolute tolerance")


@dataclass
class NodeScore:
    """Coefficients of one visited node game, before map normalization."""

    region: Region
    children: tuple[Region, ...]
    coefficients: np.ndarray


@dataclass
class SaliencyMap:
    phi: np.ndarray
    shape: tuple[int, int]
    relevant_leaves: list[Region]
    evaluations_used: int
    visited_nodes: int
    wall_time: float

    @property
    def phi_grid(self) -> np.ndarray:
        return self.phi.reshape(self.shape)


def clamp_noise(coefficients: np.ndarray) -> np.ndarray:
    """Zero out coefficients indistinguishable from floating-point noise."""
    out = np.asarray(coefficients, dtype=np.float64).copy()
    out[np.abs(out) < COEFFICIENT_NOISE_FLOOR] = 0.0
    return out


def assemble_map(leaves: list[Region], shape: int | tuple[int, int]) -> np.ndarray:
    """Uniform map over the features covered by the relevant leaves.

    The mass 1/|L| uses the covered feature count, so the map sums to one
    whenever any leaf was found and is all-zero otherwise. ``shape`` is the
    feature grid (height, width), or a plain length for 1-D inputs.
    """
    h, w = (1, shape) if isinstance(shape, int) else shape
    grid = np.zeros((h, w))
    covered = sum(leaf.area for leaf in leaves)
    if covered == 0:
        return grid.reshape(-1)
    for leaf in leaves:
        if not leaf.within(h, w):
            raise InvalidParams(f"leaf {leaf} exceeds the {h}x{w} grid")
        if np.any(grid[leaf.row_slice, leaf.col_slice] != 0.0):
            raise InvalidParams("leaves must be disjoint")
        grid[leaf.row_slice, leaf.col_slice] = 1.0 / covered
    return grid.reshape(-1)


def nearest_rank_percentile(values: np.ndarray, q: float) -> float:
    """Nearest-rank percentile: the ceil(q/100 * N)-th smallest value."""
    values = np.sort(np.asarray(values, dtype=np.float64))
    if values.size == 0:
        raise InvalidParams("percentile of an empty pool")
    rank = max(1, math.ceil(q / 100.0 * values.size))
    return float(values[rank - 1])


def evaluation_budget(k: int, n: int, gamma: int) -> int:
    """Worst-case model evaluations: 2^gamma * k * log_gamma(n)."""
    if k < 1:
        raise InvalidParams("k must be >= 1")
    levels = round(math.log(n) / math.log(gamma)) if n > 1 else 0
    if n < 1 or gamma**levels != n:
        raise InvalidParams(f"{n} is not a power of {gamma}")
    return (1 << gamma) * k * levels


def _root_region(x: np.ndarray, gamma: int) -> Region:
    grid = to_chw(x).shape[1:]
    if gamma == 4 and (grid[0] < 2 or grid[1] < 2):
        raise InvalidParams("gamma=4 requires a 2-D input grid")
    return Region.full(*grid)


def _passes_absolute(phi: float, tau: float, inclusive: bool) -> bool:
    return phi >= tau if inclusive else phi > tau


def _passes_percentile(phi: float, threshold: float) -> bool:
    # zero coefficients mark irrelevant subtrees and are always pruned;
    # positive ones advance when they reach the level threshold, ties kept
    return phi > 0.0 and phi >= threshold


def _single_node_result(
    x: np.ndarray, oracle, cfg: ExplainerConfig, baseline, root: Region
) -> tuple[list[Region], list[NodeScore], int]:
    """Root already at leaf size: score it as a one-player game."""
    game = GameSpec((root,), oracle, to_chw(x), baseline, cfg.score_head)
    sv = node_shapley(game)
    phi = clamp_noise(sv.values)[0]
    nodes = [NodeScore(root, (root,), np.array([phi]))]
    if cfg.tolerance.is_absolute:
        inclusive = cfg.traversal == BREADTH_FIRST and cfg.breadth_inclusive
        qualifies = _passes_absolute(phi, cfg.tolerance.value, inclusive)
    else:
        qualifies = _passes_percentile(phi, phi)  # pool is the root alone
    leaves = [root] if qualifies else []
    return leaves, nodes, sv.evaluations_used


def explain(
    x: np.ndarray, oracle, cfg: ExplainerConfig, baseline=None
) -> tuple[SaliencyMap, list[NodeScore]]:
    """Run the configured traversal and return the map with its node log."""
    if cfg.traversal == DEPTH_FIRST:
        return explain_depth_first(x, oracle, cfg, baseline)
    return explain_breadth_first(x, oracle, cfg, baseline)


def explain_depth_first(
    x: np.ndarray, oracle, cfg: ExplainerConfig, baseline=None
) -> tuple[SaliencyMap, list[NodeScore]]:
    """Depth-first exploration with an absolute tolerance.

    A child is entered only when its coefficient strictly exceeds the
    tolerance; children at minimal feature size that qualify become
    relevant leaves.
    """
    if not cfg.tolerance.is_absolute:
        raise InvalidParams("depth-first traversal needs an absolute tolerance")
    start = time.perf_counter()
    xc = to_chw(x)
    base = baseline_array(baseline, x)
    root = _root_region(x, cfg.gamma)
    tau = cfg.tolerance.value
    s = cfg.min_feature_size

    leaves: list[Region] = []
    nodes: list[NodeScore] = []
    evaluations = 0
    visited = 0

    if is_leaf(root, s):
        leaves, nodes, evaluations = _single_node_result(x, oracle, cfg, base, root)
        visited = 1
    else:

        def visit(region: Region) -> None:
            nonlocal evaluations, visited
            visited += 1
            if is_leaf(region, s):
                leaves.append(region)
                return
            children = tuple(split(region, cfg.gamma))
            game = GameSpec(children, oracle, xc, base, cfg.score_head)
            sv = node_shapley(game)
            evaluations += sv.evaluations_used
            coeffs = clamp_noise(sv.values)
            nodes.append(NodeScore(region, children, coeffs))
            for child, phi_c in zip(children, coeffs):
                if phi_c > tau:
                    visit(child)

        visit(root)

    return _finish(xc, leaves, nodes, evaluations, visited, start)


def explain_breadth_first(
    x: np.ndarray, oracle, cfg: ExplainerConfig, baseline=None
) -> tuple[SaliencyMap, list[NodeScore]]:
    """Level-synchronous exploration with a per-level threshold.

    Every game of a level is solved in one concatenated oracle call, the
    coefficients are pooled, and the level threshold is either the absolute
    tolerance or the nearest-rank percentile of the pool.
    """
    start = time.perf_counter()
    xc = to_chw(x)
    base = baseline_array(baseline, x)
    root = _root_region(x, cfg.gamma)
    s = cfg.min_feature_size
    inclusive = cfg.breadth_inclusive

    leaves: list[Region] = []
    nodes: list[NodeScore] = []
    evaluations = 0

    if is_leaf(root, s):
        leaves, nodes, evaluations = _single_node_result(x, oracle, cfg, base, root)
        return _finish(xc, leaves, nodes, evaluations, 1, start)

    visited = 1
    level = [root]
    while level:
        games = [
            GameSpec(tuple(split(region, cfg.gamma)), oracle, xc, base, cfg.score_head)
            for region in level
        ]
        solved, used = solve_level(games)
        evaluations += used

        pooled_children: list[Region] = []
        pooled_coeffs: list[float] = []
        for region, game, sv in zip(level, games, solved):
            coeffs = clamp_noise(sv.values)
            nodes.append(NodeScore(region, game.players, coeffs))
            pooled_children.extend(game.players)
            pooled_coeffs.extend(coeffs.tolist())

        pool = np.array(pooled_coeffs)
        if cfg.tolerance.is_absolute:
            threshold = cfg.tolerance.value

            def qualifies(value: float) -> bool:
                return _passes_absolute(value, threshold, inclusive)

        else:
            threshold = nearest_rank_percentile(pool, cfg.tolerance.value)

            def qualifies(value: float) -> bool:
                return _passes_percentile(value, threshold)

        next_level: list[Region] = []
        for child, phi_c in zip(pooled_children, pooled_coeffs):
            if qualifies(phi_c):
                visited += 1
                if is_leaf(child, s):
                    leaves.append(child)
                else:
                    next_level.append(child)
        level = next_level

    return _finish(xc, leaves, nodes, evaluations, visited, start)


def _finish(
    xc: np.ndarray,
    leaves: list[Region],
    nodes: list[NodeScore],
    evaluations: int,
    visited: int,
    start: float,
) -> tuple[SaliencyMap, list[NodeScore]]:
    h, w = xc.shape[1], xc.shape[2]
    phi = assemble_map(leaves, (h, w))
    saliency = SaliencyMap(
        phi=phi,
        shape=(h, w),
        relevant_leaves=leaves,
        evaluations_used=evaluations,
        visited_nodes=visited,
        wall_time=time.perf_counter() - start,
    )
    return saliency, nodes
