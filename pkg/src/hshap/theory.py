"""Closed-form cost and accuracy results, with Monte Carlo validators.

``expected_visited_nodes`` evaluates the recursion for the mean number of
tree nodes the explainer visits when each feature is independently important
with probability rho and the model is an exact detector of important
features. ``simulate_visited_nodes`` estimates the same quantity empirically
by running the real explainer on sampled instances, which makes the formula
and the implementation check each other.

``similarity_lower_bound`` gives the guaranteed cosine similarity between
the exact uniform attribution map and the hierarchical one when exploration
stops at feature size s: max(1/sqrt(s), sqrt(k/n)) for k important features
out of n.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParams, ZeroVector
from .explain import ExplainerConfig, Tolerance, explain_depth_first
from .synthetic import PixelMilOracle


@dataclass(frozen=True)
class MilParams:
    """Instance distribution: n features, each important w.p. rho."""

    n: int
    gamma: int
    rho: float
    s: int = 1

    def __post_init__(self) -> None:
        if self.n < 1:
            raise InvalidParams("n must be >= 1")
        if self.gamma not in (2, 4):
            raise InvalidParams("gamma must be 2 or 4")
        if not 0.0 <= self.rho <= 1.0:
            raise InvalidParams("rho must lie in [0, 1]")
        if self.s < 1:
            raise InvalidParams("s must be >= 1")

    def grid(self) -> tuple[int, int]:
        """Feature grid used for sampled instances."""
        if self.gamma == 2:
            return (1, self.n)
        side = math.isqrt(self.n)
        if side * side != self.n:
            raise InvalidParams("gamma=4 needs a square feature count")
        return (side, side)


@dataclass(frozen=True)
class SimulationResult:
    mean: float
    stderr: float
    trials: int


def _prob_no_important_child(size: float, gamma: int, rho: float, root: bool) -> float:
    """Probability that a fixed child of a node of the given size is empty.

    For the root the child's features are unconditioned; deeper nodes are
    conditioned on containing at least one important feature themselves.
    """
    q = 1.0 - rho
    unconditioned = q ** (size / gamma)
    if root:
        return unconditioned
    node_nonempty = 1.0 - q**size
    siblings_nonempty = 1.0 - q ** (size * (gamma - 1) / gamma)
    return unconditioned * siblings_nonempty / node_nonempty


def expected_visited_nodes(params: MilParams) -> float:
    """Mean explored-node count under zero tolerance and unit feature size.

    Computed by the recursion E(node) = 1 + gamma * (1 - p_empty) * E(child)
    with single-feature nodes contributing exactly 1. Non-power-of-gamma
    sizes are evaluated with real-valued exponents.
    """
    if params.rho == 0.0:
        return 1.0

    def subtree(size: float, root: bool) -> float:
        if size <= 1.0:
            return 1.0
        p_empty = _prob_no_important_child(size, params.gamma, params.rho, root)
        return 1.0 + params.gamma * (1.0 - p_empty) * subtree(
            size / params.gamma, root=False
        )

    return subtree(float(params.n), root=True)


def _run_trials(args: tuple[MilParams, int, int, int]) -> np.ndarray:
    params, seed, start, stop = args
    h, w = params.grid()
    cfg = ExplainerConfig(
        gamma=params.gamma,
        min_feature_size=params.s,
        tolerance=Tolerance.absolute(0.0),
    )
    x = np.zeros((1, h, w))
    counts = np.empty(stop - start, dtype=np.int64)
    for t in range(start, stop):
        rng = np.random.Generator(np.random.Philox(key=[seed, t]))
        importance = rng.random((h, w)) < params.rho
        oracle = PixelMilOracle(importance)
        saliency, _ = explain_depth_first(x, oracle, cfg)
        counts[t - start] = saliency.visited_nodes
    return counts


def simulate_visited_nodes(
    params: MilParams, trials: int, seed: int, jobs: int = 1
) -> SimulationResult:
    """Empirical mean visited-node count over sampled instances.

    Each trial draws its own importance indicators from a counter-based
    stream keyed by (seed, trial), so runs are reproducible and trials stay
    independent regardless of how they are scheduled.
    """
    if trials < 1:
        raise InvalidParams("trials must be >= 1")
    if jobs <= 1 or trials < 64:
        counts = _run_trials((params, seed, 0, trials))
    else:
        bounds = np.linspace(0, trials, jobs + 1, dtype=int)
        chunks = [
            (params, seed, int(a), int(b))
            for a, b in zip(bounds[:-1], bounds[1:])
            if b > a
        ]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            counts = np.concatenate(list(pool.map(_run_trials, chunks)))
    mean = float(counts.mean())
    stderr = (
        float(counts.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    )
    return SimulationResult(mean=mean, stderr=stderr, trials=trials)


def similarity_lower_bound(s: int, k: int, n: int) -> float:
    """Guaranteed cosine similarity at feature size s with k of n important."""
    if not 1 <= s <= n:
        raise InvalidParams("need 1 <= s <= n")
    if not 1 <= k <= n:
        raise InvalidParams("need 1 <= k <= n")
    return max(1.0 / math.sqrt(s), math.sqrt(k / n))


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    if a.shape != b.shape:
        raise InvalidParams(f"shape mismatch: {a.shape} vs {b.shape}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise ZeroVector("cosine similarity of a zero vector")
    if np.array_equal(a, b):
        return 1.0  # keep exact recovery exactly 1, free of norm rounding
    return float(a @ b) / (na * nb)


def exact_mil_map(importance: np.ndarray) -> np.ndarray:
    """Uniform 1/k attribution over the important features (zeros when k=0)."""
    ind = np.asarray(importance).reshape(-1).astype(bool)
    k = int(ind.sum())
    phi = np.zeros(ind.shape[0])
    if k:
        phi[ind] = 1.0 / k
    return phi
