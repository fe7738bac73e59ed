"""Exact Shapley values for small cooperative games over feature regions.

Players are disjoint feature regions of one sample; the characteristic value
of a coalition is the model score on the input masked down to the coalition's
regions. Coalitions are enumerated as ascending bit patterns so results are
reproducible bit for bit, and each distinct coalition is evaluated exactly
once. Weights |C|! (p-|C|-1)! / p! are built as exact rationals per coalition
size and converted to float once.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import factorial
from typing import Protocol, Sequence, runtime_checkable

import numpy as np

from .errors import InvalidParams, OracleFailure, PlayerLimitExceeded
from .masking import MaskedBatch
from .partition import Region

BRUTE_FORCE_PLAYER_LIMIT = 20
_EVAL_CHUNK = 4096


@runtime_checkable
class CharacteristicOracle(Protocol):
    """Scores batches of masked inputs.

    ``evaluate_batch`` returns one score per batch entry, either as a flat
    vector or as a (batch, outputs) matrix for multi-output models; the
    game's score head selects the column in the latter case.
    ``concurrency_safe`` tells callers whether concurrent batch calls are
    allowed.
    """

    concurrency_safe: bool

    def evaluate_batch(self, batch: MaskedBatch) -> np.ndarray: ...


@dataclass(frozen=True)
class GameSpec:
    """A cooperative game: disjoint region players, an oracle, one sample."""

    players: tuple[Region, ...]
    oracle: CharacteristicOracle
    x: np.ndarray
    baseline: np.ndarray | None = None
    score_head: int = 0

    def __post_init__(self) -> None:
        if not 1 <= len(self.players) <= 30:
            raise InvalidParams(f"need 1..30 players, got {len(self.players)}")


@dataclass(frozen=True)
class ShapleyVector:
    """Per-player attributions plus the evaluation count that produced them."""

    values: np.ndarray
    evaluations_used: int

    def __post_init__(self) -> None:
        if self.evaluations_used < 0:
            raise InvalidParams("negative evaluation count")


@lru_cache(maxsize=None)
def shapley_weights(p: int) -> np.ndarray:
    """Weight per coalition size |C| = 0..p-1 for a p-player game."""
    fractions = [
        Fraction(factorial(size) * factorial(p - size - 1), factorial(p))
        for size in range(p)
    ]
    return np.array([float(f) for f in fractions])


@lru_cache(maxsize=None)
def _coalition_table(p: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(ids, membership bits, popcounts) for all 2^p coalitions, ascending."""
    ids = np.arange(1 << p, dtype=np.int64)
    bits = ((ids[:, None] >> np.arange(p)) & 1).astype(np.uint8)
    return ids, bits, bits.sum(axis=1).astype(np.int64)


def shapley_from_values(values: np.ndarray, p: int) -> np.ndarray:
    """Combine a full coalition-value table into the p Shapley coefficients.

    values[m] is the characteristic value of the coalition whose members are
    the set bits of m. Marginal contributions are grouped by coalition size
    (yielding exact integer counts for indicator-valued games) before the
    final weighted sum, which keeps interchangeable players bit-identical.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.shape != (1 << p,):
        raise InvalidParams(f"need {1 << p} coalition values, got {values.shape}")
    ids, bits, sizes = _coalition_table(p)
    weights = shapley_weights(p)
    phi = np.empty(p)
    for i in range(p):
        without = ids[bits[:, i] == 0]
        diffs = values[without | (1 << i)] - values[without]
        by_size = np.bincount(sizes[without], weights=diffs, minlength=p)
        phi[i] = float(weights @ by_size[:p])
    return phi


def _evaluate_coalitions(game: GameSpec, coalition_bits: np.ndarray) -> np.ndarray:
    batch = MaskedBatch.from_coalitions(
        game.x, game.baseline, game.players, coalition_bits
    )
    scores = np.asarray(game.oracle.evaluate_batch(batch), dtype=np.float64)
    if scores.ndim == 2:
        scores = scores[:, game.score_head]
    if scores.shape != (len(coalition_bits),):
        raise OracleFailure(
            f"oracle returned {scores.shape} scores for {len(coalition_bits)} inputs"
        )
    return scores


def node_shapley(game: GameSpec) -> ShapleyVector:
    """Solve one partition-node game exactly with a single oracle batch.

    All 2^p coalition inputs are issued together and every player's
    coefficient is read off the same value table, so a gamma-way node costs
    exactly 2^gamma model evaluations regardless of gamma.
    """
    p = len(game.players)
    if p > 8:
        raise InvalidParams(f"node games are small by design, got {p} players")
    ids = np.arange(1 << p, dtype=np.int64)
    values = _evaluate_coalitions(game, ids)
    return ShapleyVector(shapley_from_values(values, p), 1 << p)


def brute_force_shapley(game: GameSpec) -> ShapleyVector:
    """Exact Shapley values by full enumeration of all 2^p coalitions.

    Each coalition is evaluated once (the value table is the memo), in
    ascending-bit-pattern chunks to bound peak memory.
    """
    p = len(game.players)
    if p > BRUTE_FORCE_PLAYER_LIMIT:
        raise PlayerLimitExceeded(
            f"{p} players would need {1 << p} evaluations "
            f"(limit {BRUTE_FORCE_PLAYER_LIMIT})"
        )
    total = 1 << p
    values = np.empty(total)
    for start in range(0, total, _EVAL_CHUNK):
        ids = np.arange(start, min(start + _EVAL_CHUNK, total), dtype=np.int64)
        values[start : start + len(ids)] = _evaluate_coalitions(game, ids)
    return ShapleyVector(shapley_from_values(values, p), total)


def singleton_players(height: int, width: int) -> tuple[Region, ...]:
    """One single-feature player per grid cell, row-major."""
    return tuple(
        Region(r, r + 1, c, c + 1) for r in range(height) for c in range(width)
    )


def apply_score_head(scores: np.ndarray, head: int) -> np.ndarray:
    """Reduce oracle output to a flat score vector."""
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim == 2:
        return scores[:, head]
    return scores


def solve_level(
    games: Sequence[GameSpec],
) -> tuple[list[ShapleyVector], int]:
    """Solve sibling node games with one concatenated oracle call.

    All games must share the sample, baseline, oracle, and score head; the
    combined batch preserves each game's ascending coalition order, so the
    results are identical to per-node solves.
    """
    if not games:
        return [], 0
    oracle = games[0].oracle
    head = games[0].score_head
    batches = [
        MaskedBatch.from_coalitions(
            g.x, g.baseline, g.players, np.arange(1 << len(g.players))
        )
        for g in games
    ]
    combined = MaskedBatch.concat(batches)
    scores = apply_score_head(oracle.evaluate_batch(combined), head)
    if scores.shape != (len(combined),):
        raise OracleFailure(
            f"oracle returned {scores.shape} scores for {len(combined)} inputs"
        )
    results: list[ShapleyVector] = []
    offset = 0
    for g in games:
        count = 1 << len(g.players)
        table = scores[offset : offset + count]
        offset += count
        results.append(
            ShapleyVector(shapley_from_values(table, len(g.players)), count)
        )
    return results, len(combined)
