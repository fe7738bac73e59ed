"""Shared test helpers: independent Shapley enumeration and tiny oracles."""

from __future__ import annotations

import itertools
from math import factorial

import numpy as np

from hshap.masking import MaskedBatch


def shapley_by_enumeration(p: int, value_of_set) -> list[float]:
    """Direct weighted-marginal sum over all subsets.

    Deliberately written with itertools over index sets, independent of the
    production bit-table combiner, so the two can check each other.
    """
    values = []
    for i in range(p):
        others = [j for j in range(p) if j != i]
        total = 0.0
        for size in range(p):
            weight = factorial(size) * factorial(p - size - 1) / factorial(p)
            for combo in itertools.combinations(others, size):
                coalition = set(combo)
                total += weight * (
                    value_of_set(coalition | {i}) - value_of_set(coalition)
                )
        values.append(total)
    return values


class TableOracle:
    """Characteristic function given as a dense table over coalition bits.

    Only usable for coalition-structured batches; lets tests build arbitrary
    real-valued games without any geometry.
    """

    concurrency_safe = True

    def __init__(self, table):
        self.table = np.asarray(table, dtype=np.float64)
        self.batches = 0
        self.inputs_seen = 0

    def evaluate_batch(self, batch: MaskedBatch) -> np.ndarray:
        assert batch.coalition_bits is not None, "table oracle needs coalitions"
        self.batches += 1
        self.inputs_seen += len(batch)
        return self.table[batch.coalition_bits]


class CountingOracle:
    """Wraps another oracle and counts batches and inputs."""

    def __init__(self, inner):
        self.inner = inner
        self.concurrency_safe = inner.concurrency_safe
        self.batches = 0
        self.inputs_seen = 0
        self.coalitions_seen: list[int] = []

    def evaluate_batch(self, batch: MaskedBatch) -> np.ndarray:
        self.batches += 1
        self.inputs_seen += len(batch)
        if batch.coalition_bits is not None:
            self.coalitions_seen.extend(int(b) for b in batch.coalition_bits)
        return self.inner.evaluate_batch(batch)


def mil_table(p: int, important: set[int]) -> np.ndarray:
    """Value table of the indicator game: 1 iff a kept player is important."""
    table = np.zeros(1 << p)
    for bits in range(1 << p):
        if any(bits >> i & 1 for i in important):
            table[bits] = 1.0
    return table


def random_importance(rng, height: int, width: int, k: int) -> np.ndarray:
    """Exactly k important features on an h x w grid."""
    flat = np.zeros(height * width, dtype=bool)
    flat[rng.choice(height * width, size=k, replace=False)] = True
    return flat.reshape(height, width)
