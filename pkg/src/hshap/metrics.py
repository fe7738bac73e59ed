"""Saliency-map evaluation: f1 against ground truth and top-k ablation."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidParams, LengthMismatch
from .games import apply_score_head
from .masking import MaskedBatch

F1_THRESHOLD = 1e-6


@dataclass
class EvalReport:
    f1: float
    precision: float
    recall: float
    evaluations_used: int = 0
    visited_nodes: int = 0
    wall_time: float = 0.0


@dataclass(frozen=True)
class AblationCurve:
    """Model score as the top-k attributed features are removed."""

    ks: tuple[int, ...]
    scores: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.ks) != len(self.scores):
            raise LengthMismatch("ks and scores differ in length")
        if any(b <= a for a, b in zip(self.ks, self.ks[1:])):
            raise InvalidParams("ks must be strictly increasing")
        if not all(np.isfinite(self.scores)):
            raise InvalidParams("scores must be finite")


def f1_score(
    phi: np.ndarray, truth_mask: np.ndarray, threshold: float = F1_THRESHOLD
) -> EvalReport:
    """Binary f1 of the thresholded map against the ground-truth mask.

    The map is binarized at phi > threshold. Precision (recall) is 0 when no
    feature is predicted (no feature is true), and f1 is 0 whenever both
    terms vanish, so an all-zero map always scores 0.
    """
    phi = np.asarray(phi, dtype=np.float64).reshape(-1)
    truth = np.asarray(truth_mask).reshape(-1).astype(bool)
    if phi.shape != truth.shape:
        raise LengthMismatch(f"map length {phi.size} != mask length {truth.size}")
    predicted = phi > threshold
    tp = int(np.sum(predicted & truth))
    precision = tp / int(predicted.sum()) if predicted.any() else 0.0
    recall = tp / int(truth.sum()) if truth.any() else 0.0
    if precision + recall == 0.0:
        f1 = 0.0
    else:
        f1 = 2.0 * precision * recall / (precision + recall)
    return EvalReport(f1=f1, precision=precision, recall=recall)


def topk_order(phi: np.ndarray) -> np.ndarray:
    """Feature indices by descending attribution, ties by ascending index."""
    phi = np.asarray(phi, dtype=np.float64).reshape(-1)
    return np.lexsort((np.arange(phi.size), -phi))


def ablate_topk(
    x: np.ndarray,
    phi: np.ndarray,
    oracle,
    baseline,
    ks: Sequence[int],
    score_head: int = 0,
) -> AblationCurve:
    """Score the model after removing the k best-attributed features.

    For each k the k highest-phi features are set to the baseline and the
    rest kept; all the resulting inputs go to the scorer as one batch.
    """
    ks = [int(k) for k in ks]
    if any(b <= a for a, b in zip(ks, ks[1:])):
        raise InvalidParams("ks must be strictly increasing")
    order = topk_order(phi)
    n = order.size
    if any(k < 0 or k > n for k in ks):
        raise InvalidParams(f"each k must lie in [0, {n}]")
    kept = np.ones((len(ks), n), dtype=bool)
    for row, k in enumerate(ks):
        kept[row, order[:k]] = False
    batch = MaskedBatch.from_feature_masks(x, baseline, kept)
    scores = apply_score_head(oracle.evaluate_batch(batch), score_head)
    return AblationCurve(ks=tuple(ks), scores=tuple(float(s) for s in scores))


def write_curve_csv(path, curve: AblationCurve) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "score"])
        for k, score in zip(curve.ks, curve.scores):
            writer.writerow([k, repr(score)])


def write_report_csv(path, rows: list[dict]) -> None:
    """Comparison table: one row per (method, image) evaluation."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "f1", "evals", "wall_time"])
        for row in rows:
            writer.writerow(
                [row["method"], row["f1"], row["evals"], row["wall_time"]]
            )
