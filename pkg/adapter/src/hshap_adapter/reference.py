"""Built-in model loaders.

``cross_detector`` is the reference scorer used in cross-implementation
tests: given the ground-truth mask of an image whose concept pixels are
colored on a black background, it fires exactly when a masked input keeps
at least one concept pixel, provided removed features take the zero
baseline. ``mean_pixel`` is a trivial smoke-test model.
"""

from __future__ import annotations

import numpy as np

from .netpbm import read_pgm


def cross_detector(mask: str):
    """Score 1 when any ground-truth pixel still carries color.

    With a zero baseline a kept concept pixel keeps its (nonzero) color and
    a removed one reads exactly zero, so thresholding at zero reproduces the
    keeps-an-important-pixel rule from pixel data alone.
    """
    important = read_pgm(mask) > 0

    def model(batch: np.ndarray) -> np.ndarray:
        kept = batch[:, :, important] > 0.0
        return kept.any(axis=(1, 2)).astype(np.float64)

    return model


def mean_pixel():
    """Score each sample with the mean of all its values."""

    def model(batch: np.ndarray) -> np.ndarray:
        return batch.mean(axis=(1, 2, 3))

    return model


def mean_and_negative():
    """Two-output model: [mean, -mean] per sample (head-selection tests)."""

    def model(batch: np.ndarray) -> np.ndarray:
        means = batch.mean(axis=(1, 2, 3))
        return np.stack([means, -means], axis=1)

    return model, 2
