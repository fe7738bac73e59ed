"""Synthetic benchmark: colored shapes on black, crosses as the concept.

Each image holds a random number of non-overlapping geometric shapes (cross,
square, circle) in fixed-size boxes. An image is positive exactly when it
contains at least one cross, and the ground-truth mask marks the pixels that
lie on a cross. Because the generator knows the geometry, it can hand out
scoring functions that satisfy the bag-label rule exactly: a masked input
scores 1 iff it keeps at least one important pixel. These stand in for a
trained detector so every downstream check has an exact reference.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidParams, PackingFailure
from .masking import MaskedBatch
from .netpbm import write_pgm, write_ppm
from .partition import Region

DEFAULT_PALETTE = (
    (230, 25, 75),
    (60, 180, 75),
    (255, 225, 25),
    (0, 130, 200),
    (245, 130, 48),
    (145, 30, 180),
)

_PLACEMENT_RETRIES = 200


@dataclass(frozen=True)
class SyntheticSpec:
    """Geometry and randomness of one generated dataset."""

    height: int = 64
    width: int = 64
    shape_size: int = 8
    palette: tuple[tuple[int, int, int], ...] = DEFAULT_PALETTE
    n_shapes: tuple[int, int] = (1, 10)
    n_crosses: int | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.shape_size > min(self.height, self.width):
            raise InvalidParams("shape_size exceeds the image")
        if self.shape_size < 3:
            raise InvalidParams("shapes need at least 3 pixels per side")
        lo, hi = self.n_shapes
        if not 1 <= lo <= hi:
            raise InvalidParams("n_shapes bounds must satisfy 1 <= lo <= hi")
        max_shapes = hi if self.n_crosses is None else max(hi, self.n_crosses)
        if max_shapes * self.shape_size**2 > 0.5 * self.height * self.width:
            raise InvalidParams("total shape area may not exceed half the image")


@dataclass
class MilInstance:
    """One sample with its exact ground truth."""

    image: np.ndarray
    label: int
    truth_mask: np.ndarray
    concepts: tuple[np.ndarray, ...] = field(default_factory=tuple)
    seed: int = 0

    @property
    def importance(self) -> np.ndarray:
        """Flat per-feature importance indicators."""
        return self.truth_mask.reshape(-1)


def cross_mask(size: int) -> np.ndarray:
    """Plus-sign footprint in a size x size box."""
    thickness = max(1, round(size / 3))
    lo = (size - thickness) // 2
    hi = lo + thickness
    grid = np.zeros((size, size), dtype=bool)
    grid[:, lo:hi] = True
    grid[lo:hi, :] = True
    return grid


def square_mask(size: int) -> np.ndarray:
    return np.ones((size, size), dtype=bool)


def circle_mask(size: int) -> np.ndarray:
    center = (size - 1) / 2.0
    yy, xx = np.mgrid[0:size, 0:size]
    return (yy - center) ** 2 + (xx - center) ** 2 <= (size / 2.0) ** 2


_DISTRACTORS = (square_mask, circle_mask)


def _place_boxes(rng, count: int, spec: SyntheticSpec) -> list[tuple[int, int]]:
    """Non-overlapping top-left corners for `count` shape boxes."""
    size = spec.shape_size
    placed: list[tuple[int, int]] = []
    for _ in range(count):
        for _ in range(_PLACEMENT_RETRIES):
            r = int(rng.integers(0, spec.height - size + 1))
            c = int(rng.integers(0, spec.width - size + 1))
            if all(abs(r - pr) >= size or abs(c - pc) >= size for pr, pc in placed):
                placed.append((r, c))
                break
        else:
            raise PackingFailure(
                f"could not place {count} shapes of size {size} "
                f"in a {spec.height}x{spec.width} image"
            )
    return placed


def _instance_seed(dataset_seed: int, index: int) -> int:
    return dataset_seed * (1 << 32) + index


def _generate_one(spec: SyntheticSpec, index: int, positive: bool) -> MilInstance:
    seed = _instance_seed(spec.seed, index)
    rng = np.random.Generator(np.random.Philox(key=seed))
    lo, hi = spec.n_shapes
    total = int(rng.integers(lo, hi + 1))
    if positive:
        if spec.n_crosses is not None:
            crosses = spec.n_crosses
        else:
            crosses = int(rng.integers(1, min(3, total) + 1))
        total = max(total, crosses)
    else:
        crosses = 0

    image = np.zeros((3, spec.height, spec.width))
    truth = np.zeros((spec.height, spec.width), dtype=bool)
    concepts: list[np.ndarray] = []
    corners = _place_boxes(rng, total, spec)
    for i, (r, c) in enumerate(corners):
        color = spec.palette[int(rng.integers(0, len(spec.palette)))]
        if i < crosses:
            footprint = cross_mask(spec.shape_size)
        else:
            draw = _DISTRACTORS[int(rng.integers(0, len(_DISTRACTORS)))]
            footprint = draw(spec.shape_size)
        window = (slice(r, r + spec.shape_size), slice(c, c + spec.shape_size))
        for ch in range(3):
            image[ch][window][footprint] = color[ch] / 255.0
        if i < crosses:
            concept = np.zeros_like(truth)
            concept[window] = footprint
            concepts.append(concept)
            truth |= concept
    return MilInstance(
        image=image,
        label=int(positive),
        truth_mask=truth,
        concepts=tuple(concepts),
        seed=seed,
    )


def generate(
    spec: SyntheticSpec, count: int, positive_fraction: float = 0.5
) -> list[MilInstance]:
    """Generate a dataset, reproducible from the spec seed alone.

    The first round(count * positive_fraction) instances are positive; each
    instance draws from its own counter-based stream so any single one can
    be regenerated from its recorded seed.
    """
    if count < 1:
        raise InvalidParams("count must be >= 1")
    if not 0.0 <= positive_fraction <= 1.0:
        raise InvalidParams("positive_fraction must lie in [0, 1]")
    n_positive = round(count * positive_fraction)
    return [_generate_one(spec, i, i < n_positive) for i in range(count)]


def write_dataset(instances: list[MilInstance], out_dir) -> Path:
    """Write images (PPM), masks (PGM) and a JSON-lines manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = out / "manifest.jsonl"
    with open(manifest, "w") as fh:
        for i, inst in enumerate(instances):
            image_path = out / f"{i:05d}.ppm"
            mask_path = out / f"{i:05d}.mask.pgm"
            write_ppm(image_path, inst.image)
            write_pgm(mask_path, inst.truth_mask.astype(np.uint8) * 255)
            row = {
                "id": i,
                "label": inst.label,
                "image_path": image_path.name,
                "mask_path": mask_path.name,
                "seed": inst.seed,
            }
            fh.write(json.dumps(row) + "\n")
    return manifest


def read_manifest(manifest_path) -> list[dict]:
    path = Path(manifest_path)
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    return rows


class _IntegralImage:
    """O(1) rectangle sums over a boolean grid."""

    def __init__(self, grid: np.ndarray) -> None:
        h, w = grid.shape
        table = np.zeros((h + 1, w + 1), dtype=np.int64)
        table[1:, 1:] = grid.astype(np.int64).cumsum(0).cumsum(1)
        self._table = table
        self.total = int(table[-1, -1])
        self.flat_indices = np.flatnonzero(grid.reshape(-1))

    def count(self, region: Region) -> int:
        t = self._table
        return int(
            t[region.row_end, region.col_end]
            - t[region.row_start, region.col_end]
            - t[region.row_end, region.col_start]
            + t[region.row_start, region.col_start]
        )


class PixelMilOracle:
    """Exact bag-label scorer: 1 iff the kept set meets the important pixels.

    Works from the kept structure (never from pixel values), so the score is
    independent of the baseline. Coalition-structured batches are scored
    with one rectangle-sum per player; mask-form batches with one vectorized
    intersection test per entry.
    """

    concurrency_safe = True

    def __init__(self, importance: np.ndarray) -> None:
        grid = np.asarray(importance).astype(bool)
        if grid.ndim == 1:
            grid = grid.reshape(1, -1)
        if grid.ndim != 2:
            raise InvalidParams("importance must be a 1-D or 2-D indicator")
        self.importance = grid
        self._integral = _IntegralImage(grid)

    def _player_bits(self, players: tuple[Region, ...]) -> int:
        bits = 0
        for i, player in enumerate(players):
            if self._integral.count(player) > 0:
                bits |= 1 << i
        return bits

    def evaluate_batch(self, batch: MaskedBatch) -> np.ndarray:
        if batch.grid != self.importance.shape:
            raise InvalidParams(
                f"oracle grid {self.importance.shape} != batch grid {batch.grid}"
            )
        if batch.players is not None and batch.coalition_bits is not None:
            important = self._player_bits(batch.players)
            return ((batch.coalition_bits & important) != 0).astype(np.float64)
        hits = batch.kept_matrix[:, self._integral.flat_indices]
        return hits.any(axis=1).astype(np.float64)


class PatchMilOracle:
    """Scorer that needs a contiguous patch of one concept to fire.

    A masked input scores 1 iff some kept region contains at least
    ``patch_threshold`` pixels of a single concept. With threshold 1 this
    reduces to the exact pixel scorer; with larger thresholds it mimics
    detectors that cannot recognize small fragments. Mask-form batches have
    no region structure, so the whole kept set counts as one region there.
    """

    concurrency_safe = True

    def __init__(self, concepts: tuple[np.ndarray, ...], patch_threshold: int) -> None:
        if patch_threshold < 1:
            raise InvalidParams("patch_threshold must be >= 1")
        self.patch_threshold = patch_threshold
        self._integrals = [_IntegralImage(np.asarray(c).astype(bool)) for c in concepts]
        self._concept_columns = [ii.flat_indices for ii in self._integrals]
        shapes = {np.asarray(c).shape for c in concepts}
        if len(shapes) > 1:
            raise InvalidParams("concepts must share one grid shape")
        self.grid = shapes.pop() if shapes else None

    def _region_qualifies(self, region: Region) -> bool:
        return any(
            ii.count(region) >= self.patch_threshold for ii in self._integrals
        )

    def evaluate_batch(self, batch: MaskedBatch) -> np.ndarray:
        if self.grid is not None and batch.grid != self.grid:
            raise InvalidParams(
                f"oracle grid {self.grid} != batch grid {batch.grid}"
            )
        if batch.players is not None and batch.coalition_bits is not None:
            qualifying = 0
            for i, player in enumerate(batch.players):
                if self._region_qualifies(player):
                    qualifying |= 1 << i
            return ((batch.coalition_bits & qualifying) != 0).astype(np.float64)
        if batch.has_regions:
            return np.array(
                [
                    1.0 if any(self._region_qualifies(r) for r in entry) else 0.0
                    for entry in batch.kept_regions
                ]
            )
        scores = np.zeros(len(batch))
        for columns in self._concept_columns:
            kept = batch.kept_matrix[:, columns].sum(axis=1)
            scores = np.maximum(
                scores, (kept >= self.patch_threshold).astype(np.float64)
            )
        return scores


def pixel_mil_oracle(instance: MilInstance) -> PixelMilOracle:
    """Exact scorer bound to one instance's ground truth."""
    return PixelMilOracle(instance.truth_mask)


def patch_mil_oracle(instance: MilInstance, patch_threshold: int) -> PatchMilOracle:
    """Fragment-blind scorer bound to one instance's concepts."""
    return PatchMilOracle(instance.concepts, patch_threshold)
