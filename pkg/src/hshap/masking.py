"""Baselines and masked-input construction.

A masked input keeps the original sample on a set of regions and takes the
baseline value everywhere else. The baseline is the per-feature mean of a
training set (or any fixed array of the input's shape). Batches of masked
inputs share the sample and baseline and carry their kept sets in whichever
form is cheapest: region lists, a boolean feature matrix, or the coalition
structure of a node game.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import EmptyDataset, InvalidParams, OutOfBounds, ShapeMismatch
from .partition import Region

_BASELINE_MAGIC = b"HSBL"
_BASELINE_VERSION = 1


def to_chw(x: np.ndarray) -> np.ndarray:
    """Normalize a sample to (channels, height, width) float64.

    Vectors become 1x1xN grids, single-channel images 1xHxW.
    """
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        return arr.reshape(1, 1, -1)
    if arr.ndim == 2:
        return arr.reshape(1, *arr.shape)
    if arr.ndim == 3:
        return arr
    raise InvalidParams(f"samples must have 1-3 dims, got shape {arr.shape}")


def grid_shape(x: np.ndarray) -> tuple[int, int]:
    """(height, width) of the feature grid of a normalized sample."""
    return to_chw(x).shape[1:]


@dataclass(frozen=True)
class Baseline:
    """Per-feature reference values substituted for removed features."""

    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=np.float64)
        if not np.all(np.isfinite(vals)):
            raise InvalidParams("baseline values must be finite")
        object.__setattr__(self, "values", vals)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape


def compute_baseline(samples: Iterable[np.ndarray]) -> Baseline:
    """Streaming per-feature mean over a dataset of equally shaped samples."""
    mean: np.ndarray | None = None
    count = 0
    for sample in samples:
        arr = np.asarray(sample, dtype=np.float64)
        if mean is None:
            mean = arr.copy()
            count = 1
            continue
        if arr.shape != mean.shape:
            raise ShapeMismatch(f"sample shape {arr.shape} != {mean.shape}")
        count += 1
        mean += (arr - mean) / count
    if mean is None:
        raise EmptyDataset("no samples to average")
    return Baseline(mean)


def save_baseline(path, baseline: Baseline) -> None:
    """Write a baseline to the flat binary format.

    Header: magic "HSBL", version u16, number of dims u16, then one u32
    extent per dim, all little-endian; payload is float64 row-major.
    """
    vals = baseline.values
    header = _BASELINE_MAGIC + struct.pack("<HH", _BASELINE_VERSION, vals.ndim)
    header += struct.pack(f"<{vals.ndim}I", *vals.shape)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(vals.astype("<f8").tobytes(order="C"))


def load_baseline(path) -> Baseline:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _BASELINE_MAGIC:
            raise InvalidParams(f"not a baseline file (magic {magic!r})")
        version, ndim = struct.unpack("<HH", fh.read(4))
        if version != _BASELINE_VERSION:
            raise InvalidParams(f"unsupported baseline version {version}")
        shape = struct.unpack(f"<{ndim}I", fh.read(4 * ndim))
        payload = fh.read()
    values = np.frombuffer(payload, dtype="<f8").reshape(shape).copy()
    return Baseline(values)


def _check_bounds(regions: Sequence[Region], height: int, width: int) -> None:
    for region in regions:
        if not region.within(height, width):
            raise OutOfBounds(f"{region} exceeds {height}x{width} grid")


def baseline_array(baseline, like: np.ndarray) -> np.ndarray:
    """Baseline as a normalized (c,h,w) array matching a sample; None -> zeros."""
    if baseline is None:
        return np.zeros_like(to_chw(like))
    vals = baseline.values if isinstance(baseline, Baseline) else np.asarray(baseline)
    out = to_chw(vals)
    if out.shape != to_chw(like).shape:
        raise ShapeMismatch(f"baseline shape {out.shape} != sample {to_chw(like).shape}")
    return out


@dataclass
class MaskedInput:
    """A sample restricted to a kept region set, baseline elsewhere."""

    x: np.ndarray
    baseline: np.ndarray
    kept: tuple[Region, ...]
    _data: np.ndarray | None = field(default=None, repr=False)

    @property
    def data(self) -> np.ndarray:
        """The masked array, materialized on first access."""
        if self._data is None:
            out = self.baseline.copy()
            for region in self.kept:
                sel = (slice(None), region.row_slice, region.col_slice)
                out[sel] = self.x[sel]
            self._data = out
        return self._data


def mask(x: np.ndarray, kept: Sequence[Region], baseline) -> MaskedInput:
    """Build the input that equals x on the kept regions, baseline elsewhere."""
    xc = to_chw(x)
    base = baseline_array(baseline, x)
    _check_bounds(kept, xc.shape[1], xc.shape[2])
    return MaskedInput(xc, base, tuple(kept))


def regions_to_feature_mask(
    regions: Sequence[Region], height: int, width: int
) -> np.ndarray:
    """Flat boolean indicator over the h*w feature grid."""
    grid = np.zeros((height, width), dtype=bool)
    for region in regions:
        grid[region.row_slice, region.col_slice] = True
    return grid.reshape(-1)


class MaskedBatch:
    """A batch of masked inputs over one sample and one baseline.

    Three construction routes cover the call sites:

    - ``from_coalitions``: all requested coalitions of a node game over a
      fixed player list; the bit pattern of each coalition selects players.
    - ``from_regions``: one explicit region list per batch entry.
    - ``from_feature_masks``: one boolean kept-indicator per entry over the
      flat feature grid (used for top-k ablation and randomized coalitions).

    Pixel data is materialized lazily; geometric scoring functions can work
    from the kept structure alone.
    """

    def __init__(
        self,
        x: np.ndarray,
        baseline: np.ndarray,
        *,
        players: tuple[Region, ...] | None = None,
        coalition_bits: np.ndarray | None = None,
        kept_regions: tuple[tuple[Region, ...], ...] | None = None,
        kept_matrix: np.ndarray | None = None,
    ) -> None:
        self.x = x
        self.baseline = baseline
        self.players = players
        self.coalition_bits = coalition_bits
        self._kept_regions = kept_regions
        self._kept_matrix = kept_matrix
        self._data: np.ndarray | None = None
        if coalition_bits is not None:
            self._size = len(coalition_bits)
        elif kept_regions is not None:
            self._size = len(kept_regions)
        elif kept_matrix is not None:
            self._size = kept_matrix.shape[0]
        else:
            raise InvalidParams("batch needs coalitions, regions, or masks")

    @classmethod
    def from_coalitions(
        cls,
        x: np.ndarray,
        baseline,
        players: Sequence[Region],
        coalition_bits: np.ndarray,
    ) -> "MaskedBatch":
        xc = to_chw(x)
        base = baseline_array(baseline, x)
        _check_bounds(players, xc.shape[1], xc.shape[2])
        return cls(
            xc,
            base,
            players=tuple(players),
            coalition_bits=np.asarray(coalition_bits, dtype=np.int64),
        )

    @classmethod
    def from_regions(
        cls, x: np.ndarray, baseline, kept: Sequence[Sequence[Region]]
    ) -> "MaskedBatch":
        xc = to_chw(x)
        base = baseline_array(baseline, x)
        kept_tuples = tuple(tuple(entry) for entry in kept)
        for entry in kept_tuples:
            _check_bounds(entry, xc.shape[1], xc.shape[2])
        return cls(xc, base, kept_regions=kept_tuples)

    @classmethod
    def from_feature_masks(
        cls, x: np.ndarray, baseline, kept_matrix: np.ndarray
    ) -> "MaskedBatch":
        xc = to_chw(x)
        base = baseline_array(baseline, x)
        matrix = np.asarray(kept_matrix, dtype=bool)
        if matrix.ndim != 2 or matrix.shape[1] != xc.shape[1] * xc.shape[2]:
            raise ShapeMismatch(
                f"kept matrix must be (batch, {xc.shape[1] * xc.shape[2]})"
            )
        return cls(xc, base, kept_matrix=matrix)

    @classmethod
    def concat(cls, batches: Sequence["MaskedBatch"]) -> "MaskedBatch":
        """Merge batches over the same sample into one call-sized batch."""
        if not batches:
            raise EmptyDataset("nothing to concatenate")
        first = batches[0]
        kept_regions = tuple(
            entry for batch in batches for entry in batch.kept_regions
        )
        return cls(first.x, first.baseline, kept_regions=kept_regions)

    def __len__(self) -> int:
        return self._size

    @property
    def grid(self) -> tuple[int, int]:
        return self.x.shape[1], self.x.shape[2]

    @property
    def num_features(self) -> int:
        return self.x.shape[1] * self.x.shape[2]

    @property
    def has_regions(self) -> bool:
        """True when per-entry region structure is available."""
        return self._kept_regions is not None or (
            self.players is not None and self.coalition_bits is not None
        )

    @property
    def kept_regions(self) -> tuple[tuple[Region, ...], ...]:
        """Per-entry region lists (derived from coalition bits on demand)."""
        if self._kept_regions is None:
            if self.players is None or self.coalition_bits is None:
                raise InvalidParams("batch built from masks has no region lists")
            players = self.players
            self._kept_regions = tuple(
                tuple(players[i] for i in range(len(players)) if bits >> i & 1)
                for bits in self.coalition_bits
            )
        return self._kept_regions

    @property
    def kept_matrix(self) -> np.ndarray:
        """(batch, features) boolean matrix of kept features."""
        if self._kept_matrix is None:
            h, w = self.grid
            if self.players is not None and self.coalition_bits is not None:
                p = len(self.players)
                player_masks = np.stack(
                    [
                        regions_to_feature_mask([pl], h, w).astype(np.uint8)
                        for pl in self.players
                    ]
                )
                bit_cols = (
                    (self.coalition_bits[:, None] >> np.arange(p)) & 1
                ).astype(np.uint8)
                self._kept_matrix = (bit_cols @ player_masks) > 0
            else:
                self._kept_matrix = np.stack(
                    [
                        regions_to_feature_mask(entry, h, w)
                        for entry in self.kept_regions
                    ]
                )
        return self._kept_matrix

    @property
    def data(self) -> np.ndarray:
        """(batch, channels, height, width) masked pixel data."""
        if self._data is None:
            c, h, w = self.x.shape
            x_flat = self.x.reshape(c, -1)
            base_flat = self.baseline.reshape(c, -1)
            kept = self.kept_matrix[:, None, :]
            self._data = np.where(kept, x_flat, base_flat).reshape(-1, c, h, w)
        return self._data

    def inputs(self) -> Iterator[MaskedInput]:
        """View the batch as individual masked inputs."""
        for entry in self.kept_regions:
            yield MaskedInput(self.x, self.baseline, entry)


def single(masked: MaskedInput) -> MaskedBatch:
    """Wrap one masked input as a batch of size 1."""
    return MaskedBatch(
        masked.x, masked.baseline, kept_regions=(tuple(masked.kept),)
    )
