"""Recursive partition trees over feature grids.

Inputs are treated as 2-D feature grids (a vector is a 1-row grid; channels
are never split). A node is divided into gamma symmetric parts: halves along
the longest axis for gamma=2, quadrants for gamma=4. Odd extents put the
smaller part first; an axis of extent 1 is not split, so a quadrant split of
a strip degenerates to two children.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

from .errors import DegenerateRegion, InvalidParams


@dataclass(frozen=True, order=True)
class Region:
    """Rectangular block of features, half-open in both axes."""

    row_start: int
    row_end: int
    col_start: int
    col_end: int

    def __post_init__(self) -> None:
        if self.row_start < 0 or self.col_start < 0:
            raise InvalidParams(f"negative region bounds: {self}")
        if self.row_end <= self.row_start or self.col_end <= self.col_start:
            raise InvalidParams(f"empty region: {self}")

    @classmethod
    def interval(cls, start: int, end: int) -> "Region":
        """Region over a 1-D index range [start, end)."""
        return cls(0, 1, start, end)

    @classmethod
    def full(cls, height: int, width: int) -> "Region":
        return cls(0, height, 0, width)

    @property
    def height(self) -> int:
        return self.row_end - self.row_start

    @property
    def width(self) -> int:
        return self.col_end - self.col_start

    @property
    def area(self) -> int:
        return self.height * self.width

    @property
    def row_slice(self) -> slice:
        return slice(self.row_start, self.row_end)

    @property
    def col_slice(self) -> slice:
        return slice(self.col_start, self.col_end)

    def contains(self, other: "Region") -> bool:
        return (
            self.row_start <= other.row_start
            and other.row_end <= self.row_end
            and self.col_start <= other.col_start
            and other.col_end <= self.col_end
        )

    def within(self, height: int, width: int) -> bool:
        return self.row_end <= height and self.col_end <= width

    def to_list(self) -> list[int]:
        return [self.row_start, self.row_end, self.col_start, self.col_end]


def _halve(start: int, end: int) -> tuple[int, int, int]:
    """Split [start, end) at the floor midpoint; the first part is smaller."""
    mid = start + (end - start) // 2
    return start, mid, end


def split(region: Region, gamma: int) -> list[Region]:
    """Divide a region into gamma disjoint parts covering it exactly.

    gamma=2 halves the longest axis; gamma=4 produces quadrants ordered
    top-left, top-right, bottom-left, bottom-right. When one axis has
    extent 1 a quadrant split degenerates to the two halves of the other
    axis.
    """
    if region.area <= 1:
        raise DegenerateRegion(f"cannot split unit region {region}")
    if gamma not in (2, 4):
        raise InvalidParams(f"gamma must be 2 or 4, got {gamma}")

    rows_splittable = region.height > 1
    cols_splittable = region.width > 1

    if gamma == 2:
        if rows_splittable and region.height >= region.width:
            r0, rm, r1 = _halve(region.row_start, region.row_end)
            return [
                Region(r0, rm, region.col_start, region.col_end),
                Region(rm, r1, region.col_start, region.col_end),
            ]
        c0, cm, c1 = _halve(region.col_start, region.col_end)
        return [
            Region(region.row_start, region.row_end, c0, cm),
            Region(region.row_start, region.row_end, cm, c1),
        ]

    if not rows_splittable:
        return split(region, 2)
    if not cols_splittable:
        r0, rm, r1 = _halve(region.row_start, region.row_end)
        return [
            Region(r0, rm, region.col_start, region.col_end),
            Region(rm, r1, region.col_start, region.col_end),
        ]
    r0, rm, r1 = _halve(region.row_start, region.row_end)
    c0, cm, c1 = _halve(region.col_start, region.col_end)
    return [
        Region(r0, rm, c0, cm),
        Region(r0, rm, cm, c1),
        Region(rm, r1, c0, cm),
        Region(rm, r1, cm, c1),
    ]


def is_leaf(region: Region, min_feature_size: int) -> bool:
    """True when the region is at or below the minimal feature size.

    The size is an area threshold: a leaf covers at most this many features.
    """
    if min_feature_size < 1:
        raise InvalidParams("min_feature_size must be >= 1")
    return region.area <= min_feature_size


@dataclass(frozen=True)
class PartitionTree:
    """Lazy recursive gamma-partition of a root region."""

    root: Region
    gamma: int
    min_feature_size: int = 1

    def __post_init__(self) -> None:
        if self.gamma not in (2, 4):
            raise InvalidParams(f"gamma must be 2 or 4, got {self.gamma}")
        if self.min_feature_size < 1:
            raise InvalidParams("min_feature_size must be >= 1")

    def is_leaf(self, region: Region) -> bool:
        return is_leaf(region, self.min_feature_size)

    def children(self, region: Region) -> list[Region]:
        if self.is_leaf(region):
            return []
        return split(region, self.gamma)

    def iter_nodes(self) -> Iterator[Region]:
        """All nodes in breadth-first order."""
        level = [self.root]
        while level:
            nxt: list[Region] = []
            for node in level:
                yield node
                nxt.extend(self.children(node))
            level = nxt

    def num_nodes(self) -> int:
        return sum(1 for _ in self.iter_nodes())

    def depth(self) -> int:
        """Number of edges on the longest root-to-leaf path."""
        depth = 0
        level = [self.root]
        while True:
            nxt = [c for node in level for c in self.children(node)]
            if not nxt:
                return depth
            depth += 1
            level = nxt


def tree_depth_bound(n: int, gamma: int) -> int:
    """log_gamma(n) for n an exact power of gamma."""
    if n < 1 or gamma < 2:
        raise InvalidParams("need n >= 1 and gamma >= 2")
    levels = round(math.log(n) / math.log(gamma))
    if gamma**levels != n:
        raise InvalidParams(f"{n} is not a power of {gamma}")
    return levels
