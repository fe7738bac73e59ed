"""Minimal binary PGM/PPM readers (8-bit), enough to load fixtures."""

from __future__ import annotations

import numpy as np


def _header(fh, magic: bytes) -> tuple[int, int]:
    if fh.read(2) != magic:
        raise ValueError(f"expected {magic.decode()} file")
    fields: list[int] = []
    while len(fields) < 3:
        token = b""
        ch = fh.read(1)
        while ch.isspace():
            ch = fh.read(1)
        if ch == b"#":
            while ch not in (b"\n", b""):
                ch = fh.read(1)
            continue
        while ch and not ch.isspace():
            token += ch
            ch = fh.read(1)
        if not token:
            raise ValueError("truncated header")
        fields.append(int(token))
    width, height, maxval = fields
    if maxval != 255:
        raise ValueError("only 8-bit files are supported")
    return width, height


def read_pgm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        w, h = _header(fh, b"P5")
        raw = np.frombuffer(fh.read(w * h), dtype=np.uint8)
    if raw.size != w * h:
        raise ValueError("truncated payload")
    return raw.reshape(h, w).copy()


def read_ppm(path) -> np.ndarray:
    """(3, h, w) float64 in [0, 1]."""
    with open(path, "rb") as fh:
        w, h = _header(fh, b"P6")
        raw = np.frombuffer(fh.read(3 * w * h), dtype=np.uint8)
    if raw.size != 3 * w * h:
        raise ValueError("truncated payload")
    return np.moveaxis(raw.reshape(h, w, 3), -1, 0).astype(np.float64) / 255.0
