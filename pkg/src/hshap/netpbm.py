"""Binary PPM/PGM readers and writers (8-bit, maxval 255)."""

from __future__ import annotations

import numpy as np

from .errors import InvalidParams


def _read_header(fh, magic: bytes) -> tuple[int, int]:
    """Parse 'P5'/'P6' headers, tolerating comment lines."""
    if fh.read(2) != magic:
        raise InvalidParams(f"expected {magic.decode()} file")
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
            raise InvalidParams("truncated netpbm header")
        fields.append(int(token))
    width, height, maxval = fields
    if maxval != 255:
        raise InvalidParams(f"only 8-bit files are supported, maxval={maxval}")
    return width, height


def to_uint8(image: np.ndarray) -> np.ndarray:
    if image.dtype == np.uint8:
        return image
    return np.round(np.clip(image, 0.0, 1.0) * 255.0).astype(np.uint8)


def write_ppm(path, image: np.ndarray) -> None:
    """Write a (3, h, w) image; floats are read as [0, 1] intensities."""
    arr = np.asarray(image)
    if arr.ndim != 3 or arr.shape[0] != 3:
        raise InvalidParams(f"need a (3, h, w) image, got {arr.shape}")
    pixels = to_uint8(arr)
    _, h, w = pixels.shape
    with open(path, "wb") as fh:
        fh.write(b"P6\n%d %d\n255\n" % (w, h))
        fh.write(np.moveaxis(pixels, 0, -1).tobytes(order="C"))


def read_ppm(path) -> np.ndarray:
    """Read a binary PPM as (3, h, w) float64 in [0, 1]."""
    with open(path, "rb") as fh:
        w, h = _read_header(fh, b"P6")
        raw = np.frombuffer(fh.read(3 * w * h), dtype=np.uint8)
    if raw.size != 3 * w * h:
        raise InvalidParams("truncated PPM payload")
    return np.moveaxis(raw.reshape(h, w, 3), -1, 0).astype(np.float64) / 255.0


def write_pgm(path, gray: np.ndarray) -> None:
    """Write a (h, w) grayscale image; floats are read as [0, 1]."""
    arr = np.asarray(gray)
    if arr.ndim != 2:
        raise InvalidParams(f"need a (h, w) image, got {arr.shape}")
    pixels = to_uint8(arr)
    h, w = pixels.shape
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (w, h))
        fh.write(pixels.tobytes(order="C"))


def read_pgm(path) -> np.ndarray:
    """Read a binary PGM as (h, w) uint8."""
    with open(path, "rb") as fh:
        w, h = _read_header(fh, b"P5")
        raw = np.frombuffer(fh.read(w * h), dtype=np.uint8)
    if raw.size != w * h:
        raise InvalidParams("truncated PGM payload")
    return raw.reshape(h, w).copy()
