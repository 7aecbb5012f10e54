"""16-bit grayscale rasters: normalization, quantization and PGM I/O.

Intensity convention: stored frames are uint16 in [0, 65535]; the optimizer
works on normalized float64 intensities where 65535 maps to 1.0. Files use
binary PGM (P5) with maxval 65535 and big-endian sample order, which
round-trips bit-exactly.
"""

import numpy as np

from .validation import check_continuous, check_gray16

GRAY_MAX = 65535


def normalize(frame) -> np.ndarray:
    """Map a uint16 raster to float64 normalized intensities in [0, 1]."""
    return check_gray16(frame).astype(np.float64) / GRAY_MAX


def quantize(image) -> np.ndarray:
    """Quantize a continuous raster to uint16.

    Each value v maps to clamp(round(v * 65535), 0, 65535) with rounding
    half away from zero (values are non-negative, so floor(x + 0.5)).
    """
    arr = check_continuous(image)
    scaled = np.floor(arr * GRAY_MAX + 0.5)
    return np.clip(scaled, 0, GRAY_MAX).astype(np.uint16)


def write_pgm(path, frame) -> None:
    """Write a uint16 raster as binary PGM (P5, maxval 65535, big-endian)."""
    arr = check_gray16(frame)
    height, width = arr.shape
    header = f"P5\n{width} {height}\n{GRAY_MAX}\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(arr.astype(">u2").tobytes())


def read_pgm(path) -> np.ndarray:
    """Read a 16-bit binary PGM written by :func:`write_pgm` (or compatible)."""
    with open(path, "rb") as fh:
        data = fh.read()

    tokens, pos = [], 0
    while len(tokens) < 4:
        if pos >= len(data):
            raise ValueError(f"{path}: truncated PGM header")
        ch = data[pos : pos + 1]
        if ch.isspace():
            pos += 1
        elif ch == b"#":
            eol = data.find(b"\n", pos)
            pos = len(data) if eol < 0 else eol + 1
        else:
            end = pos
            while end < len(data) and not data[end : end + 1].isspace():
                end += 1
            tokens.append(data[pos:end])
            pos = end
    pos += 1  # single whitespace byte separates header from raster data

    if tokens[0] != b"P5":
        raise ValueError(f"{path}: not a binary PGM (magic {tokens[0]!r})")
    try:
        width, height, maxval = (int(t) for t in tokens[1:4])
    except ValueError as exc:
        raise ValueError(f"{path}: malformed PGM header") from exc
    if width <= 0 or height <= 0:
        raise ValueError(f"{path}: invalid dimensions {width}x{height}")
    if maxval != GRAY_MAX:
        raise ValueError(f"{path}: expected maxval {GRAY_MAX}, got {maxval}")

    expected = width * height * 2
    raster = data[pos : pos + expected]
    if len(raster) != expected:
        raise ValueError(f"{path}: expected {expected} raster bytes, got {len(raster)}")
    return np.frombuffer(raster, dtype=">u2").reshape(height, width).astype(np.uint16)
