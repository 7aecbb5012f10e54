"""Input validation helpers.

Frames are plain numpy arrays: 16-bit grayscale rasters are ``uint16`` of
shape (height, width); continuous rasters are float64 of the same shape with
finite, non-negative values. These helpers normalize/verify whatever the
caller passes and raise early with a message naming the offending argument.
"""

import numpy as np


def check_gray16(frame, name: str = "frame") -> np.ndarray:
    """Validate a 16-bit grayscale raster and return it as a uint16 array."""
    arr = np.asarray(frame)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D (height, width), got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{name} must be non-empty")
    if arr.dtype != np.uint16:
        if not np.issubdtype(arr.dtype, np.integer):
            raise ValueError(f"{name} must hold integer intensities, got dtype {arr.dtype}")
        if arr.min() < 0 or arr.max() > 65535:
            raise ValueError(f"{name} intensities must lie in [0, 65535]")
        arr = arr.astype(np.uint16)
    return arr


def check_continuous(image, name: str = "image") -> np.ndarray:
    """Validate a continuous (pre-quantization) raster: finite and >= 0."""
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D (height, width), got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{name} must be non-empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    if arr.min() < 0:
        raise ValueError(f"{name} contains negative values")
    return arr


def check_same_shape(frame1: np.ndarray, frame2: np.ndarray) -> None:
    if frame1.shape != frame2.shape:
        raise ValueError(
            f"frame shapes differ: {frame1.shape} vs {frame2.shape}"
        )


def check_displacements(displacements, n_kernels: int) -> np.ndarray:
    """Validate a per-kernel displacement field of shape (n_kernels, 2)."""
    arr = np.asarray(displacements, dtype=np.float64)
    if arr.shape != (n_kernels, 2):
        raise ValueError(
            f"displacements must have shape ({n_kernels}, 2), got {arr.shape}"
        )
    if not np.all(np.isfinite(arr)):
        raise ValueError("displacements contain non-finite values")
    return arr


def check_positive(value: float, name: str) -> float:
    value = float(value)
    if not value > 0:
        raise ValueError(f"{name} must be > 0, got {value}")
    return value
