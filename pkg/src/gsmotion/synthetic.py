"""Synthetic validation scenes: a known kernel set plus a known displacement.

A scene renders to a quantized 16-bit frame; the second frame of a pair is
produced by shifting every kernel center by the scene's applied motion
before rendering, so the pair's ground-truth displacement is exact.

Sign convention: +x right, +y down, so "left" and "up" are negative
displacements.
"""

from dataclasses import dataclass, field

import numpy as np

from . import configfile
from .exceptions import ConfigError
from .image import quantize
from .kernels import KernelSet, render

SCENE_KEYS = frozenset({"width", "height", "coords", "kernel", "motion_u", "motion_v"})
COORD_MODES = ("pixel", "normalized")


@dataclass
class SceneSpec:
    """Ground-truth scene: raster size, kernels (pixel units), applied motion."""

    width: int
    height: int
    kernels: KernelSet
    motion: tuple[float, float] = (0.0, 0.0)

    def validate(self) -> "SceneSpec":
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"scene dimensions must be positive, got {self.width}x{self.height}")
        if len(self.kernels) == 0:
            raise ValueError("scene must define at least one kernel")
        self.kernels.validate()
        if not np.all(np.isfinite(self.motion)):
            raise ValueError("applied motion must be finite")
        return self


def normalized_to_pixel(x: float, y: float, width: int, height: int) -> tuple[float, float]:
    """Map a normalized center in [-1, 1] per axis onto the pixel grid.

    (0, 0) maps to the raster center ((width-1)/2, (height-1)/2).
    """
    return (x + 1.0) / 2.0 * (width - 1), (y + 1.0) / 2.0 * (height - 1)


def make_frame(spec: SceneSpec, apply_motion: bool = False) -> np.ndarray:
    """Render the scene (optionally displaced by its motion) and quantize."""
    spec.validate()
    kernels = spec.kernels.translated(np.asarray(spec.motion)) if apply_motion else spec.kernels
    return quantize(render(kernels, spec.width, spec.height))


def make_pair(spec: SceneSpec):
    """Return (frame1, frame2, applied_motion) for the scene."""
    frame1 = make_frame(spec, apply_motion=False)
    frame2 = make_frame(spec, apply_motion=True)
    return frame1, frame2, (float(spec.motion[0]), float(spec.motion[1]))


def read_scene_config(path) -> SceneSpec:
    """Load a SceneSpec from a flat key-value config file.

    Keys: width, height, coords (pixel|normalized, default pixel), repeated
    ``kernel = x y sigma_x sigma_y rho c`` lines, motion_u, motion_v.
    With ``coords = normalized`` the kernel x/y are normalized centers in
    [-1, 1]; sigmas are always pixels.
    """
    pairs = configfile.parse_config(path)
    configfile.reject_unknown(pairs, SCENE_KEYS, path)
    values = {key: value for key, value in pairs if key != "kernel"}

    for key in ("width", "height"):
        if key not in values:
            raise ConfigError(f"{path}: missing required key '{key}'")
    width = configfile.parse_int("width", values["width"], path)
    height = configfile.parse_int("height", values["height"], path)

    coords = values.get("coords", "pixel")
    if coords not in COORD_MODES:
        raise ConfigError(f"{path}: key 'coords' must be one of {COORD_MODES}, got {coords!r}")

    rows = []
    for key, value in pairs:
        if key != "kernel":
            continue
        fields = value.split()
        if len(fields) != 6:
            raise ConfigError(
                f"{path}: key 'kernel' expects 6 numbers (x y sigma_x sigma_y rho c), "
                f"got {value!r}"
            )
        x, y, sigma_x, sigma_y, rho, c = (
            configfile.parse_float("kernel", f, path) for f in fields
        )
        if coords == "normalized":
            x, y = normalized_to_pixel(x, y, width, height)
        rows.append([x, y, sigma_x, sigma_y, rho, c])
    if not rows:
        raise ConfigError(f"{path}: scene defines no 'kernel' entries")

    motion = (
        configfile.parse_float("motion_u", values.get("motion_u", "0"), path),
        configfile.parse_float("motion_v", values.get("motion_v", "0"), path),
    )
    spec = SceneSpec(width=width, height=height, kernels=KernelSet(rows), motion=motion)
    return spec.validate()


def write_scene_config(path, spec: SceneSpec, header: str | None = None) -> None:
    """Write a SceneSpec (pixel units) back to the config format."""
    pairs = [
        ("width", str(spec.width)),
        ("height", str(spec.height)),
        ("coords", "pixel"),
    ]
    pairs.extend(
        ("kernel", f"{k.x:.17g} {k.y:.17g} {k.sigma_x:.17g} {k.sigma_y:.17g} "
                   f"{k.rho:.17g} {k.intensity:.17g}")
        for k in spec.kernels
    )
    pairs.append(("motion_u", f"{spec.motion[0]:.17g}"))
    pairs.append(("motion_v", f"{spec.motion[1]:.17g}"))
    configfile.write_config(path, pairs, header=header)
