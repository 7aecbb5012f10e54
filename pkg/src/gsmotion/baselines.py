"""Classical optical-flow baselines: Lucas-Kanade, Horn-Schunck, phase-based.

All three consume a pair of 16-bit grayscale frames (normalized internally)
and produce a dense :class:`FlowField` in pixels/frame, +x right, +y down.
Spatial derivatives use central differences with replicated borders on the
temporal mean image; the temporal derivative is the plain frame difference.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import uniform_filter
from scipy.signal import fftconvolve

from .exceptions import ConfigError
from .image import normalize
from .validation import check_same_shape


@dataclass
class FlowField:
    """Dense per-pixel flow with a validity mask."""

    u: np.ndarray
    v: np.ndarray
    valid: np.ndarray
    energy_trace: np.ndarray | None = None

    @property
    def shape(self) -> tuple[int, int]:
        return self.u.shape

    def median_valid(self) -> np.ndarray:
        """Median (u, v) over valid pixels; NaNs if nothing is valid."""
        if not self.valid.any():
            return np.array([math.nan, math.nan])
        return np.array([np.median(self.u[self.valid]), np.median(self.v[self.valid])])

    def mean_valid(self) -> np.ndarray:
        if not self.valid.any():
            return np.array([math.nan, math.nan])
        return np.array([self.u[self.valid].mean(), self.v[self.valid].mean()])


def _central_diff(img: np.ndarray):
    """Central-difference spatial gradients with replicated borders."""
    padded = np.pad(img, 1, mode="edge")
    gx = (padded[1:-1, 2:] - padded[1:-1, :-2]) / 2.0
    gy = (padded[2:, 1:-1] - padded[:-2, 1:-1]) / 2.0
    return gx, gy


def _prepare(frame1, frame2):
    f1 = normalize(frame1)
    f2 = normalize(frame2)
    check_same_shape(f1, f2)
    gx, gy = _central_diff((f1 + f2) / 2.0)
    return f1, f2, gx, gy, f2 - f1


def lucas_kanade(
    frame1,
    frame2,
    window: int = 9,
    min_eigenvalue: float = 1e-5,
    max_condition: float = 1e3,
) -> FlowField:
    """Local least-squares flow over a square window of constancy constraints.

    Each pixel solves the stacked brightness-constancy equations
    gx*u + gy*v + gt = 0 over its window. Pixels whose structure tensor is
    ill-conditioned (smallest eigenvalue below ``min_eigenvalue`` or
    eigenvalue ratio above ``max_condition``) and pixels within half a window
    of the border are masked invalid.
    """
    if window < 3 or window % 2 == 0:
        raise ValueError(f"window must be odd and >= 3, got {window}")
    _, _, gx, gy, gt = _prepare(frame1, frame2)

    def window_sum(a):
        return uniform_filter(a, size=window, mode="constant") * (window * window)

    sxx = window_sum(gx * gx)
    sxy = window_sum(gx * gy)
    syy = window_sum(gy * gy)
    sxt = window_sum(gx * gt)
    syt = window_sum(gy * gt)

    half_trace = (sxx + syy) / 2.0
    radius = np.sqrt(((sxx - syy) / 2.0) ** 2 + sxy**2)
    lam_max = half_trace + radius
    lam_min = half_trace - radius

    valid = (lam_min > min_eigenvalue) & (lam_max <= max_condition * lam_min)
    margin = window // 2
    border = np.zeros_like(valid)
    border[margin : valid.shape[0] - margin, margin : valid.shape[1] - margin] = True
    valid &= border

    det = sxx * syy - sxy**2
    safe_det = np.where(valid, det, 1.0)
    u = np.where(valid, (-syy * sxt + sxy * syt) / safe_det, 0.0)
    v = np.where(valid, (sxy * sxt - sxx * syt) / safe_det, 0.0)
    return FlowField(u=u, v=v, valid=valid)


def _hs_energy(u, v, gx, gy, gt, smoothness) -> float:
    data = ((gx * u + gy * v + gt) ** 2).sum()
    du_x = u[:, 1:] - u[:, :-1]
    du_y = u[1:, :] - u[:-1, :]
    dv_x = v[:, 1:] - v[:, :-1]
    dv_y = v[1:, :] - v[:-1, :]
    smooth = (du_x**2).sum() + (du_y**2).sum() + (dv_x**2).sum() + (dv_y**2).sum()
    return float(data + smoothness * smooth)


def _neighbor_sums(a: np.ndarray):
    padded = np.pad(a, 1, mode="constant")
    return padded[:-2, 1:-1] + padded[2:, 1:-1] + padded[1:-1, :-2] + padded[1:-1, 2:]


def horn_schunck(frame1, frame2, smoothness: float = 1e-3, iterations: int = 1500) -> FlowField:
    """Global variational flow: quadratic data term plus gradient smoothness.

    Minimizes the discretized energy (linearized constancy residual squared
    plus ``smoothness`` times the squared forward-difference flow gradients)
    by checkerboard block coordinate descent: each half-sweep solves the 2x2
    per-pixel systems of one color exactly, so the energy never increases.
    The per-sweep energies are recorded in ``energy_trace``. The returned
    flow is dense (all pixels valid).
    """
    if smoothness <= 0:
        raise ValueError(f"smoothness must be > 0, got {smoothness}")
    if iterations <= 0:
        raise ValueError(f"iterations must be > 0, got {iterations}")
    _, _, gx, gy, gt = _prepare(frame1, frame2)
    height, width = gt.shape

    u = np.zeros((height, width))
    v = np.zeros((height, width))

    n_neighbors = _neighbor_sums(np.ones((height, width)))
    yy, xx = np.mgrid[0:height, 0:width]
    colors = [(yy + xx) % 2 == 0, (yy + xx) % 2 == 1]

    gxx = gx * gx
    gxy = gx * gy
    gyy = gy * gy
    lam_n = smoothness * n_neighbors
    det = (gxx + lam_n) * (gyy + lam_n) - gxy**2

    energies = np.empty(iterations)
    for it in range(iterations):
        for mask in colors:
            su = _neighbor_sums(u)
            sv = _neighbor_sums(v)
            rhs_u = -gx * gt + smoothness * su
            rhs_v = -gy * gt + smoothness * sv
            new_u = ((gyy + lam_n) * rhs_u - gxy * rhs_v) / det
            new_v = ((gxx + lam_n) * rhs_v - gxy * rhs_u) / det
            u = np.where(mask, new_u, u)
            v = np.where(mask, new_v, v)
        energies[it] = _hs_energy(u, v, gx, gy, gt, smoothness)

    return FlowField(
        u=u, v=v, valid=np.ones((height, width), dtype=bool), energy_trace=energies
    )


@dataclass(frozen=True)
class GaborFilter:
    """Oriented complex band-pass filter.

    ``orientation`` is the tuned direction in radians (0 = +x), ``frequency``
    the central frequency in cycles/pixel along that direction, and the two
    standard deviations shape the envelope along/across the tuned direction.
    """

    orientation: float
    frequency: float
    sigma_x: float
    sigma_y: float

    def validate(self) -> "GaborFilter":
        if not self.frequency > 0:
            raise ConfigError(f"filter frequency must be > 0, got {self.frequency}")
        if not (self.sigma_x > 0 and self.sigma_y > 0):
            raise ConfigError("filter standard deviations must be > 0")
        return self

    def kernel(self, truncate: float = 3.0) -> np.ndarray:
        """Complex filter taps on an odd square grid, DC component removed."""
        radius = int(math.ceil(truncate * max(self.sigma_x, self.sigma_y)))
        coords = np.arange(-radius, radius + 1, dtype=np.float64)
        xg, yg = np.meshgrid(coords, coords)
        cos_t, sin_t = math.cos(self.orientation), math.sin(self.orientation)
        along = cos_t * xg + sin_t * yg
        across = -sin_t * xg + cos_t * yg
        envelope = np.exp(
            -0.5 * ((along / self.sigma_x) ** 2 + (across / self.sigma_y) ** 2)
        )
        taps = envelope * np.exp(2j * math.pi * self.frequency * along)
        # subtract the envelope-shaped DC so a constant image yields zero response
        taps -= envelope * (taps.sum() / envelope.sum())
        return taps


def _phase_difference(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Phase of a relative to b, from the conjugate product (no unwrapping)."""
    return np.angle(a * np.conj(b))


def phase_flow(
    frame1,
    frame2,
    filters,
    amplitude_fraction: float = 0.05,
    min_eigenvalue: float = 1e-8,
) -> FlowField:
    """Phase-constancy flow from a bank of oriented complex filters.

    Each filter contributes one constraint px*u + py*v + pt = 0 per pixel,
    where the spatial phase derivatives come from conjugate products of
    neighboring responses of the temporal mean response, and pt from the
    conjugate product of the two frames' responses. At least two distinct
    orientations (mod pi) are required; pixels where any filter responds
    below ``amplitude_fraction`` of its image-wide peak, or within the
    filter-support margin of the border, are masked invalid.
    """
    filters = [f.validate() for f in filters]
    if len(filters) < 2:
        raise ConfigError("phase flow needs at least 2 filters with distinct orientations")
    axes = [f.orientation % math.pi for f in filters]
    distinct = {round(a, 9) for a in axes}
    if len(distinct) < 2:
        raise ConfigError(
            "phase flow needs at least 2 distinct filter orientations (mod pi); "
            f"got {sorted(set(f.orientation for f in filters))}"
        )

    f1 = normalize(frame1)
    f2 = normalize(frame2)
    check_same_shape(f1, f2)
    height, width = f1.shape

    m11 = np.zeros((height, width))
    m12 = np.zeros((height, width))
    m22 = np.zeros((height, width))
    rhs1 = np.zeros((height, width))
    rhs2 = np.zeros((height, width))
    valid = np.ones((height, width), dtype=bool)

    for filt in filters:
        taps = filt.kernel()
        resp1 = fftconvolve(f1, taps, mode="same")
        resp2 = fftconvolve(f2, taps, mode="same")
        mean_resp = (resp1 + resp2) / 2.0

        px = _phase_difference(np.roll(mean_resp, -1, axis=1), np.roll(mean_resp, 1, axis=1)) / 2.0
        py = _phase_difference(np.roll(mean_resp, -1, axis=0), np.roll(mean_resp, 1, axis=0)) / 2.0
        pt = _phase_difference(resp2, resp1)

        amplitude = np.minimum(np.abs(resp1), np.abs(resp2))
        stable = amplitude >= amplitude_fraction * amplitude.max()
        margin = taps.shape[0] // 2 + 1
        border = np.zeros((height, width), dtype=bool)
        if height > 2 * margin and width > 2 * margin:
            border[margin : height - margin, margin : width - margin] = True
        valid &= stable & border

        m11 += px * px
        m12 += px * py
        m22 += py * py
        rhs1 += -px * pt
        rhs2 += -py * pt

    half_trace = (m11 + m22) / 2.0
    radius = np.sqrt(((m11 - m22) / 2.0) ** 2 + m12**2)
    valid &= (half_trace - radius) > min_eigenvalue

    det = m11 * m22 - m12**2
    safe_det = np.where(valid, det, 1.0)
    u = np.where(valid, (m22 * rhs1 - m12 * rhs2) / safe_det, 0.0)
    v = np.where(valid, (m11 * rhs2 - m12 * rhs1) / safe_det, 0.0)
    return FlowField(u=u, v=v, valid=valid)
