"""Anisotropic 2D Gaussian kernels and differentiable rendering.

An image is represented as a sum of kernels; pixel (x, y) of the render is

    sum_i  intensity_i * exp(-0.5 * d^T Sigma_i^{-1} d),   d = (x, y) - center_i

with Sigma built from (sigma_x, sigma_y, rho). Pixel centers sit at integer
coordinates, (0, 0) top-left, +x right, +y down. Every kernel is evaluated
over the full raster (no truncation radius): rasters are small and truncation
would bias sub-pixel gradients.

``render_gradients`` returns the analytic Jacobian of the render with respect
to every kernel parameter; the parameter order is :data:`PARAM_NAMES`.
"""

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import ParameterDomainError

PARAM_NAMES = ("x", "y", "sigma_x", "sigma_y", "rho", "intensity")
N_PARAMS = len(PARAM_NAMES)

# column indices into KernelSet.params
COL_X, COL_Y, COL_SX, COL_SY, COL_RHO, COL_INTENSITY = range(N_PARAMS)


@dataclass(frozen=True)
class Kernel2D:
    """One anisotropic 2D Gaussian kernel in pixel units."""

    x: float
    y: float
    sigma_x: float
    sigma_y: float
    rho: float
    intensity: float

    def validate(self) -> "Kernel2D":
        if not (self.sigma_x > 0 and self.sigma_y > 0):
            raise ParameterDomainError(
                f"standard deviations must be > 0, got ({self.sigma_x}, {self.sigma_y})"
            )
        if not abs(self.rho) < 1:
            raise ParameterDomainError(f"|rho| must be < 1, got {self.rho}")
        if not self.intensity >= 0:
            raise ParameterDomainError(f"intensity must be >= 0, got {self.intensity}")
        if not all(
            math.isfinite(v)
            for v in (self.x, self.y, self.sigma_x, self.sigma_y, self.rho, self.intensity)
        ):
            raise ParameterDomainError("kernel parameters must be finite")
        return self

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.x, self.y, self.sigma_x, self.sigma_y, self.rho, self.intensity],
            dtype=np.float64,
        )


class KernelSet:
    """Ordered collection of kernels, stored as a (n, 6) parameter array.

    Columns follow :data:`PARAM_NAMES`. The array is copied on construction;
    a KernelSet behaves as an immutable value for rendering purposes.
    """

    def __init__(self, params):
        arr = np.array(params, dtype=np.float64, copy=True)
        if arr.ndim != 2 or arr.shape[1] != N_PARAMS:
            raise ValueError(f"kernel parameters must have shape (n, {N_PARAMS})")
        self.params = arr

    @classmethod
    def from_kernels(cls, kernels) -> "KernelSet":
        kernels = list(kernels)
        if not kernels:
            return cls(np.empty((0, N_PARAMS)))
        return cls(np.stack([k.as_array() for k in kernels]))

    def validate(self) -> "KernelSet":
        for kernel in self:
            kernel.validate()
        return self

    def translated(self, displacements) -> "KernelSet":
        """New KernelSet with centers shifted by per-kernel (u, v) in pixels."""
        offsets = np.asarray(displacements, dtype=np.float64)
        if offsets.shape == (2,):
            offsets = np.broadcast_to(offsets, (len(self), 2))
        if offsets.shape != (len(self), 2):
            raise ValueError(
                f"displacements must have shape ({len(self)}, 2) or (2,), got {offsets.shape}"
            )
        params = self.params.copy()
        params[:, COL_X : COL_Y + 1] += offsets
        return KernelSet(params)

    def __len__(self) -> int:
        return self.params.shape[0]

    def __getitem__(self, index: int) -> Kernel2D:
        row = self.params[index]
        return Kernel2D(*(float(v) for v in row))

    def __iter__(self):
        return (self[i] for i in range(len(self)))


def eval_kernel(kernel: Kernel2D, x: float, y: float) -> float:
    """Evaluate one kernel at a point, by direct scalar arithmetic.

    Kept free of any array machinery so it can serve as an independent
    oracle for :func:`render`.
    """
    kernel.validate()
    a = (x - kernel.x) / kernel.sigma_x
    b = (y - kernel.y) / kernel.sigma_y
    one_minus = 1.0 - kernel.rho * kernel.rho
    quad = (a * a - 2.0 * kernel.rho * a * b + b * b) / one_minus
    return kernel.intensity * math.exp(-0.5 * quad)


def _check_raster(width: int, height: int) -> tuple[int, int]:
    if width <= 0 or height <= 0:
        raise ValueError(f"raster dimensions must be positive, got {width}x{height}")
    return int(width), int(height)


def _standardized(params: np.ndarray, width: int, height: int):
    """Per-kernel standardized pixel offsets.

    Returns (ax, by, one_minus) where ax[i, x] = (x - center_x_i) / sigma_x_i
    (shape (n, width)), by likewise over rows, and one_minus = 1 - rho^2.
    """
    xs = np.arange(width, dtype=np.float64)
    ys = np.arange(height, dtype=np.float64)
    ax = (xs[None, :] - params[:, COL_X : COL_X + 1]) / params[:, COL_SX : COL_SX + 1]
    by = (ys[None, :] - params[:, COL_Y : COL_Y + 1]) / params[:, COL_SY : COL_SY + 1]
    one_minus = 1.0 - params[:, COL_RHO] ** 2
    return ax, by, one_minus


def _basis_fields(params: np.ndarray, width: int, height: int):
    """Exponential fields E (n, h, w) plus the standardized offsets."""
    ax, by, one_minus = _standardized(params, width, height)
    rho = params[:, COL_RHO]
    expo = ax[:, None, :] ** 2 + by[:, :, None] ** 2
    expo -= (2.0 * rho)[:, None, None] * (by[:, :, None] * ax[:, None, :])
    expo *= (-0.5 / one_minus)[:, None, None]
    return np.exp(expo), ax, by, one_minus


def _validate_params(params: np.ndarray) -> None:
    if params.shape[0] == 0:
        raise ValueError("kernel set is empty; rendering needs at least one kernel")
    if not np.all(np.isfinite(params)):
        raise ParameterDomainError("kernel parameters must be finite")
    if np.any(params[:, (COL_SX, COL_SY)] <= 0):
        raise ParameterDomainError("standard deviations must be > 0")
    if np.any(np.abs(params[:, COL_RHO]) >= 1):
        raise ParameterDomainError("|rho| must be < 1")
    if np.any(params[:, COL_INTENSITY] < 0):
        raise ParameterDomainError("intensity must be >= 0")


def render(kernel_set: KernelSet, width: int, height: int) -> np.ndarray:
    """Render a kernel set to a continuous (height, width) float64 raster."""
    width, height = _check_raster(width, height)
    _validate_params(kernel_set.params)
    basis, _, _, _ = _basis_fields(kernel_set.params, width, height)
    return np.einsum("n,nhw->hw", kernel_set.params[:, COL_INTENSITY], basis)


def render_gradients(kernel_set: KernelSet, width: int, height: int) -> np.ndarray:
    """Analytic partials of every pixel w.r.t. every kernel parameter.

    Returns an array of shape (n_kernels, 6, height, width); axis 1 follows
    :data:`PARAM_NAMES`. The render itself is the intensity-weighted sum of
    the ``intensity`` slice.
    """
    width, height = _check_raster(width, height)
    params = kernel_set.params
    _validate_params(params)
    basis, ax, by, one_minus = _basis_fields(params, width, height)

    n = params.shape[0]
    rho = params[:, COL_RHO]
    sx = params[:, COL_SX]
    sy = params[:, COL_SY]
    weighted = params[:, COL_INTENSITY][:, None, None] * basis

    a = np.broadcast_to(ax[:, None, :], weighted.shape)
    b = np.broadcast_to(by[:, :, None], weighted.shape)
    r3 = rho[:, None, None]
    a_min_rb = a - r3 * b
    b_min_ra = b - r3 * a

    grads = np.empty((n, N_PARAMS, height, width))
    inv_x = 1.0 / (sx * one_minus)
    inv_y = 1.0 / (sy * one_minus)
    grads[:, COL_X] = weighted * a_min_rb * inv_x[:, None, None]
    grads[:, COL_Y] = weighted * b_min_ra * inv_y[:, None, None]
    grads[:, COL_SX] = weighted * a * a_min_rb * inv_x[:, None, None]
    grads[:, COL_SY] = weighted * b * b_min_ra * inv_y[:, None, None]
    grads[:, COL_RHO] = (
        weighted
        * ((1.0 + r3 * r3) * a * b - r3 * (a * a + b * b))
        / (one_minus**2)[:, None, None]
    )
    grads[:, COL_INTENSITY] = basis
    return grads


def l1_fit_gradients(kernel_set: KernelSet, target: np.ndarray):
    """Mean-absolute-error fit of a render against a normalized target.

    Returns (l1, grads, residual) where grads has shape (n_kernels, 6) and
    holds the partials of the mean absolute error w.r.t. each kernel
    parameter (subgradient 0 where a pixel residual is exactly zero).

    This is the optimization hot path: the Jacobian is contracted against
    the residual sign on the fly instead of being materialized.
    """
    params = kernel_set.params
    _validate_params(params)
    height, width = target.shape
    basis, ax, by, one_minus = _basis_fields(params, width, height)
    intensity = params[:, COL_INTENSITY]
    rho = params[:, COL_RHO]
    sx = params[:, COL_SX]
    sy = params[:, COL_SY]

    rendered = np.einsum("n,nhw->hw", intensity, basis)
    residual = rendered - target
    l1 = float(np.abs(residual).mean())

    sign = np.sign(residual) / residual.size
    wb = basis * sign[None, :, :]

    m0 = np.einsum("nhw->n", wb)
    ma = np.einsum("nhw,nw->n", wb, ax)
    mb = np.einsum("nhw,nh->n", wb, by)
    maa = np.einsum("nhw,nw->n", wb, ax * ax)
    mbb = np.einsum("nhw,nh->n", wb, by * by)
    mab = np.einsum("nhw,nh,nw->n", wb, by, ax)

    grads = np.empty_like(params)
    grads[:, COL_X] = intensity * (ma - rho * mb) / (sx * one_minus)
    grads[:, COL_Y] = intensity * (mb - rho * ma) / (sy * one_minus)
    grads[:, COL_SX] = intensity * (maa - rho * mab) / (sx * one_minus)
    grads[:, COL_SY] = intensity * (mbb - rho * mab) / (sy * one_minus)
    grads[:, COL_RHO] = (
        intensity * ((1.0 + rho * rho) * mab - rho * (maa + mbb)) / one_minus**2
    )
    grads[:, COL_INTENSITY] = m0
    return l1, grads, residual
