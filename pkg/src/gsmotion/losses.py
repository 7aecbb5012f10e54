"""Composite two-frame fitting loss and its analytic gradients.

The total loss blends three terms:

* a mean-absolute-error fit term over the two frames (frame 2 rendered with
  per-kernel displacements added to the centers),
* the absolute difference between the two per-frame fit errors, which keeps
  representation quality balanced across frames,
* a motion-consistency term: the spread of the per-kernel displacements
  divided by the magnitude of their mean (coefficient of variation), with a
  small epsilon guarding the zero-mean singularity.

Spread is the square root of the summed per-axis population variances; the
mean magnitude is the Euclidean norm of the mean displacement.
"""

from dataclasses import dataclass

import numpy as np

from .image import normalize
from .kernels import COL_X, COL_Y, KernelSet, l1_fit_gradients, render
from .validation import check_displacements, check_same_shape

L1_FRAME_MODES = {"both": (0.5, 0.5), "first": (1.0, 0.0), "second": (0.0, 1.0)}


@dataclass(frozen=True)
class LossBreakdown:
    """Per-term values of the composite loss."""

    l1_frame1: float
    l1_frame2: float
    l_diff: float
    l_smooth: float
    total: float


def _frame_weights(cfg) -> tuple[float, float]:
    mode = getattr(cfg, "l1_frames", "both")
    if mode not in L1_FRAME_MODES:
        raise ValueError(f"l1_frames must be one of {sorted(L1_FRAME_MODES)}, got {mode!r}")
    return L1_FRAME_MODES[mode]


def motion_smoothness(displacements: np.ndarray, eps: float) -> float:
    """Spread of the displacement field over the magnitude of its mean."""
    mean = displacements.mean(axis=0)
    spread = float(np.sqrt(displacements.var(axis=0).sum()))
    return spread / (float(np.hypot(mean[0], mean[1])) + eps)


def motion_smoothness_gradient(displacements: np.ndarray, eps: float) -> np.ndarray:
    """Analytic partials of :func:`motion_smoothness` w.r.t. each displacement.

    At the non-differentiable points (zero spread or zero mean) the
    corresponding subgradient contribution is taken as zero.
    """
    n = displacements.shape[0]
    mean = displacements.mean(axis=0)
    centered = displacements - mean
    spread = float(np.sqrt((centered**2).sum() / n))
    mean_norm = float(np.hypot(mean[0], mean[1]))

    d_spread = centered / (n * spread) if spread > 0 else np.zeros_like(displacements)
    d_mean_norm = (
        np.broadcast_to(mean / (n * mean_norm), displacements.shape)
        if mean_norm > 0
        else np.zeros_like(displacements)
    )
    denom = mean_norm + eps
    return d_spread / denom - spread * d_mean_norm / denom**2


def _assemble(l1_frame1, l1_frame2, l_smooth, cfg) -> LossBreakdown:
    w1, w2 = _frame_weights(cfg)
    l_diff = abs(l1_frame1 - l1_frame2)
    total = (
        cfg.weight_fit * (w1 * l1_frame1 + w2 * l1_frame2)
        + cfg.weight_diff * l_diff
        + cfg.weight_smooth * l_smooth
    )
    return LossBreakdown(
        l1_frame1=l1_frame1,
        l1_frame2=l1_frame2,
        l_diff=l_diff,
        l_smooth=l_smooth,
        total=total,
    )


def compute_loss(kernel_set: KernelSet, displacements, frame1, frame2, cfg) -> LossBreakdown:
    """Evaluate the composite loss for a kernel set and displacement field."""
    target1 = normalize(frame1)
    target2 = normalize(frame2)
    check_same_shape(target1, target2)
    d = check_displacements(displacements, len(kernel_set))

    height, width = target1.shape
    l1_1 = float(np.abs(render(kernel_set, width, height) - target1).mean())
    l1_2 = float(np.abs(render(kernel_set.translated(d), width, height) - target2).mean())
    l_smooth = motion_smoothness(d, cfg.smooth_eps)
    return _assemble(l1_1, l1_2, l_smooth, cfg)


def loss_gradients(kernel_set: KernelSet, displacements, frame1, frame2, cfg):
    """Analytic gradients of the composite loss.

    Returns (kernel_grads, displacement_grads, breakdown) where kernel_grads
    has shape (n, 6) over the kernel parameter order of
    :data:`gsmotion.kernels.PARAM_NAMES` and displacement_grads has shape
    (n, 2).
    """
    target1 = normalize(frame1)
    target2 = normalize(frame2)
    check_same_shape(target1, target2)
    d = check_displacements(displacements, len(kernel_set))
    w1, w2 = _frame_weights(cfg)

    l1_1, grads1, _ = l1_fit_gradients(kernel_set, target1)
    l1_2, grads2, _ = l1_fit_gradients(kernel_set.translated(d), target2)

    balance_sign = float(np.sign(l1_1 - l1_2))
    coef1 = cfg.weight_fit * w1 + cfg.weight_diff * balance_sign
    coef2 = cfg.weight_fit * w2 - cfg.weight_diff * balance_sign

    kernel_grads = coef1 * grads1 + coef2 * grads2
    displacement_grads = coef2 * grads2[:, (COL_X, COL_Y)]
    displacement_grads = displacement_grads + cfg.weight_smooth * motion_smoothness_gradient(
        d, cfg.smooth_eps
    )

    l_smooth = motion_smoothness(d, cfg.smooth_eps)
    return kernel_grads, displacement_grads, _assemble(l1_1, l1_2, l_smooth, cfg)
