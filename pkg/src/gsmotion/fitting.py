"""Kernel initialization and the two gradient-descent fitting stages.

Stage layout:

1. :func:`init_kernels` scatters random kernels over the raster and prunes
   the ones sitting on dark pixels of frame 1.
2. :func:`fit_single_frame` fits all kernel parameters to frame 1 by mean
   absolute error until a target is reached.
3. :func:`fit_pair` jointly refines the kernels and per-kernel displacements
   against both frames under the composite loss; frame 2 is rendered with
   each kernel at center + displacement.

The optimizer is Adam with per-parameter-group step sizes. Constrained
parameters are optimized through smooth reparameterizations (log for the
standard deviations and the intensity, arctanh for the correlation), so the
kernel invariants hold at every iterate without projection.
"""

import logging
from dataclasses import dataclass, field, fields, replace

import numpy as np

from . import configfile
from ._fast import fit_eval
from .exceptions import ConfigError, InitializationError
from .image import normalize
from .kernels import (
    COL_INTENSITY,
    COL_RHO,
    COL_SX,
    COL_SY,
    COL_X,
    COL_Y,
    KernelSet,
)
from .losses import (
    L1_FRAME_MODES,
    LossBreakdown,
    _assemble,
    _frame_weights,
    motion_smoothness,
    motion_smoothness_gradient,
)
from .validation import check_gray16, check_same_shape

log = logging.getLogger(__name__)

# bounds on the reparameterized (log / arctanh) coordinates, loose on purpose
_LOG_SIGMA_BOUNDS = (np.log(1e-2), np.log(1e3))
_LOG_INTENSITY_BOUNDS = (-60.0, 5.0)
_ATANH_RHO_BOUND = 7.0  # |rho| <= tanh(7) ~ 1 - 2e-6


@dataclass
class OptimConfig:
    """Configuration for the fitting pipeline. All fields are overridable
    through the flat key-value config format (same keys as field names)."""

    seed: int = 0
    initial_kernel_count: int = 400
    prune_threshold: float = 1e-5
    target_l1: float = 1e-4
    weight_fit: float = 0.25
    weight_diff: float = 0.25
    weight_smooth: float = 0.50
    lr_position: float = 0.05
    lr_shape: float = 0.02
    lr_intensity: float = 0.02
    lr_displacement: float = 5e-4
    lr_displacement_spread: float = 1e-10
    spread_release_frac: float = 0.0
    lr_decay_fit: float = 1.0
    lr_decay_joint: float = 1e-6
    lr_warmup_frac: float = 0.4
    max_iter_fit: int = 6000
    max_iter_joint: int = 3000
    smooth_eps: float = 1e-12
    sigma_min: float = 1.0
    sigma_max: float = 10.0
    plateau_window: int = 500
    plateau_rtol: float = 1e-8
    freeze_kernels: bool = False
    l1_frames: str = "both"

    def validate(self) -> "OptimConfig":
        weights = (self.weight_fit, self.weight_diff, self.weight_smooth)
        if any(w < 0 for w in weights):
            raise ConfigError("loss weights must be non-negative")
        if abs(sum(weights) - 1.0) > 1e-12:
            raise ConfigError(f"loss weights must sum to 1, got {sum(weights)!r}")
        if not self.prune_threshold >= 0:
            raise ConfigError("prune_threshold must be >= 0")
        if not self.target_l1 > 0:
            raise ConfigError("target_l1 must be > 0")
        if self.initial_kernel_count <= 0:
            raise ConfigError("initial_kernel_count must be > 0")
        if not (0 < self.sigma_min <= self.sigma_max):
            raise ConfigError("sigma sampling range must satisfy 0 < sigma_min <= sigma_max")
        for name in ("lr_position", "lr_shape", "lr_intensity",
                     "lr_displacement", "lr_displacement_spread"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be > 0")
        for name in ("lr_decay_fit", "lr_decay_joint"):
            if not (0 < getattr(self, name) <= 1.0):
                raise ConfigError(f"{name} must be in (0, 1]")
        if not (0 <= self.lr_warmup_frac < 1.0):
            raise ConfigError("lr_warmup_frac must be in [0, 1)")
        if not (0 <= self.spread_release_frac <= 1.0):
            raise ConfigError("spread_release_frac must be in [0, 1]")
        if self.max_iter_fit < 0 or self.max_iter_joint < 0:
            raise ConfigError("iteration limits must be >= 0")
        if not self.smooth_eps > 0:
            raise ConfigError("smooth_eps must be > 0")
        if self.plateau_window <= 0:
            raise ConfigError("plateau_window must be > 0")
        if self.l1_frames not in L1_FRAME_MODES:
            raise ConfigError(
                f"l1_frames must be one of {sorted(L1_FRAME_MODES)}, got {self.l1_frames!r}"
            )
        return self

    @classmethod
    def from_mapping(cls, pairs, source="<config>") -> "OptimConfig":
        """Build a config from (key, value) string pairs, rejecting unknown keys."""
        known = {f.name: f.type for f in fields(cls)}
        configfile.reject_unknown(pairs, known, source)
        kwargs = {}
        for key, value in pairs:
            if key == "l1_frames":
                kwargs[key] = value
            elif key == "freeze_kernels":
                if value.lower() not in ("true", "false", "0", "1"):
                    raise ConfigError(f"{source}: key '{key}' expects true/false, got {value!r}")
                kwargs[key] = value.lower() in ("true", "1")
            elif key in ("seed", "initial_kernel_count", "max_iter_fit",
                         "max_iter_joint", "plateau_window"):
                kwargs[key] = configfile.parse_int(key, value, source)
            else:
                kwargs[key] = configfile.parse_float(key, value, source)
        return cls(**kwargs).validate()

    @classmethod
    def from_config(cls, path) -> "OptimConfig":
        return cls.from_mapping(configfile.parse_config(path), source=str(path))

    def with_seed(self, seed: int) -> "OptimConfig":
        return replace(self, seed=seed)


@dataclass
class StageReport:
    """Outcome of one optimization stage."""

    converged: bool
    status: str  # "target", "plateau", "max_iterations", "diverged"
    iterations: int
    best_loss: float
    trace: list = field(default_factory=list)
    motion_trace: np.ndarray | None = None  # per-iteration mean displacement (joint stage)


@dataclass
class PairFitResult:
    kernels: KernelSet
    displacements: np.ndarray
    loss: LossBreakdown
    report: StageReport


def init_kernels(cfg: OptimConfig, frame1) -> KernelSet:
    """Scatter random kernels over the raster, prune the ones on dark pixels.

    Centers are uniform over the pixel extent, standard deviations uniform in
    [sigma_min, sigma_max], correlation 0, intensity uniform in (0, 1]. A
    kernel survives when frame 1's normalized intensity at the pixel nearest
    its center is >= prune_threshold.
    """
    cfg.validate()
    frame = check_gray16(frame1, "frame1")
    height, width = frame.shape
    rng = np.random.default_rng(cfg.seed)

    n = cfg.initial_kernel_count
    params = np.zeros((n, 6))
    params[:, COL_X] = rng.uniform(0.0, width - 1.0, n)
    params[:, COL_Y] = rng.uniform(0.0, height - 1.0, n)
    params[:, COL_SX] = rng.uniform(cfg.sigma_min, cfg.sigma_max, n)
    params[:, COL_SY] = rng.uniform(cfg.sigma_min, cfg.sigma_max, n)
    params[:, COL_RHO] = 0.0
    params[:, COL_INTENSITY] = 1.0 - rng.random(n)  # (0, 1]

    nearest_x = np.clip(np.rint(params[:, COL_X]).astype(int), 0, width - 1)
    nearest_y = np.clip(np.rint(params[:, COL_Y]).astype(int), 0, height - 1)
    brightness = frame[nearest_y, nearest_x].astype(np.float64) / 65535.0
    survivors = brightness >= cfg.prune_threshold

    count = int(survivors.sum())
    log.info("kernel init: %d of %d survive brightness pruning", count, n)
    if count == 0:
        raise InitializationError(
            "all initial kernels were pruned (frame too dark at every sampled "
            "location); retry with a different seed or a lower prune_threshold"
        )
    return KernelSet(params[survivors])


# --- reparameterization -----------------------------------------------------

def _to_raw(params: np.ndarray) -> np.ndarray:
    raw = params.copy()
    raw[:, COL_SX] = np.log(params[:, COL_SX])
    raw[:, COL_SY] = np.log(params[:, COL_SY])
    raw[:, COL_RHO] = np.arctanh(params[:, COL_RHO])
    raw[:, COL_INTENSITY] = np.log(np.maximum(params[:, COL_INTENSITY], 1e-30))
    return raw


def _to_params(raw: np.ndarray) -> np.ndarray:
    params = raw.copy()
    params[:, COL_SX] = np.exp(raw[:, COL_SX])
    params[:, COL_SY] = np.exp(raw[:, COL_SY])
    params[:, COL_RHO] = np.tanh(raw[:, COL_RHO])
    params[:, COL_INTENSITY] = np.exp(raw[:, COL_INTENSITY])
    return params


def _chain_to_raw(params: np.ndarray, grads: np.ndarray) -> np.ndarray:
    """Map gradients w.r.t. natural parameters into the raw coordinates."""
    raw_grads = grads.copy()
    raw_grads[:, COL_SX] *= params[:, COL_SX]
    raw_grads[:, COL_SY] *= params[:, COL_SY]
    raw_grads[:, COL_RHO] *= 1.0 - params[:, COL_RHO] ** 2
    raw_grads[:, COL_INTENSITY] *= params[:, COL_INTENSITY]
    return raw_grads


def _clip_raw(raw: np.ndarray) -> None:
    np.clip(raw[:, COL_SX], *_LOG_SIGMA_BOUNDS, out=raw[:, COL_SX])
    np.clip(raw[:, COL_SY], *_LOG_SIGMA_BOUNDS, out=raw[:, COL_SY])
    np.clip(raw[:, COL_RHO], -_ATANH_RHO_BOUND, _ATANH_RHO_BOUND, out=raw[:, COL_RHO])
    np.clip(raw[:, COL_INTENSITY], *_LOG_INTENSITY_BOUNDS, out=raw[:, COL_INTENSITY])


class Adam:
    """Adam with per-column step sizes and an external step-size scale."""

    def __init__(self, shape, column_lrs, beta1=0.9, beta2=0.999, eps=1e-8):
        self.m = np.zeros(shape)
        self.v = np.zeros(shape)
        self.lrs = np.asarray(column_lrs, dtype=np.float64)
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0

    def step(self, raw: np.ndarray, grads: np.ndarray, scale: float = 1.0) -> None:
        self.t += 1
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * grads
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * grads * grads
        m_hat = self.m / (1.0 - self.beta1**self.t)
        v_hat = self.v / (1.0 - self.beta2**self.t)
        raw -= (scale * self.lrs) * m_hat / (np.sqrt(v_hat) + self.eps)


def _decay_scale(total_decay: float, iteration: int, horizon: int, warmup_frac: float = 0.0) -> float:
    """Step-size schedule: constant warmup, then geometric decay to ``total_decay``.

    The scale is 1.0 for the first ``warmup_frac`` of the horizon and decays
    geometrically to ``total_decay`` at the horizon.
    """
    if total_decay >= 1.0 or horizon <= 0:
        return 1.0
    start = warmup_frac * horizon
    if iteration <= start:
        return 1.0
    return float(total_decay ** ((iteration - start) / (horizon - start)))


def _kernel_column_lrs(cfg: OptimConfig) -> np.ndarray:
    return np.array(
        [cfg.lr_position, cfg.lr_position, cfg.lr_shape, cfg.lr_shape,
         cfg.lr_shape, cfg.lr_intensity]
    )


def fit_single_frame(kernel_set: KernelSet, frame1, cfg: OptimConfig):
    """Fit all kernel parameters to frame 1 by mean absolute error.

    Runs until the error reaches ``cfg.target_l1`` or ``cfg.max_iter_fit``
    iterations, tracking the best state seen. Returns
    (best KernelSet, StageReport); a missed target is reported through
    ``report.converged`` / ``report.status``, never silently.
    """
    cfg.validate()
    target = normalize(frame1)
    raw = _to_raw(kernel_set.params)
    adam = Adam(raw.shape, _kernel_column_lrs(cfg))

    best_raw = raw.copy()
    best_l1 = np.inf
    trace: list[float] = []
    iterations = 0
    status = "max_iterations"

    for it in range(cfg.max_iter_fit + 1):
        params = _to_params(raw)
        l1, grads = fit_eval(params, target)
        trace.append(l1)
        if l1 < best_l1:
            best_l1 = l1
            best_raw = raw.copy()
        if l1 <= cfg.target_l1:
            status = "target"
            iterations = it
            break
        if it == cfg.max_iter_fit:
            iterations = it
            break
        scale = _decay_scale(cfg.lr_decay_fit, it, cfg.max_iter_fit)
        adam.step(raw, _chain_to_raw(params, grads), scale)
        _clip_raw(raw)

    converged = status == "target"
    if not converged:
        log.warning(
            "single-frame fit missed target %.3g after %d iterations (best %.3g)",
            cfg.target_l1, iterations, best_l1,
        )
    report = StageReport(
        converged=converged, status=status, iterations=iterations,
        best_loss=best_l1, trace=trace,
    )
    return KernelSet(_to_params(best_raw)), report


def fit_pair(kernel_set: KernelSet, frame1, frame2, cfg: OptimConfig) -> PairFitResult:
    """Jointly fit kernels and per-kernel displacements to both frames.

    Displacements start at zero. Kernel shape/color parameters are shared
    between the frames and co-optimized unless ``cfg.freeze_kernels`` is set.

    The displacement field is optimized through a shared-motion/deviation
    split: d_i = shared + deviation_i, with ``lr_displacement`` driving the
    shared channel and ``lr_displacement_spread`` the per-kernel deviations.
    The motion-consistency gradients cancel exactly in the shared channel's
    summed gradient, so the common motion follows the fit terms at full step
    size while the deviations (and with them the consistency penalty) stay
    small.

    Parameter groups activate in phases of the iteration budget:

    Kernels co-fit from the first iteration: the single-frame stage stops at
    its target mid-descent, and its leftover common-mode fit gradient would
    otherwise be absorbed by the displacement field as a spurious
    translation. All step sizes are constant for ``lr_warmup_frac`` of the
    budget (migration), then anneal geometrically to ``lr_decay_joint``,
    freezing the state as the run converges. ``spread_release_frac`` can
    delay the per-kernel deviations relative to the budget (0 = active from
    the start).

    Stopping: iteration limit, loss plateau, or divergence (non-finite loss;
    the last finite best state is returned with status "diverged"). The
    plateau rule stops once the best total has not improved by a relative
    ``plateau_rtol`` within ``plateau_window`` iterations; it engages only
    after every parameter group has had its turn (scheduled lulls are not
    convergence) and after the initial loss has been improved at least once
    (the annealed trajectory transiently exceeds the zero-displacement
    start).
    """
    cfg.validate()
    target1 = normalize(frame1)
    target2 = normalize(frame2)
    check_same_shape(target1, target2)
    w1, w2 = _frame_weights(cfg)

    n = len(kernel_set)
    raw = _to_raw(kernel_set.params)
    shared = np.zeros(2)
    deviations = np.zeros((n, 2))
    adam_kernels = Adam(raw.shape, _kernel_column_lrs(cfg))
    adam_shared = Adam(shared.shape, [cfg.lr_displacement] * 2)
    adam_deviations = Adam(deviations.shape, [cfg.lr_displacement_spread] * 2)

    def snapshot():
        return raw.copy(), (shared + deviations)

    best_state = snapshot()
    best_total = np.inf
    best_breakdown: LossBreakdown | None = None
    trace: list[LossBreakdown] = []
    motion_trace: list[np.ndarray] = []
    status = "max_iterations"
    iterations = 0
    improved_since_start = False
    last_improvement = 0

    for it in range(cfg.max_iter_joint + 1):
        params = _to_params(raw)
        displacements = shared[None, :] + deviations

        l1_1, grads1 = fit_eval(params, target1)
        moved = params.copy()
        moved[:, COL_X : COL_Y + 1] += displacements
        l1_2, grads2 = fit_eval(moved, target2)
        breakdown = _assemble(l1_1, l1_2, motion_smoothness(displacements, cfg.smooth_eps), cfg)
        trace.append(breakdown)
        motion_trace.append(displacements.mean(axis=0))

        if not np.isfinite(breakdown.total):
            status = "diverged"
            iterations = it
            break
        if breakdown.total < best_total - cfg.plateau_rtol * abs(best_total):
            last_improvement = it
            if it > 0:
                improved_since_start = True
        if breakdown.total < best_total:
            best_total = breakdown.total
            best_state = snapshot()
            best_breakdown = breakdown

        all_groups_active = it >= cfg.spread_release_frac * cfg.max_iter_joint
        if (
            improved_since_start
            and all_groups_active
            and it - last_improvement >= cfg.plateau_window
        ):
            status = "plateau"
            iterations = it
            break
        if it == cfg.max_iter_joint:
            iterations = it
            break

        balance_sign = float(np.sign(l1_1 - l1_2))
        coef1 = cfg.weight_fit * w1 + cfg.weight_diff * balance_sign
        coef2 = cfg.weight_fit * w2 - cfg.weight_diff * balance_sign
        kernel_grads = coef1 * grads1 + coef2 * grads2
        disp_grads = coef2 * grads2[:, (COL_X, COL_Y)] + cfg.weight_smooth * (
            motion_smoothness_gradient(displacements, cfg.smooth_eps)
        )

        scale = _decay_scale(cfg.lr_decay_joint, it, cfg.max_iter_joint, cfg.lr_warmup_frac)
        if not cfg.freeze_kernels:
            adam_kernels.step(raw, _chain_to_raw(params, kernel_grads), scale)
            _clip_raw(raw)
        adam_shared.step(shared, disp_grads.sum(axis=0), scale)
        if it >= cfg.spread_release_frac * cfg.max_iter_joint:
            adam_deviations.step(deviations, disp_grads, scale)

    if status == "diverged":
        log.warning("joint fit diverged at iteration %d; returning last finite state", iterations)

    best_raw, final_displacements = best_state
    final_params = _to_params(best_raw)
    if best_breakdown is None:  # diverged on the very first evaluation
        best_breakdown = trace[-1]
    report = StageReport(
        converged=status in ("plateau", "max_iterations"),
        status=status,
        iterations=iterations,
        best_loss=best_total,
        trace=trace,
        motion_trace=np.asarray(motion_trace),
    )
    return PairFitResult(
        kernels=KernelSet(final_params),
        displacements=final_displacements,
        loss=best_breakdown,
        report=report,
    )
