"""Sub-pixel motion measurement from image pairs.

Each frame is represented as a sum of anisotropic 2D Gaussian kernels; the
kernel parameters and per-kernel displacements are fitted to a frame pair by
gradient descent, and the aggregated displacement is the motion estimate.
Classical optical-flow estimators (Lucas-Kanade, Horn-Schunck, phase-based)
are included as comparison baselines.
"""

from .baselines import FlowField, GaborFilter, horn_schunck, lucas_kanade, phase_flow
from .estimators import GaussianMotionEstimator, HornSchunckFlow, LucasKanadeFlow, PhaseFlow
from .exceptions import ConfigError, InitializationError, ParameterDomainError
from .fitting import OptimConfig, fit_pair, fit_single_frame, init_kernels
from .image import GRAY_MAX, normalize, quantize, read_pgm, write_pgm
from .kernels import (
    Kernel2D,
    KernelSet,
    PARAM_NAMES,
    eval_kernel,
    render,
    render_gradients,
)
from .losses import LossBreakdown, compute_loss, loss_gradients
from .metrics import ErrorStats, aggregate, error_stats
from .synthetic import SceneSpec, make_frame, make_pair, read_scene_config, write_scene_config

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "ErrorStats",
    "FlowField",
    "GRAY_MAX",
    "GaborFilter",
    "GaussianMotionEstimator",
    "HornSchunckFlow",
    "InitializationError",
    "Kernel2D",
    "KernelSet",
    "LossBreakdown",
    "LucasKanadeFlow",
    "OptimConfig",
    "PARAM_NAMES",
    "ParameterDomainError",
    "PhaseFlow",
    "SceneSpec",
    "aggregate",
    "compute_loss",
    "error_stats",
    "eval_kernel",
    "fit_pair",
    "fit_single_frame",
    "horn_schunck",
    "init_kernels",
    "loss_gradients",
    "lucas_kanade",
    "make_frame",
    "make_pair",
    "normalize",
    "phase_flow",
    "quantize",
    "read_pgm",
    "read_scene_config",
    "render",
    "render_gradients",
    "write_pgm",
    "write_scene_config",
]
