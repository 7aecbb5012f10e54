"""Scikit-learn style estimator front ends.

These wrap the functional pipeline so the algorithms compose with the wider
ecosystem (``get_params``/``set_params``, ``clone``). The motion estimators
consume a pair of frames in ``fit`` and expose results as fitted attributes.
"""

import numpy as np
from sklearn.base import BaseEstimator

from . import baselines
from .fitting import OptimConfig, fit_pair, fit_single_frame, init_kernels
from .metrics import aggregate


class GaussianMotionEstimator(BaseEstimator):
    """Sub-pixel motion estimator backed by a Gaussian-kernel image model.

    ``fit(frame1, frame2)`` runs random initialization with brightness
    pruning, a single-frame mean-absolute-error fit, and the joint two-frame
    fit that recovers per-kernel displacements. Constructor parameters mirror
    :class:`gsmotion.fitting.OptimConfig`.
    """

    def __init__(
        self,
        seed=0,
        initial_kernel_count=400,
        prune_threshold=1e-5,
        target_l1=1e-4,
        weight_fit=0.25,
        weight_diff=0.25,
        weight_smooth=0.50,
        lr_position=0.05,
        lr_shape=0.02,
        lr_intensity=0.02,
        lr_displacement=5e-4,
        lr_displacement_spread=1e-10,
        spread_release_frac=0.0,
        lr_decay_fit=1.0,
        lr_decay_joint=1e-6,
        lr_warmup_frac=0.4,
        max_iter_fit=6000,
        max_iter_joint=3000,
        smooth_eps=1e-12,
        sigma_min=1.0,
        sigma_max=10.0,
        plateau_window=500,
        plateau_rtol=1e-8,
        freeze_kernels=False,
        l1_frames="both",
    ):
        self.seed = seed
        self.initial_kernel_count = initial_kernel_count
        self.prune_threshold = prune_threshold
        self.target_l1 = target_l1
        self.weight_fit = weight_fit
        self.weight_diff = weight_diff
        self.weight_smooth = weight_smooth
        self.lr_position = lr_position
        self.lr_shape = lr_shape
        self.lr_intensity = lr_intensity
        self.lr_displacement = lr_displacement
        self.lr_displacement_spread = lr_displacement_spread
        self.spread_release_frac = spread_release_frac
        self.lr_decay_fit = lr_decay_fit
        self.lr_decay_joint = lr_decay_joint
        self.lr_warmup_frac = lr_warmup_frac
        self.max_iter_fit = max_iter_fit
        self.max_iter_joint = max_iter_joint
        self.smooth_eps = smooth_eps
        self.sigma_min = sigma_min
        self.sigma_max = sigma_max
        self.plateau_window = plateau_window
        self.plateau_rtol = plateau_rtol
        self.freeze_kernels = freeze_kernels
        self.l1_frames = l1_frames

    def _config(self) -> OptimConfig:
        return OptimConfig(**self.get_params()).validate()

    def fit(self, frame1, frame2):
        """Estimate the motion from frame1 to frame2; returns self."""
        cfg = self._config()
        initial = init_kernels(cfg, frame1)
        fitted, single_report = fit_single_frame(initial, frame1, cfg)
        result = fit_pair(fitted, frame1, frame2, cfg)

        self.n_kernels_ = len(result.kernels)
        self.kernels_ = result.kernels
        self.displacements_ = result.displacements
        mean, std = aggregate(result.displacements)
        self.motion_ = mean
        self.motion_std_ = std
        self.loss_ = result.loss
        self.single_frame_report_ = single_report
        self.joint_report_ = result.report
        self.converged_ = bool(single_report.converged and result.report.converged)
        return self

    def predict(self):
        """Aggregated (u, v) motion in pixels from the last fit."""
        if not hasattr(self, "motion_"):
            raise RuntimeError("estimator is not fitted; call fit(frame1, frame2) first")
        return self.motion_.copy()

    def fit_predict(self, frame1, frame2):
        return self.fit(frame1, frame2).predict()


class _BaseFlowEstimator(BaseEstimator):
    def fit(self, frame1, frame2):
        self.flow_ = self._run(frame1, frame2)
        return self

    def fit_predict(self, frame1, frame2):
        """Median valid-pixel (u, v) flow for the pair."""
        return self.fit(frame1, frame2).flow_.median_valid()


class LucasKanadeFlow(_BaseFlowEstimator):
    """Windowed least-squares optical flow."""

    def __init__(self, window=9, min_eigenvalue=1e-5, max_condition=1e3):
        self.window = window
        self.min_eigenvalue = min_eigenvalue
        self.max_condition = max_condition

    def _run(self, frame1, frame2):
        return baselines.lucas_kanade(
            frame1,
            frame2,
            window=self.window,
            min_eigenvalue=self.min_eigenvalue,
            max_condition=self.max_condition,
        )


class HornSchunckFlow(_BaseFlowEstimator):
    """Global variational optical flow with gradient smoothness."""

    def __init__(self, smoothness=1e-3, iterations=1500):
        self.smoothness = smoothness
        self.iterations = iterations

    def _run(self, frame1, frame2):
        return baselines.horn_schunck(
            frame1, frame2, smoothness=self.smoothness, iterations=self.iterations
        )


class PhaseFlow(_BaseFlowEstimator):
    """Phase-constancy flow from a bank of oriented complex filters.

    ``orientations`` are in radians; each becomes one
    :class:`gsmotion.baselines.GaborFilter` with the shared frequency and
    envelope standard deviations.
    """

    def __init__(self, orientations=(0.0, np.pi / 2), frequency=0.08, sigma=4.0):
        self.orientations = orientations
        self.frequency = frequency
        self.sigma = sigma

    def _run(self, frame1, frame2):
        filters = [
            baselines.GaborFilter(
                orientation=float(angle),
                frequency=self.frequency,
                sigma_x=self.sigma,
                sigma_y=self.sigma,
            )
            for angle in self.orientations
        ]
        return baselines.phase_flow(frame1, frame2, filters)
