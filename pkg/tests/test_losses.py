import numpy as np
import pytest

from gsmotion import KernelSet, OptimConfig, compute_loss, loss_gradients, quantize, render
from gsmotion.losses import motion_smoothness, motion_smoothness_gradient

from conftest import random_kernel_params


def _random_state(seed, n=3, size=28):
    """Perturbed-truth kernels, displacements, and a quantized frame pair.

    The state sits near (not at) the frames' generating kernels, mimicking a
    mid-fit iterate. Keeping the loss small keeps the finite-difference
    cancellation noise (eps * loss / h) far below the comparison tolerances.
    """
    rng = np.random.default_rng(seed)
    truth = random_kernel_params(rng, n, size, size)
    frame1 = quantize(render(KernelSet(truth), size, size).clip(max=1.0))
    frame2 = quantize(
        render(KernelSet(truth).translated((-0.2, 0.15)), size, size).clip(max=1.0)
    )
    params = truth.copy()
    params[:, 0:2] += rng.uniform(-0.5, 0.5, (n, 2))
    params[:, 2:4] *= rng.uniform(0.9, 1.1, (n, 2))
    params[:, 4] = np.clip(params[:, 4] + rng.uniform(-0.1, 0.1, n), -0.9, 0.9)
    params[:, 5] *= rng.uniform(0.9, 1.1, n)
    displacements = rng.normal(0.03, 0.02, (n, 2))
    return KernelSet(params), displacements, frame1, frame2


class TestMotionSmoothness:
    def test_uniform_field_is_zero(self):
        d = np.tile([0.013, -0.007], (9, 1))
        assert motion_smoothness(d, 1e-12) == 0.0

    def test_hand_computed_two_kernel_case(self):
        # mean (0.02, 0); summed per-axis population variances 1e-4; spread 0.01
        d = np.array([[0.01, 0.0], [0.03, 0.0]])
        expected = 0.01 / (0.02 + 1e-12)
        assert motion_smoothness(d, 1e-12) == pytest.approx(expected, rel=1e-12)

    def test_zero_field_hits_epsilon_guard(self):
        d = np.zeros((4, 2))
        assert motion_smoothness(d, 1e-12) == 0.0
        assert np.all(motion_smoothness_gradient(d, 1e-12) == 0.0)

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(3)
        d = rng.normal(0.05, 0.02, (5, 2))
        grad = motion_smoothness_gradient(d, 1e-12)
        h = 1e-8
        for i in range(5):
            for j in range(2):
                dp = d.copy(); dp[i, j] += h
                dm = d.copy(); dm[i, j] -= h
                fd = (motion_smoothness(dp, 1e-12) - motion_smoothness(dm, 1e-12)) / (2 * h)
                assert grad[i, j] == pytest.approx(fd, rel=1e-6, abs=1e-10)


class TestComputeLoss:
    def test_perfect_fit_uniform_motion_all_zero(self):
        # zero-intensity kernels render to zero, which matches all-black frames
        params = np.array([[5.0, 5.0, 2.0, 2.0, 0.0, 0.0]])
        frames = np.zeros((16, 16), dtype=np.uint16)
        d = np.tile([0.01, 0.01], (1, 1))
        breakdown = compute_loss(KernelSet(params), d, frames, frames, OptimConfig())
        assert breakdown.l1_frame1 == 0.0
        assert breakdown.l1_frame2 == 0.0
        assert breakdown.l_diff == 0.0
        assert breakdown.l_smooth == 0.0
        assert breakdown.total == 0.0

    @pytest.mark.parametrize("seed", range(5))
    def test_diff_and_recomposition_identities(self, seed):
        ks, d, f1, f2 = _random_state(seed)
        cfg = OptimConfig()
        b = compute_loss(ks, d, f1, f2, cfg)
        assert b.l_diff == pytest.approx(abs(b.l1_frame1 - b.l1_frame2), abs=1e-12)
        recomposed = (
            cfg.weight_fit * (b.l1_frame1 + b.l1_frame2) / 2
            + cfg.weight_diff * b.l_diff
            + cfg.weight_smooth * b.l_smooth
        )
        assert b.total == pytest.approx(recomposed, abs=1e-12)

    def test_uniform_motion_smooth_term_exactly_zero(self):
        ks, _, f1, f2 = _random_state(11, n=4)
        d = np.tile([0.02, -0.01], (4, 1))
        b = compute_loss(ks, d, f1, f2, OptimConfig())
        assert b.l_smooth == 0.0

    def test_dimension_mismatch_rejected(self):
        ks, d, f1, _ = _random_state(0)
        with pytest.raises(ValueError, match="shapes differ"):
            compute_loss(ks, d, f1, np.zeros((4, 4), dtype=np.uint16), OptimConfig())

    def test_misaligned_displacements_rejected(self):
        ks, _, f1, f2 = _random_state(0)
        with pytest.raises(ValueError, match="displacements"):
            compute_loss(ks, np.zeros((7, 2)), f1, f2, OptimConfig())


class TestLossGradients:
    @pytest.mark.parametrize("seed", range(10))
    def test_matches_central_differences(self, seed):
        ks, d, f1, f2 = _random_state(seed)
        cfg = OptimConfig()
        kernel_grads, disp_grads, _ = loss_gradients(ks, d, f1, f2, cfg)
        h = 1e-6

        def total(params, disp):
            return compute_loss(KernelSet(params), disp, f1, f2, cfg).total

        for i in range(len(ks)):
            for j in range(6):
                plus = ks.params.copy(); plus[i, j] += h
                minus = ks.params.copy(); minus[i, j] -= h
                fd = (total(plus, d) - total(minus, d)) / (2 * h)
                if abs(fd) < 1e-6:
                    assert abs(kernel_grads[i, j] - fd) < 1e-8
                else:
                    assert abs(kernel_grads[i, j] - fd) / abs(fd) < 1e-5
            for j in range(2):
                plus = d.copy(); plus[i, j] += h
                minus = d.copy(); minus[i, j] -= h
                fd = (total(ks.params, plus) - total(ks.params, minus)) / (2 * h)
                if abs(fd) < 1e-6:
                    assert abs(disp_grads[i, j] - fd) < 1e-8
                else:
                    assert abs(disp_grads[i, j] - fd) / abs(fd) < 1e-5

    def test_pure_fit_weights_reduce_to_l1_gradient(self):
        from gsmotion.kernels import l1_fit_gradients
        from gsmotion.image import normalize

        ks, d, f1, f2 = _random_state(21)
        cfg = OptimConfig(weight_fit=1.0, weight_diff=0.0, weight_smooth=0.0)
        kernel_grads, disp_grads, _ = loss_gradients(ks, d, f1, f2, cfg)

        _, g1, _ = l1_fit_gradients(ks, normalize(f1))
        _, g2, _ = l1_fit_gradients(ks.translated(d), normalize(f2))
        np.testing.assert_allclose(kernel_grads, (g1 + g2) / 2, rtol=0, atol=1e-15)
        np.testing.assert_allclose(disp_grads, g2[:, :2] / 2, rtol=0, atol=1e-15)

    def test_uniform_motion_subgradient_finite_and_fit_part_checked(self):
        # at a uniform field the smoothness term is non-differentiable; its
        # subgradient is taken as zero, so the gradient equals the fit parts
        ks, _, f1, f2 = _random_state(31, n=4)
        d = np.tile([0.015, -0.005], (4, 1))
        cfg = OptimConfig()
        _, disp_grads, _ = loss_gradients(ks, d, f1, f2, cfg)
        assert np.all(np.isfinite(disp_grads))

        fit_only = OptimConfig(weight_fit=0.5, weight_diff=0.5, weight_smooth=0.0)
        _, fit_disp, _ = loss_gradients(ks, d, f1, f2, fit_only)
        h = 1e-6
        for i in range(4):
            for j in range(2):
                plus = d.copy(); plus[i, j] += h
                minus = d.copy(); minus[i, j] -= h
                fd = (
                    compute_loss(ks, plus, f1, f2, fit_only).total
                    - compute_loss(ks, minus, f1, f2, fit_only).total
                ) / (2 * h)
                if abs(fd) >= 1e-6:
                    assert abs(fit_disp[i, j] - fd) / abs(fd) < 1e-5


class TestFastPathEquivalence:
    def test_numba_and_numpy_paths_agree(self):
        from gsmotion import _fast
        from gsmotion.image import normalize

        if not _fast.available:
            pytest.skip("numba path not active")
        rng = np.random.default_rng(17)
        for _ in range(5):
            params = random_kernel_params(rng, 6, 48, 40)
            target = normalize(quantize(rng.random((40, 48)) * 0.9))
            l1_np, grads_np = _fast._numpy_eval(params, target)
            l1_nb, grads_nb = _fast.fit_eval(params, target)
            assert l1_np == pytest.approx(l1_nb, rel=1e-13, abs=1e-15)
            np.testing.assert_allclose(grads_np, grads_nb, rtol=1e-10, atol=1e-14)
