import math

import numpy as np
import pytest

from gsmotion import Kernel2D, KernelSet, ParameterDomainError, eval_kernel, render, render_gradients
from gsmotion.kernels import PARAM_NAMES

from conftest import random_kernel_params

CENTERED = Kernel2D(x=60.0, y=60.0, sigma_x=4.8, sigma_y=4.8, rho=0.0, intensity=1.0)


class TestEvalKernel:
    def test_peak_at_center(self):
        assert eval_kernel(CENTERED, 60.0, 60.0) == 1.0

    def test_offset_matches_scalar_exponent(self):
        assert eval_kernel(CENTERED, 65.0, 60.0) == pytest.approx(
            math.exp(-0.5 * (5 / 4.8) ** 2), abs=0.0
        )

    def test_zero_intensity(self):
        dark = Kernel2D(10.0, 10.0, 2.0, 2.0, 0.0, 0.0)
        assert eval_kernel(dark, 3.0, 8.0) == 0.0

    def test_bounded_by_intensity(self):
        kernel = Kernel2D(5.0, 7.0, 2.0, 3.0, 0.4, 0.6)
        rng = np.random.default_rng(0)
        for _ in range(50):
            x, y = rng.uniform(-5, 20, 2)
            value = eval_kernel(kernel, x, y)
            assert 0.0 <= value <= 0.6

    @pytest.mark.parametrize(
        "bad",
        [
            dict(sigma_x=0.0),
            dict(sigma_x=-1.0),
            dict(sigma_y=0.0),
            dict(rho=1.0),
            dict(rho=-1.3),
            dict(intensity=-0.1),
            dict(x=math.nan),
        ],
    )
    def test_invalid_parameters_raise(self, bad):
        fields = dict(x=1.0, y=2.0, sigma_x=2.0, sigma_y=2.0, rho=0.0, intensity=1.0)
        fields.update(bad)
        with pytest.raises(ParameterDomainError):
            eval_kernel(Kernel2D(**fields), 0.0, 0.0)


class TestRender:
    def test_center_pixel_exact(self):
        image = render(KernelSet.from_kernels([CENTERED]), 121, 121)
        assert image[60, 60] == 1.0

    def test_colocated_kernels_superpose(self):
        one = render(KernelSet.from_kernels([CENTERED]), 121, 121)
        two = render(KernelSet.from_kernels([CENTERED, CENTERED]), 121, 121)
        np.testing.assert_allclose(two, 2.0 * one, rtol=0, atol=1e-15)

    def test_far_region_decays(self):
        corner = Kernel2D(10.0, 10.0, 3.0, 3.0, 0.0, 1.0)
        image = render(KernelSet.from_kernels([corner]), 121, 121)
        # opposite corner is > 10 sigma away
        assert image[120, 120] < 1e-20

    def test_matches_scalar_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(3):
            ks = KernelSet(random_kernel_params(rng, 4, 32, 24))
            image = render(ks, 32, 24)
            for _ in range(20):
                x = int(rng.integers(0, 32))
                y = int(rng.integers(0, 24))
                oracle = sum(eval_kernel(k, float(x), float(y)) for k in ks)
                assert abs(image[y, x] - oracle) < 1e-12

    def test_translation_equivariance(self):
        rng = np.random.default_rng(11)
        params = random_kernel_params(rng, 3, 48, 48, margin=12)
        base = render(KernelSet(params), 48, 48)
        for dx, dy in [(1, 0), (0, 1), (3, 2), (-2, 4)]:
            moved = render(KernelSet(params).translated((float(dx), float(dy))), 48, 48)
            xs = slice(max(dx, 0), 48 + min(dx, 0))
            ys = slice(max(dy, 0), 48 + min(dy, 0))
            xs0 = slice(max(-dx, 0), 48 + min(-dx, 0))
            ys0 = slice(max(-dy, 0), 48 + min(-dy, 0))
            np.testing.assert_allclose(moved[ys, xs], base[ys0, xs0], rtol=0, atol=1e-12)

    def test_empty_set_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            render(KernelSet(np.empty((0, 6))), 8, 8)

    def test_bad_raster_rejected(self):
        with pytest.raises(ValueError):
            render(KernelSet.from_kernels([CENTERED]), 0, 8)

    def test_invalid_params_rejected(self):
        bad = KernelSet(np.array([[1.0, 1.0, -2.0, 1.0, 0.0, 1.0]]))
        with pytest.raises(ParameterDomainError):
            render(bad, 8, 8)


class TestRenderGradients:
    def test_intensity_partial_at_center_is_one(self):
        grads = render_gradients(KernelSet.from_kernels([CENTERED]), 121, 121)
        assert grads[0, PARAM_NAMES.index("intensity"), 60, 60] == 1.0

    def test_center_partials_vanish_at_peak(self):
        grads = render_gradients(KernelSet.from_kernels([CENTERED]), 121, 121)
        assert grads[0, PARAM_NAMES.index("x"), 60, 60] == 0.0
        assert grads[0, PARAM_NAMES.index("y"), 60, 60] == 0.0

    def test_matches_central_differences(self):
        rng = np.random.default_rng(19)
        h = 1e-5
        checked = 0
        while checked < 100:
            params = random_kernel_params(rng, 1, 32, 32)
            x = int(rng.integers(0, 32))
            y = int(rng.integers(0, 32))
            grads = render_gradients(KernelSet(params), 32, 32)[0, :, y, x]
            for j in range(6):
                plus = params.copy()
                minus = params.copy()
                plus[0, j] += h
                minus[0, j] -= h
                fd = (
                    render(KernelSet(plus), 32, 32)[y, x]
                    - render(KernelSet(minus), 32, 32)[y, x]
                ) / (2 * h)
                if abs(fd) < 1e-6:
                    assert abs(grads[j] - fd) < 1e-8
                else:
                    assert abs(grads[j] - fd) / abs(fd) < 1e-5
            checked += 1


class TestKernelSet:
    def test_round_trip_kernels(self):
        ks = KernelSet.from_kernels([CENTERED])
        assert len(ks) == 1
        assert ks[0] == CENTERED
        assert list(ks) == [CENTERED]

    def test_translated_per_kernel(self):
        ks = KernelSet(np.array([
            [1.0, 2.0, 1.0, 1.0, 0.0, 1.0],
            [5.0, 6.0, 1.0, 1.0, 0.0, 1.0],
        ]))
        moved = ks.translated(np.array([[0.5, -0.5], [1.0, 2.0]]))
        assert moved[0].x == 1.5 and moved[0].y == 1.5
        assert moved[1].x == 6.0 and moved[1].y == 8.0
        # original untouched
        assert ks[0].x == 1.0

    def test_translated_shape_error(self):
        ks = KernelSet.from_kernels([CENTERED])
        with pytest.raises(ValueError):
            ks.translated(np.zeros((3, 2)))

    def test_bad_shape_rejected(self):
        with pytest.raises(ValueError):
            KernelSet(np.zeros((2, 5)))
