import numpy as np
import pytest

from gsmotion import (
    ConfigError,
    Kernel2D,
    KernelSet,
    SceneSpec,
    eval_kernel,
    make_frame,
    make_pair,
    read_scene_config,
    render,
    write_scene_config,
)
from gsmotion.synthetic import normalized_to_pixel


class TestMakeFrame:
    def test_validation_scene_center_is_full_scale(self, validation_scene):
        frame = make_frame(validation_scene)
        assert frame.shape == (121, 121)
        assert frame.dtype == np.uint16
        assert frame[60, 60] == 65535

    def test_zero_motion_frames_identical(self, validation_scene):
        spec = SceneSpec(
            validation_scene.width,
            validation_scene.height,
            validation_scene.kernels,
            motion=(0.0, 0.0),
        )
        f1, f2, motion = make_pair(spec)
        assert motion == (0.0, 0.0)
        assert np.array_equal(f1, f2)

    def test_subpixel_motion_changes_only_near_patch(self, validation_pair):
        f1, f2, _ = validation_pair
        diff = f2.astype(np.int64) - f1.astype(np.int64)
        assert (diff != 0).any()
        # 0.01 px against a max slope of ~0.13/px: about 80 quantization steps
        assert np.abs(diff).max() <= 120
        # quiet far from the patch (beyond ~5 sigma)
        ys, xs = np.mgrid[0:121, 0:121]
        far = np.hypot(xs - 60, ys - 60) > 30
        assert np.abs(diff[far]).max() == 0

    def test_deterministic_bytes(self, validation_scene):
        a1, a2, _ = make_pair(validation_scene)
        b1, b2, _ = make_pair(validation_scene)
        assert a1.tobytes() == b1.tobytes()
        assert a2.tobytes() == b2.tobytes()

    def test_rejects_empty_scene(self):
        with pytest.raises(ValueError):
            make_frame(SceneSpec(8, 8, KernelSet(np.empty((0, 6)))))


class TestGroundTruthConsistency:
    def test_frame2_is_render_of_shifted_kernels(self, validation_scene, validation_pair):
        from gsmotion import quantize

        _, frame2, motion = validation_pair
        moved = validation_scene.kernels.translated(np.asarray(motion))
        rebuilt = quantize(render(moved, validation_scene.width, validation_scene.height))
        assert np.array_equal(frame2, rebuilt)

    def test_half_pixel_shift_matches_offgrid_oracle(self):
        kernel = Kernel2D(20.0, 20.0, 3.0, 3.0, 0.0, 0.9)
        spec = SceneSpec(41, 41, KernelSet.from_kernels([kernel]), motion=(0.5, 0.0))
        shifted = spec.kernels.translated(np.asarray(spec.motion))
        rng = np.random.default_rng(5)
        for _ in range(25):
            x, y = rng.uniform(5, 35, 2)
            assert eval_kernel(shifted[0], x, y) == pytest.approx(
                eval_kernel(kernel, x - 0.5, y), abs=1e-12
            )

    def test_truth_passes_through(self):
        kernels = KernelSet(np.array([
            [10.0, 10.0, 2.0, 2.0, 0.0, 0.5],
            [20.0, 15.0, 3.0, 2.0, 0.1, 0.8],
        ]))
        spec = SceneSpec(41, 31, kernels, motion=(0.25, -0.25))
        _, _, motion = make_pair(spec)
        assert motion == (0.25, -0.25)


class TestSceneConfig:
    def test_normalized_center_maps_to_raster_center(self):
        assert normalized_to_pixel(0.0, 0.0, 121, 121) == (60.0, 60.0)
        assert normalized_to_pixel(-1.0, 1.0, 121, 101) == (0.0, 100.0)

    def test_parse_normalized_scene(self, tmp_path):
        path = tmp_path / "scene.cfg"
        path.write_text(
            "width = 121\n"
            "height = 121\n"
            "coords = normalized\n"
            "kernel = 0.0 0.0 4.8 4.8 0.0 1.0\n"
            "motion_u = -0.01\n"
            "motion_v = -0.01\n"
        )
        spec = read_scene_config(path)
        assert spec.kernels[0].x == 60.0
        assert spec.kernels[0].y == 60.0
        assert spec.kernels[0].sigma_x == 4.8
        assert spec.motion == (-0.01, -0.01)

    def test_round_trip(self, tmp_path, validation_scene):
        path = tmp_path / "scene.cfg"
        write_scene_config(path, validation_scene)
        again = read_scene_config(path)
        assert again.width == validation_scene.width
        np.testing.assert_array_equal(again.kernels.params, validation_scene.kernels.params)
        assert again.motion == validation_scene.motion

    def test_unknown_key_named_in_error(self, tmp_path):
        path = tmp_path / "scene.cfg"
        path.write_text("width = 10\nheight = 10\nwobble = 3\nkernel = 0 0 1 1 0 1\n")
        with pytest.raises(ConfigError, match="wobble"):
            read_scene_config(path)

    def test_missing_kernels_rejected(self, tmp_path):
        path = tmp_path / "scene.cfg"
        path.write_text("width = 10\nheight = 10\n")
        with pytest.raises(ConfigError, match="kernel"):
            read_scene_config(path)

    def test_kernel_arity_checked(self, tmp_path):
        path = tmp_path / "scene.cfg"
        path.write_text("width = 10\nheight = 10\nkernel = 1 2 3\n")
        with pytest.raises(ConfigError, match="6 numbers"):
            read_scene_config(path)

    def test_bad_coords_mode(self, tmp_path):
        path = tmp_path / "scene.cfg"
        path.write_text("width = 10\nheight = 10\ncoords = polar\nkernel = 0 0 1 1 0 1\n")
        with pytest.raises(ConfigError, match="coords"):
            read_scene_config(path)
