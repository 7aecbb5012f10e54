import numpy as np
import pytest

from gsmotion import Kernel2D, KernelSet, SceneSpec, make_pair


@pytest.fixture(scope="session")
def validation_scene():
    """121x121 scene: one centered kernel (sigma 4.8, peak 1.0), motion
    0.01 px left and up."""
    kernel = Kernel2D(x=60.0, y=60.0, sigma_x=4.8, sigma_y=4.8, rho=0.0, intensity=1.0)
    return SceneSpec(
        width=121, height=121,
        kernels=KernelSet.from_kernels([kernel]),
        motion=(-0.01, -0.01),
    )


@pytest.fixture(scope="session")
def validation_pair(validation_scene):
    return make_pair(validation_scene)


@pytest.fixture(scope="session")
def small_scene():
    """61x61 single-kernel scene used where a full-size fit would be slow."""
    kernel = Kernel2D(x=30.0, y=30.0, sigma_x=4.0, sigma_y=4.0, rho=0.0, intensity=1.0)
    return SceneSpec(
        width=61, height=61,
        kernels=KernelSet.from_kernels([kernel]),
        motion=(-0.01, -0.01),
    )


@pytest.fixture(scope="session")
def small_pair(small_scene):
    return make_pair(small_scene)


def random_kernel_params(rng, n, width, height, margin=5.0):
    """Random valid kernel parameter rows well inside a raster."""
    return np.column_stack([
        rng.uniform(margin, width - 1 - margin, n),
        rng.uniform(margin, height - 1 - margin, n),
        rng.uniform(1.5, 7.0, n),
        rng.uniform(1.5, 7.0, n),
        rng.uniform(-0.6, 0.6, n),
        rng.uniform(0.05, 1.0, n),
    ])


def blob_pair(shift, size=64, sigma=6.0, intensity=0.8):
    """Quantized frame pair of one smooth blob shifted by a known sub-pixel amount."""
    center = (size - 1) / 2
    kernel = Kernel2D(center, center, sigma, sigma, 0.0, intensity)
    spec = SceneSpec(size, size, KernelSet.from_kernels([kernel]), motion=shift)
    return make_pair(spec)
