"""Optional numba-accelerated evaluation for the fitting loops.

The fused kernel mirrors :func:`gsmotion.kernels.l1_fit_gradients` exactly
(float64 arithmetic, fixed summation order, no truncation); tests assert the
two paths agree. When numba is unavailable, or GSMOTION_NO_NUMBA is set, the
numpy implementation is used instead.
"""

import os

import numpy as np

from .kernels import KernelSet, l1_fit_gradients


def _numpy_eval(params: np.ndarray, target: np.ndarray):
    l1, grads, _ = l1_fit_gradients(KernelSet(params), target)
    return l1, grads


fit_eval = _numpy_eval
available = False

if not os.environ.get("GSMOTION_NO_NUMBA"):
    try:
        import numba

        @numba.njit(cache=True)
        def _fused(params, target):  # pragma: no cover - exercised via fit_eval
            n = params.shape[0]
            height, width = target.shape
            basis = np.empty((n, height, width))
            rendered = np.zeros((height, width))
            for i in range(n):
                cx, cy = params[i, 0], params[i, 1]
                sx, sy = params[i, 2], params[i, 3]
                rho, intensity = params[i, 4], params[i, 5]
                half_inv = -0.5 / (1.0 - rho * rho)
                for y in range(height):
                    b = (y - cy) / sy
                    for x in range(width):
                        a = (x - cx) / sx
                        e = np.exp((a * a - 2.0 * rho * a * b + b * b) * half_inv)
                        basis[i, y, x] = e
                        rendered[y, x] += intensity * e

            l1 = 0.0
            weight = np.empty((height, width))
            n_pixels = height * width
            for y in range(height):
                for x in range(width):
                    r = rendered[y, x] - target[y, x]
                    l1 += abs(r)
                    weight[y, x] = (1.0 if r > 0.0 else (-1.0 if r < 0.0 else 0.0)) / n_pixels
            l1 /= n_pixels

            grads = np.empty((n, 6))
            for i in range(n):
                cx, cy = params[i, 0], params[i, 1]
                sx, sy = params[i, 2], params[i, 3]
                rho, intensity = params[i, 4], params[i, 5]
                om = 1.0 - rho * rho
                m0 = 0.0; ma = 0.0; mb = 0.0; maa = 0.0; mab = 0.0; mbb = 0.0
                for y in range(height):
                    b = (y - cy) / sy
                    for x in range(width):
                        a = (x - cx) / sx
                        we = weight[y, x] * basis[i, y, x]
                        m0 += we
                        ma += we * a
                        mb += we * b
                        maa += we * a * a
                        mab += we * a * b
                        mbb += we * b * b
                grads[i, 0] = intensity * (ma - rho * mb) / (sx * om)
                grads[i, 1] = intensity * (mb - rho * ma) / (sy * om)
                grads[i, 2] = intensity * (maa - rho * mab) / (sx * om)
                grads[i, 3] = intensity * (mbb - rho * mab) / (sy * om)
                grads[i, 4] = intensity * ((1.0 + rho * rho) * mab - rho * (maa + mbb)) / (om * om)
                grads[i, 5] = m0
            return l1, grads

        def fit_eval(params, target):
            l1, grads = _fused(np.ascontiguousarray(params), target)
            return float(l1), grads

        available = True
    except ImportError:  # pragma: no cover
        pass
