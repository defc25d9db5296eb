"""Cross-checks between the compiled core and the pure-numpy fallback."""

import numpy as np
import pytest

from shorelake._core import backend_name, numpy_backend

try:
    from shorelake._core import _speedups
except ImportError:
    _speedups = None

needs_compiled = pytest.mark.skipif(_speedups is None,
                                    reason="compiled core not built")


def test_backend_reports_name():
    assert backend_name() in ("numpy", "cython")


def _random_setup(seed=0, ny=37, nx=41):
    rng = np.random.default_rng(seed)
    u = rng.standard_normal((ny, nx))
    u[0, :] = u[-1, :] = u[:, 0] = u[:, -1] = 0.0
    mk = lambda: np.abs(rng.standard_normal((ny, nx)))
    wE, wW, wN, wS, diag = mk(), mk(), mk(), mk(), mk()
    for w in (wE, wW, wN, wS, diag):
        w[0, :] = w[-1, :] = w[:, 0] = w[:, -1] = 0.0
    return u, wE, wW, wN, wS, diag


@needs_compiled
def test_weighted_laplacian_backends_agree():
    u, wE, wW, wN, wS, diag = _random_setup()
    out_np = np.zeros_like(u)
    out_cy = np.zeros_like(u)
    numpy_backend.apply_weighted_laplacian(u, wE, wW, wN, wS, diag, 4.0, out_np)
    _speedups.apply_weighted_laplacian(u, wE, wW, wN, wS, diag, 4.0, out_cy)
    assert np.allclose(out_np, out_cy, rtol=0, atol=1e-13)


@needs_compiled
def test_upwind_divergence_backends_agree():
    rng = np.random.default_rng(1)
    ny, nx = 23, 29
    omega = rng.standard_normal((ny, nx))
    qx = rng.standard_normal((ny, nx + 1))
    qy = rng.standard_normal((ny + 1, nx))
    qx[:, 0] = qx[:, -1] = 0.0
    qy[0, :] = qy[-1, :] = 0.0
    out_np = np.zeros((ny, nx))
    out_cy = np.zeros((ny, nx))
    numpy_backend.upwind_flux_divergence(omega, qx, qy, 8.0, out_np)
    _speedups.upwind_flux_divergence(omega, qx, qy, 8.0, out_cy)
    assert np.allclose(out_np, out_cy, rtol=0, atol=1e-13)


@needs_compiled
def test_outflow_sums_backends_agree():
    rng = np.random.default_rng(2)
    ny, nx = 17, 19
    qx = rng.standard_normal((ny, nx + 1))
    qy = rng.standard_normal((ny + 1, nx))
    out_np = np.zeros((ny, nx))
    out_cy = np.zeros((ny, nx))
    numpy_backend.outflow_sums(qx, qy, out_np)
    _speedups.outflow_sums(qx, qy, out_cy)
    assert np.array_equal(out_np, out_cy)


def test_numpy_upwind_uses_upstream_values():
    # single cell pair: positive flux carries the left value
    omega = np.array([[1.0, 5.0]])
    qx = np.array([[0.0, 2.0, 0.0]])
    qy = np.zeros((2, 2))
    out = np.zeros((1, 2))
    numpy_backend.upwind_flux_divergence(omega, qx, qy, 1.0, out)
    assert out[0, 0] == pytest.approx(2.0 * 1.0)   # outflow of left cell
    assert out[0, 1] == pytest.approx(-2.0 * 1.0)  # inflow carries omega_left
