import numpy as np
import pytest

from shorelake.errors import ConfigurationError
from shorelake.geometry import (DepthProfile, ScalarField, boundary_chart,
                                build_grid, chart_point, eval_depth,
                                from_polynomial, interp_bilinear, unit_disk)


def test_depth_center_of_disk(disk_profile):
    assert eval_depth(disk_profile, (0.0, 0.0)) == pytest.approx(1.0)


def test_depth_on_shore(disk_profile):
    assert eval_depth(disk_profile, (1.0, 0.0)) == 0.0
    assert eval_depth(disk_profile, (0.6, 0.8)) == 0.0


def test_depth_quadratic_exponent():
    prof = DepthProfile(unit_disk(), 2.0)
    # phi(0.5, 0) = 0.75, squared
    assert eval_depth(prof, (0.5, 0.0)) == pytest.approx(0.5625, rel=1e-14)


def test_depth_zero_outside(disk_profile):
    assert eval_depth(disk_profile, (2.0, 0.3)) == 0.0


def test_depth_exponent_must_be_positive():
    with pytest.raises(ConfigurationError):
        DepthProfile(unit_disk(), -1.0)


def test_coarse_mask_inside_disk(disk_profile):
    grid = build_grid(disk_profile, 0.25)
    X, Y = grid.centers()
    assert grid.mask.any()
    assert np.all(np.hypot(X[grid.mask], Y[grid.mask]) < 1.0)


def test_masked_area_converges_to_disk_area(disk_profile):
    grid = build_grid(disk_profile, 1.0 / 128)
    area = grid.cell_count * grid.h**2
    assert abs(area - np.pi) / np.pi < 0.02


def test_empty_interior_rejected():
    dry = from_polynomial({(0, 0): -1.0}, bbox=(-1, 1, -1, 1))
    with pytest.raises(ConfigurationError, match="empty interior"):
        build_grid(DepthProfile(dry, 1.0), 0.25)


def test_grid_is_deterministic(disk_profile):
    g1 = build_grid(disk_profile, 1.0 / 20)
    g2 = build_grid(disk_profile, 1.0 / 20)
    assert np.array_equal(g1.mask, g2.mask)
    assert g1.g_min == g2.g_min


def test_tight_bbox_rejected(disk_profile):
    with pytest.raises(ConfigurationError, match="bounding box"):
        build_grid(disk_profile, 0.125, bbox=(-1.0, 1.0, -1.0, 1.0))


def test_chart_points_on_unit_circle(disk_profile):
    chart = boundary_chart(disk_profile, delta=0.3)
    p = chart_point(chart, 0.0, 0.0)
    assert np.allclose(p, [1.0, 0.0], atol=1e-12)
    inward = chart_point(chart, 0.0, 0.3)
    assert np.allclose(inward, [0.7, 0.0], atol=1e-12)


def test_chart_zero_level(disk_profile, grid16):
    chart = boundary_chart(disk_profile, delta=5 * grid16.h)
    for t in np.linspace(0, 2 * np.pi, 17):
        p = chart.gamma(t)
        assert abs(disk_profile.defining.eval(p[0], p[1])) <= 10 * grid16.h**2


def test_chart_taylor_expansion(disk_profile):
    # phi(Gamma(x', x_n)) = x_n |grad phi| + O(x_n^2) along the inward normal
    chart = boundary_chart(disk_profile, delta=0.2)
    t = 1.1
    g = chart.gamma(t)
    gx, gy = disk_profile.defining.grad(g[0], g[1])
    gnorm = np.hypot(gx, gy)
    for xn in (1e-3, 1e-2):
        p = chart_point(chart, t, xn)
        phi = disk_profile.defining.eval(p[0], p[1])
        assert abs(phi - xn * gnorm) <= 2.0 * xn**2 * 2.0  # |hess| = 2 on the disk


def test_chart_normal_is_inward(disk_profile):
    chart = boundary_chart(disk_profile, delta=0.2)
    for t in (0.0, 2.0, 4.0):
        g = chart.gamma(t)
        nu = chart.nu(t)
        gx, gy = disk_profile.defining.grad(g[0], g[1])
        assert nu @ np.array([gx, gy]) > 0


def test_chart_point_outside_collar_rejected(disk_profile):
    chart = boundary_chart(disk_profile, delta=0.2)
    with pytest.raises(ValueError, match="collar"):
        chart_point(chart, 0.0, 0.5)
    with pytest.raises(ValueError, match="collar"):
        chart_point(chart, 0.0, -0.01)


def test_polynomial_defining_function_derivatives():
    # phi = 1 - x^2 - 2 y^2 + 0.3 x y
    coeffs = {(0, 0): 1.0, (2, 0): -1.0, (0, 2): -2.0, (1, 1): 0.3}
    phi = from_polynomial(coeffs, bbox=(-1.2, 1.2, -1.2, 1.2))
    x, y = 0.31, -0.4
    assert phi.eval(x, y) == pytest.approx(1 - x**2 - 2 * y**2 + 0.3 * x * y)
    gx, gy = phi.grad(x, y)
    assert gx == pytest.approx(-2 * x + 0.3 * y)
    assert gy == pytest.approx(-4 * y + 0.3 * x)
    hxx, hxy, hyy = phi.hess(x, y)
    assert (hxx, hxy, hyy) == (pytest.approx(-2.0), pytest.approx(0.3), pytest.approx(-4.0))


def test_depth_positive_inside_zero_outside(disk_profile, grid16):
    X, Y = grid16.centers()
    depth = disk_profile.depth(X, Y)
    assert np.all(depth[grid16.mask] > 0)
    assert np.all(depth[~grid16.mask] == 0)


def test_scalar_field_rejects_nan(grid16):
    values = np.zeros(grid16.mask.shape)
    values[grid16.mask] = np.nan
    with pytest.raises(ConfigurationError):
        ScalarField(grid16, values)


def test_bilinear_interpolation_exact_on_linear(disk_profile, grid16):
    X, Y = grid16.centers()
    vals = np.where(grid16.mask, 2.0 * X - 3.0 * Y + 1.0, 0.0)
    pts = np.array([[0.1, 0.2], [-0.3, 0.05], [0.25, -0.4]])
    got = interp_bilinear(grid16, vals, pts)
    want = 2 * pts[:, 0] - 3 * pts[:, 1] + 1
    assert np.allclose(got, want, atol=1e-12)
