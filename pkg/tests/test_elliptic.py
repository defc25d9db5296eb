import numpy as np
import pytest

from shorelake import elliptic
from shorelake.errors import SolverError
from shorelake.geometry import (DepthProfile, ScalarField, VectorField,
                                boundary_chart, build_grid, unit_disk)


def _manufactured_error(profile, h, power):
    """Relative L2 error of the solve with Psi* = phi^power.

    power = a+1 pairs with f = (a+1) lap(phi) = -4(a+1) on the disk;
    power = a+2 pairs with f = (a+2)(8 r^2 - 4) (both by symbolic
    differentiation of div((1/b) grad phi^power)).
    """
    a = profile.exponent
    grid = build_grid(profile, h)
    X, Y = grid.centers()
    if power == a + 1:
        f = np.full(X.shape, -4.0 * (a + 1))
    elif power == a + 2:
        f = (a + 2) * (8.0 * (X**2 + Y**2) - 4.0)
    else:
        raise AssertionError
    rhs = ScalarField(grid, np.where(grid.mask, f, 0.0))
    problem = elliptic.WeightedPoissonProblem(grid, profile, rhs)
    sol = elliptic.solve(problem)
    exact = np.where(grid.mask, np.maximum(1 - X**2 - Y**2, 0.0) ** power, 0.0)
    num = np.sqrt(np.sum((sol.psi.values - exact)[grid.mask] ** 2))
    den = np.sqrt(np.sum(exact[grid.mask] ** 2))
    return num / den, sol, problem


def test_unit_weight_reduces_to_five_point_laplacian(grid16):
    ones = np.ones(grid16.mask.shape)
    op = elliptic.DiscreteWeightedLaplacian(grid16, ones)
    rng = np.random.default_rng(3)
    u = np.where(grid16.mask, rng.standard_normal(grid16.mask.shape), 0.0)
    got = op.apply(u)
    # reference: ghost = -u across mask faces, unit weights
    h2 = grid16.h**2
    m = grid16.mask
    ref = np.zeros_like(u)
    for dj, di in ((0, 1), (0, -1), (1, 0), (-1, 0)):
        nb = np.roll(np.roll(u, -dj, axis=0), -di, axis=1)
        nb_mask = np.roll(np.roll(m, -dj, axis=0), -di, axis=1)
        ref += np.where(nb_mask, nb - u, -2.0 * u)
    ref = np.where(m, ref / h2, 0.0)
    assert np.allclose(got, ref, atol=1e-12)


def test_operator_annihilates_constants_in_the_bulk(disk_profile, grid16):
    X, Y = grid16.centers()
    b = disk_profile.depth(X, Y)
    op = elliptic.DiscreteWeightedLaplacian(grid16, b)
    u = np.where(grid16.mask, 1.0, 0.0)
    out = op.apply(u)
    m = grid16.mask
    bulk = m.copy()
    bulk[1:, :] &= m[:-1, :]
    bulk[:-1, :] &= m[1:, :]
    bulk[:, 1:] &= m[:, :-1]
    bulk[:, :-1] &= m[:, 1:]
    assert np.abs(out[bulk]).max() < 1e-12


def test_operator_symmetry(disk_profile, grid16):
    X, Y = grid16.centers()
    op = elliptic.DiscreteWeightedLaplacian(grid16, disk_profile.depth(X, Y))
    rng = np.random.default_rng(11)
    u = np.where(grid16.mask, rng.standard_normal(grid16.mask.shape), 0.0)
    w = np.where(grid16.mask, rng.standard_normal(grid16.mask.shape), 0.0)
    uAw = float(np.sum(u * op.apply(w)))
    wAu = float(np.sum(w * op.apply(u)))
    scale = max(abs(uAw), abs(wAu))
    assert abs(uAw - wAu) <= 1e-12 * scale


def test_manufactured_solution_first_power(disk_profile):
    err, sol, _ = _manufactured_error(disk_profile, 1.0 / 32, power=2.0)
    assert err < 0.01
    assert sol.residual_norm <= 1e-10


def test_manufactured_solution_second_power(disk_profile):
    err, sol, _ = _manufactured_error(disk_profile, 1.0 / 32, power=3.0)
    assert err < 0.01
    # Phi -> 1 - r^2 = phi on unflagged cells
    grid = sol.psi.grid
    X, Y = grid.centers()
    phi = np.maximum(1 - X**2 - Y**2, 0.0)
    ok = grid.mask & ~sol.phi_flagged & (phi > 0.2)
    assert np.abs(sol.phi_scaled.values[ok] - phi[ok]).max() < 0.03


def test_zero_data_gives_zero_solution(disk_profile, grid16):
    rhs = ScalarField.zeros(grid16)
    problem = elliptic.WeightedPoissonProblem(grid16, disk_profile, rhs)
    sol = elliptic.solve(problem)
    assert np.all(sol.psi.values == 0.0)
    assert sol.iterations == 0
    assert np.all(sol.velocity.u == 0.0) and np.all(sol.velocity.v == 0.0)


def test_solution_scales_linearly_with_data(solved32, disk_profile, grid32):
    sol, problem = solved32
    rhs2 = ScalarField(grid32, 2.0 * problem.rhs.values)
    sol2 = elliptic.solve(elliptic.WeightedPoissonProblem(grid32, disk_profile, rhs2))
    # doubling is exact in floating point (CG scalars are scale invariant)
    assert np.array_equal(sol2.psi.values, 2.0 * sol.psi.values)
    assert np.array_equal(sol2.velocity.u, 2.0 * sol.velocity.u)


def test_energy_monotone_along_iterates(disk_profile, grid16):
    X, Y = grid16.centers()
    rhs = ScalarField(grid16, np.where(grid16.mask, np.sin(2 * X) - Y, 0.0))
    problem = elliptic.WeightedPoissonProblem(grid16, disk_profile, rhs)
    op = elliptic.assemble(problem)
    energies = []

    def record(x, relres):
        quad = -0.5 * float(np.sum(x * op.apply(x)))
        energies.append(quad - float(np.sum(-rhs.values * x)))

    elliptic.solve(problem, callback=record, operator=op)
    diffs = np.diff(energies)
    assert np.all(diffs <= 1e-10 * max(1.0, np.abs(energies).max()))


def test_nonconvergence_raises(disk_profile, grid32):
    rhs = ScalarField.from_function(grid32, lambda x, y: np.full(x.shape, -8.0))
    problem = elliptic.WeightedPoissonProblem(grid32, disk_profile, rhs)
    with pytest.raises(SolverError) as info:
        elliptic.solve(problem, max_iter=3)
    assert info.value.residual is not None


def test_maximum_principle_unit_weight(grid16):
    # nondegenerate sanity: b = 1, f <= 0 implies Psi >= 0
    ones = np.ones(grid16.mask.shape)
    op = elliptic.DiscreteWeightedLaplacian(grid16, ones)
    flat = DepthProfile(unit_disk(), 1.0)
    rhs = ScalarField(grid16, np.where(grid16.mask, -1.0, 0.0))
    problem = elliptic.WeightedPoissonProblem(grid16, flat, rhs)
    sol = elliptic.solve(problem, operator=op)
    assert sol.psi.values.min() >= -1e-12


def test_velocity_of_constant_profile_is_rigid_rotation(disk_profile, grid16):
    # Phi = 1 gives v = (a+1)(-2y, 2x) exactly (analytic grad phi, flat Phi)
    a = disk_profile.exponent
    X, Y = grid16.centers()
    phi_pow = np.where(grid16.mask, np.maximum(1 - X**2 - Y**2, 0.0) ** (a + 1), 0.0)
    sol = elliptic.StreamSolution(
        psi=ScalarField(grid16, phi_pow),
        phi_scaled=ScalarField(grid16, np.where(grid16.mask, 1.0, 0.0)),
        velocity=VectorField(grid16, np.zeros_like(phi_pow), np.zeros_like(phi_pow)),
        residual_norm=0.0, iterations=0,
        phi_flagged=np.zeros_like(grid16.mask))
    vel = elliptic.recover_velocity(sol, disk_profile)
    m = grid16.mask
    bulk = m & (np.maximum(1 - X**2 - Y**2, 0) > 2 * grid16.h)
    assert np.abs(vel.u[bulk] - (a + 1) * (-2 * Y[bulk])).max() < 1e-10
    assert np.abs(vel.v[bulk] - (a + 1) * (2 * X[bulk])).max() < 1e-10


def test_velocity_forms_agree_in_deep_interior(disk_profile):
    errs = []
    for h in (1 / 16, 1 / 32):
        _, sol, problem = _manufactured_error(disk_profile, h, power=2.0)
        grid = sol.psi.grid
        X, Y = grid.centers()
        raw = elliptic.raw_velocity(sol, problem)
        deep = grid.mask & (1 - X**2 - Y**2 > 0.2)
        errs.append(np.hypot(raw.u - sol.velocity.u, raw.v - sol.velocity.v)[deep].max())
    assert errs[1] < errs[0]
    assert errs[1] < 0.2


def test_trace_residual_of_tangent_rotation(disk_profile, grid32):
    X, Y = grid32.centers()
    vel = VectorField(grid32, np.where(grid32.mask, -2 * Y, 0.0),
                      np.where(grid32.mask, 2 * X, 0.0))
    chart = boundary_chart(disk_profile, delta=1.0)
    res = elliptic.normal_trace_residual(vel, chart, n_samples=64)
    assert res < 1e-10


def test_trace_residual_of_uniform_flow(disk_profile, grid32):
    vel = VectorField(grid32, np.where(grid32.mask, 1.0, 0.0),
                      np.zeros(grid32.mask.shape))
    chart = boundary_chart(disk_profile, delta=1.0)
    res = elliptic.normal_trace_residual(vel, chart, n_samples=256)
    assert res == pytest.approx(1.0, abs=0.05)  # attained near (+-1, 0)


def test_gradient_ratio_closed_form_decay(disk_profile, grid32):
    # constructed rotation field: grad v constant, so
    # r(p) = (1/p) |grad v| A^(1/p) / (|f| A^(1/p) + ||bv||_2), A = masked area
    a = disk_profile.exponent
    X, Y = grid32.centers()
    m = grid32.mask
    vel = VectorField(grid32, np.where(m, (a + 1) * (-2 * Y), 0.0),
                      np.where(m, (a + 1) * (2 * X), 0.0))
    rhs = ScalarField(grid32, np.where(m, -4.0 * (a + 1), 0.0))
    problem = elliptic.WeightedPoissonProblem(grid32, disk_profile, rhs)
    sol = elliptic.StreamSolution(
        psi=ScalarField.zeros(grid32), phi_scaled=ScalarField.zeros(grid32),
        velocity=vel, residual_norm=0.0, iterations=0,
        phi_flagged=np.zeros_like(m))
    area = grid32.cell_count * grid32.h**2
    b = disk_profile.depth(X, Y)
    bv2 = float(np.sum((b**2 * ((a + 1) ** 2) * 4 * (X**2 + Y**2))[m]) * grid32.h**2)
    gnorm = 2.0 * np.sqrt(2.0) * (a + 1)
    for p in (4.0, 16.0):
        want = gnorm * area ** (1 / p) / (p * (4 * (a + 1) * area ** (1 / p) + np.sqrt(bv2)))
        got = elliptic.lp_gradient_ratio(sol, problem, p)
        assert got == pytest.approx(want, rel=0.02)
    r4 = elliptic.lp_gradient_ratio(sol, problem, 4)
    r32 = elliptic.lp_gradient_ratio(sol, problem, 32)
    assert r32 < r4  # 1/p decay


def test_gradient_ratio_rejects_zero_data(disk_profile, grid16):
    rhs = ScalarField.zeros(grid16)
    problem = elliptic.WeightedPoissonProblem(grid16, disk_profile, rhs)
    sol = elliptic.solve(problem)
    with pytest.raises(ValueError, match="undefined ratio"):
        elliptic.lp_gradient_ratio(sol, problem, 4)


def test_phi_bounded_under_refinement(disk_profile):
    peaks = []
    for h in (1 / 16, 1 / 32, 1 / 64):
        _, sol, _ = _manufactured_error(disk_profile, h, power=2.0)
        ok = sol.psi.grid.mask & ~sol.phi_flagged
        peaks.append(np.abs(sol.phi_scaled.values[ok]).max())
    assert max(peaks) < 5.0
    assert max(peaks) <= 2.0 * min(peaks)


def test_phi_quotient_exact_off_the_floor(solved32, disk_profile, grid32):
    # Phi * phi^(a+1) reproduces Psi exactly wherever the floor is inactive
    sol, _ = solved32
    a = disk_profile.exponent
    X, Y = grid32.centers()
    phi = 1 - X**2 - Y**2
    ok = grid32.mask & ~sol.phi_flagged
    recon = sol.phi_scaled.values[ok] * phi[ok] ** (a + 1)
    assert np.array_equal(recon, sol.psi.values[ok]) or \
        np.abs(recon - sol.psi.values[ok]).max() <= 4e-16 * np.abs(sol.psi.values[ok]).max()


def test_negative_curvature_detection(disk_profile, grid16):
    # an operator with the wrong sign must trip the assembly-bug signal
    class WrongSign:
        grid = grid16

        def apply(self, u, out=None):
            res = np.where(grid16.mask, u, 0.0)
            if out is not None:
                out[:] = res
                return out
            return res

        def jacobi_diagonal(self):
            return np.ones(grid16.mask.shape)

    rhs = ScalarField(grid16, np.where(grid16.mask, 1.0, 0.0))
    problem = elliptic.WeightedPoissonProblem(grid16, disk_profile, rhs)
    with pytest.raises(SolverError, match="negative curvature"):
        elliptic.solve(problem, operator=WrongSign())


def test_manufactured_solution_on_ellipse():
    # Psi* = phi^(a+1) on the ellipse: f = (a+1) lap(phi) is constant
    from shorelake.geometry import ellipse
    ax, ay, a = 1.0, 0.7, 1.0
    profile = DepthProfile(ellipse(ax, ay), a)
    errs = {}
    traces = {}
    for h in (1 / 32, 1 / 64):
        grid = build_grid(profile, h)
        f_const = (a + 1) * (-2 / ax**2 - 2 / ay**2)
        rhs = ScalarField.from_function(grid, lambda x, y: np.full(x.shape, f_const))
        problem = elliptic.WeightedPoissonProblem(grid, profile, rhs)
        sol = elliptic.solve(problem)
        X, Y = grid.centers()
        exact = np.where(grid.mask,
                         np.maximum(1 - (X / ax) ** 2 - (Y / ay) ** 2, 0) ** (a + 1), 0)
        errs[h] = float(np.sqrt(np.sum((sol.psi.values - exact)[grid.mask] ** 2)
                                / np.sum(exact[grid.mask] ** 2)))
        chart = boundary_chart(profile, delta=5 * h)
        traces[h] = elliptic.normal_trace_residual(sol.velocity, chart, 128)
    assert errs[1 / 64] < 0.01
    assert np.log2(errs[1 / 32] / errs[1 / 64]) >= 1.0
    assert traces[1 / 64] < traces[1 / 32]


def test_solve_on_polynomial_domain():
    # pinched quartic basin: the solver and the shore machinery only need
    # phi analytic with a nondegenerate gradient on {phi = 0}
    from shorelake.geometry import from_polynomial
    coeffs = {(0, 0): 1.0, (2, 0): -1.0, (0, 2): -1.4, (2, 2): -0.8}
    profile = DepthProfile(from_polynomial(coeffs, bbox=(-1.2, 1.2, -1.0, 1.0)), 1.5)
    grid = build_grid(profile, 1 / 48)
    rhs = ScalarField.from_function(grid, lambda x, y: np.cos(2 * x) - y)
    sol = elliptic.solve(elliptic.WeightedPoissonProblem(grid, profile, rhs))
    assert sol.residual_norm <= 1e-10
    ok = grid.mask & ~sol.phi_flagged
    assert np.isfinite(sol.phi_scaled.values[ok]).all()
    chart = boundary_chart(profile, delta=5 * grid.h)
    assert elliptic.normal_trace_residual(sol.velocity, chart, 64) < 0.5
