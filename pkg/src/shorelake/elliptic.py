"""Degenerate weighted Poisson solver for the stream function.

Solves  div((1/b) grad Psi) = f  on the masked grid with Psi = 0 on the
shore, where b = phi^a vanishes at the boundary.  The discrete operator is
the standard 5-point flux form with face transmissibilities given by the
harmonic mean of 1/b at the two adjacent centers (2 / (b1 + b2), which
stays finite as the shore is approached from one side) and a half-cell
ghost (u_ghost = -u) enforcing the homogeneous Dirichlet condition at
faces crossing the mask boundary.

The solve is preconditioned conjugate gradients on the symmetric positive
definite form; the bounded shore profile Phi = Psi / phi^(a+1) and the
velocity

    v = phi grad^perp Phi + (a+1) Phi grad^perp phi,     grad^perp u = (u_y, -u_x)

are recovered afterwards.  This velocity form stays finite through the
collar where the raw quotient (1/b) grad^perp Psi is 0/0.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import blas

from . import _core
from .errors import ConfigurationError, SolverError
from .geometry import (Grid, ScalarField, VectorField, interp_bilinear,
                       lp_norm, masked_gradient)


@dataclass(eq=False)
class WeightedPoissonProblem:
    grid: Grid
    depth: "DepthProfile"
    rhs: ScalarField

    def __post_init__(self):
        if self.rhs.grid is not self.grid and not self.grid.same_layout(self.rhs.grid):
            raise ConfigurationError("rhs lives on a different grid")


class DiscreteWeightedLaplacian:
    """Matrix-free application of u -> div_h((1/b) grad_h u).

    Symmetric and negative semidefinite by construction: each face weight
    appears once in each adjacent cell's stencil with opposite sign, and
    Dirichlet faces only add to the diagonal.
    """

    def __init__(self, grid, b, weight_floor=0.0):
        mask = grid.mask
        if not mask.any():
            raise ConfigurationError("cannot assemble on an empty mask")
        if np.any(b[mask] <= weight_floor):
            raise ConfigurationError(
                "depth vanishes at an interior cell center (mask/phi inconsistency)")
        self.grid = grid
        self.inv_h2 = 1.0 / grid.h**2

        def face_weight(b_here, b_there):
            s = b_here + b_there
            with np.errstate(divide="ignore"):
                return np.where(s > 0.0, 2.0 / np.maximum(s, 1e-300), 0.0)

        ny, nx = mask.shape
        wE = np.zeros((ny, nx))
        wW = np.zeros((ny, nx))
        wN = np.zeros((ny, nx))
        wS = np.zeros((ny, nx))
        diag = np.zeros((ny, nx))

        # east/west faces
        wface = face_weight(b[:, :-1], b[:, 1:])
        both = mask[:, :-1] & mask[:, 1:]
        wE[:, :-1][both] = wface[both]
        wW[:, 1:][both] = wface[both]
        bdry_e = mask[:, :-1] & ~mask[:, 1:]
        bdry_w = ~mask[:, :-1] & mask[:, 1:]
        # north/south faces
        wfaceN = face_weight(b[:-1, :], b[1:, :])
        bothN = mask[:-1, :] & mask[1:, :]
        wN[:-1, :][bothN] = wfaceN[bothN]
        wS[1:, :][bothN] = wfaceN[bothN]
        bdry_n = mask[:-1, :] & ~mask[1:, :]
        bdry_s = ~mask[:-1, :] & mask[1:, :]

        diag += wE + wW + wN + wS
        # Dirichlet half-cell: ghost = -u doubles the face coupling on the diagonal
        add = np.zeros((ny, nx))
        add[:, :-1][bdry_e] += 2.0 * wface[bdry_e]
        add[:, 1:][bdry_w] += 2.0 * wface[bdry_w]
        add[:-1, :][bdry_n] += 2.0 * wfaceN[bdry_n]
        add[1:, :][bdry_s] += 2.0 * wfaceN[bdry_s]
        diag += add

        if not (np.isfinite(wE).all() and np.isfinite(wW).all()
                and np.isfinite(wN).all() and np.isfinite(wS).all()
                and np.isfinite(diag).all()):
            raise ConfigurationError("non-finite face weights (depth underflow)")

        self.wE, self.wW, self.wN, self.wS, self.diag = wE, wW, wN, wS, diag
        self._mask = mask
        self._scratch = np.zeros((ny, nx))

    def apply(self, u, out=None):
        """div_h((1/b) grad_h u); zero outside the mask."""
        if out is None:
            out = np.zeros_like(u)
        _core.apply_weighted_laplacian(
            np.ascontiguousarray(u), self.wE, self.wW, self.wN, self.wS,
            self.diag, self.inv_h2, out)
        return out

    def jacobi_diagonal(self):
        """Diagonal of the SPD form -A (positive on the mask)."""
        d = self.diag * self.inv_h2
        return np.where(self._mask, d, 1.0)


def assemble(problem, weight=None):
    """Discrete operator for div((1/b) grad .); ``weight`` overrides b."""
    X, Y = problem.grid.centers()
    b = weight if weight is not None else problem.depth.depth(X, Y)
    return DiscreteWeightedLaplacian(problem.grid, b)


@dataclass(eq=False)
class StreamSolution:
    psi: ScalarField
    phi_scaled: ScalarField
    velocity: VectorField
    residual_norm: float
    iterations: int
    phi_flagged: np.ndarray  # outermost ring where the Phi quotient used the floor


def _pcg(op, rhs, tol, max_iter, x0=None, callback=None):
    """Jacobi-preconditioned CG on (-A) x = rhs; returns (x, relres, iters).

    CG minimizes the quadratic energy 1/2 <(-A)x, x> - <rhs, x>, i.e. the
    weighted Dirichlet energy of the continuous problem; iterates have
    non-increasing energy.  All arrays vanish outside the mask, so inner
    products run as flat dot products with no masking.
    """
    mask = op.grid.mask
    inv_d = np.where(mask, 1.0 / op.jacobi_diagonal(), 0.0)
    x = np.zeros_like(rhs) if x0 is None else np.where(mask, x0, 0.0)

    xf = x.ravel()
    rhs_norm = math.sqrt(float(blas.ddot(rhs.ravel(), rhs.ravel())))
    if rhs_norm == 0.0:
        return np.zeros_like(rhs), 0.0, 0
    Au = np.zeros_like(rhs)
    r = rhs + op.apply(x, out=Au)
    rf = r.ravel()
    z = r * inv_d
    zf = z.ravel()
    p = z.copy()
    pf = p.ravel()
    Af = Au.ravel()
    rz = float(blas.ddot(rf, zf))
    res = math.sqrt(float(blas.ddot(rf, rf)))
    it = 0
    while res / rhs_norm > tol:
        if it >= max_iter:
            raise SolverError(
                f"CG did not converge in {max_iter} iterations "
                f"(relative residual {res / rhs_norm:.3e})",
                residual=res / rhs_norm, iterations=it)
        op.apply(p, out=Au)           # Au = A p (negative semidefinite form)
        pAp = -float(blas.ddot(pf, Af))
        if pAp <= 0.0:
            raise SolverError(
                "negative curvature in CG: operator not positive definite "
                "(assembly bug signal)", residual=res / rhs_norm, iterations=it)
        alpha = rz / pAp
        blas.daxpy(pf, xf, a=alpha)   # x += alpha p
        blas.daxpy(Af, rf, a=alpha)   # r -= alpha (-A p) = r + alpha A p
        res = math.sqrt(float(blas.ddot(rf, rf)))
        np.multiply(r, inv_d, out=z)
        rz_new = float(blas.ddot(rf, zf))
        beta = rz_new / rz
        blas.dscal(beta, pf)
        blas.daxpy(zf, pf, a=1.0)     # p = z + beta p
        rz = rz_new
        it += 1
        if callback is not None:
            callback(x, res / rhs_norm)
    return x, res / rhs_norm, it


def solve(problem, tol=1e-10, max_iter=None, x0=None, callback=None, operator=None):
    """Solve div((1/b) grad Psi) = f, recover Phi and the velocity.

    Returns a StreamSolution; raises SolverError on non-convergence.
    """
    if tol <= 0:
        raise ConfigurationError("solver tolerance must be positive")
    grid = problem.grid
    op = operator if operator is not None else assemble(problem)
    if max_iter is None:
        max_iter = int(20 * np.sqrt(grid.cell_count)) + 50
    # div((1/b) grad Psi) = f  <=>  (-A) Psi = -f with -A SPD
    rhs = np.where(grid.mask, -problem.rhs.values, 0.0)
    psi, relres, iters = _pcg(op, rhs, tol, max_iter, x0=x0, callback=callback)

    phi_scaled, flagged = scale_out_depth(problem, psi)
    sol = StreamSolution(
        psi=ScalarField(grid, psi),
        phi_scaled=ScalarField(grid, phi_scaled),
        velocity=VectorField(grid, np.zeros_like(psi), np.zeros_like(psi)),
        residual_norm=relres,
        iterations=iters,
        phi_flagged=flagged,
    )
    sol.velocity = recover_velocity(sol, problem.depth)
    return sol


def scale_out_depth(problem, psi):
    """Phi = Psi / phi^(a+1) with the quotient floored in the outermost ring.

    The floor phi >= h g_min / 4 avoids overflow where the cell center sits
    arbitrarily close to the shore; floored cells are flagged and excluded
    from Phi-norm reports.
    """
    grid = problem.grid
    a = problem.depth.exponent
    X, Y = grid.centers()
    phi = problem.depth.defining.eval(X, Y)
    floor = grid.h * grid.g_min / 4.0
    flagged = grid.mask & (phi < floor)
    denom = np.maximum(phi, floor) ** (a + 1.0)
    out = np.where(grid.mask, psi / denom, 0.0)
    return out, flagged


def recover_velocity(sol, profile):
    """v = phi grad^perp Phi + (a+1) Phi grad^perp phi, grad^perp u = (u_y, -u_x).

    Agrees with (1/b) grad^perp Psi away from the shore but stays finite in
    the collar; grad phi is analytic, grad Phi is the masked difference
    gradient.
    """
    grid = sol.psi.grid
    a = profile.exponent
    X, Y = grid.centers()
    phi = np.where(grid.mask, profile.defining.eval(X, Y), 0.0)
    gpx, gpy = profile.defining.grad(X, Y)
    Phi = sol.phi_scaled.values
    dPhix, dPhiy = masked_gradient(grid, Phi)
    u = phi * dPhiy + (a + 1.0) * Phi * gpy
    v = -(phi * dPhix + (a + 1.0) * Phi * gpx)
    return VectorField(grid, u, v)


def raw_velocity(sol, problem):
    """(1/b) grad^perp Psi by masked differences (deep-interior cross-check)."""
    grid = sol.psi.grid
    X, Y = grid.centers()
    b = problem.depth.depth(X, Y)
    gx, gy = masked_gradient(grid, sol.psi.values)
    with np.errstate(divide="ignore", invalid="ignore"):
        u = np.where(grid.mask, gy / b, 0.0)
        v = np.where(grid.mask, -gx / b, 0.0)
    return VectorField(grid, np.nan_to_num(u), np.nan_to_num(v))


def normal_trace_residual(v, chart, n_samples=256, depths=None):
    """max_k |v_extrap(gamma_k) . n| with n = -nu the outward normal.

    The velocity is interpolated at two collar depths along the inward
    normal and extrapolated linearly to the shore; samples whose
    interpolation stencil is entirely exterior are skipped.  Default depths
    sit at fixed fractions of the chart scale (floored at 2.5h) so the
    residual converges under grid refinement instead of tracking the
    resolution-locked quotient noise of the outermost ring.
    """
    grid = v.grid
    h = grid.h
    if depths is None:
        d1 = max(0.08 * chart.scale, 2.5 * h)
        d2 = 2.0 * d1
    else:
        d1, d2 = float(depths[0]), float(depths[1])
    params = np.linspace(0.0, chart.period, n_samples, endpoint=False)
    worst = 0.0
    used = 0
    for t in params:
        g = chart.gamma(t)
        nu = chart.nu(t)
        p1 = g + d1 * nu
        p2 = g + d2 * nu
        u1 = interp_bilinear(grid, v.u, [p1])[0]
        v1 = interp_bilinear(grid, v.v, [p1])[0]
        u2 = interp_bilinear(grid, v.u, [p2])[0]
        v2 = interp_bilinear(grid, v.v, [p2])[0]
        if np.isnan(u1) or np.isnan(u2) or np.isnan(v1) or np.isnan(v2):
            continue
        w = d2 / (d2 - d1)
        u0 = w * u1 - (w - 1.0) * u2
        v0 = w * v1 - (w - 1.0) * v2
        trace = abs(-(u0 * nu[0] + v0 * nu[1]))  # n = -nu
        worst = max(worst, trace)
        used += 1
    if used == 0:
        raise ConfigurationError("no usable boundary samples for the trace residual")
    return worst


def velocity_gradient_norm(grid, vel):
    """Pointwise Frobenius norm of grad v by masked differences."""
    d1x, d1y = masked_gradient(grid, vel.u)
    d2x, d2y = masked_gradient(grid, vel.v)
    return np.sqrt(d1x**2 + d1y**2 + d2x**2 + d2y**2)


def lp_gradient_ratio(sol, problem, p):
    """r(p) = (1/p) ||grad v||_p / (||f||_p + ||b v||_2).

    The denominator pairs the curl datum f = b*omega with the L^2 mass of
    the weighted velocity; a uniform bound of r over p >= 2 is the discrete
    echo of the p-independent gradient estimate.
    """
    if p < 2:
        raise ValueError("p must be >= 2")
    grid = problem.grid
    gnorm = velocity_gradient_norm(grid, sol.velocity)
    X, Y = grid.centers()
    b = problem.depth.depth(X, Y)
    bv = b * sol.velocity.magnitude()
    denom = lp_norm(grid, problem.rhs.values, p) + lp_norm(grid, bv, 2)
    if denom == 0.0:
        raise ValueError("undefined ratio: zero curl datum and zero field")
    return lp_norm(grid, gnorm, p) / (p * denom)
