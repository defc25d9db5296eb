"""Estimate diagnostics: Holder quotients, the uniform p-sweep gradient
constant, and the Yudovich/Osgood uniqueness envelope for twin runs.

The uniqueness experiment compares two trajectories A, B of the transport
scheme that differ by a small initial perturbation.  With

    y(t) = || sqrt(b) (v_A - v_B) ||_L2^2,
    M    = max sqrt(b)|v_A|  +  max sqrt(b)|v_B|   (over cells and snapshots),
    C    = sup_p ||grad v||_p / (p ||b omega||_p)  (fitted over a p sweep),

the p-optimized energy inequality gives dy/dt <= e C y / log(M^2/y), whose
equality solution from y(0) = y0 is the double-exponential envelope

    y(t) = M^2 exp(-sqrt(u0^2 - 2 e C t)),      u0 = log(M^2 / y0),

reaching M^2 at the horizon t = u0^2 / (2 e C).  As y0 -> 0 the envelope
collapses to zero for all t: that collapse is the uniqueness statement, and
the discrete runs are required to stay below the envelope with slack.
"""

import math
from dataclasses import dataclass

import numpy as np

from .elliptic import velocity_gradient_norm
from .errors import ConfigurationError
from .geometry import interp_bilinear, lp_norm


@dataclass
class HolderEstimate:
    exponent: float
    quotient: float
    pairs_used: int


def holder_quotient(field, mu, pairs=None, grid=None, n_pairs=100_000,
                    seed=0, margin=None):
    """max |u(x) - u(y)| / |x - y|^mu over sampled interior pairs.

    ``field`` is a ScalarField/VectorField or a raw array with ``grid``
    supplied; vector differences use the Euclidean norm.  Pairs may be
    passed explicitly (the estimate is monotone in the pair set) or sampled
    uniformly from the interior with a fixed seed.
    """
    if not 0.0 < mu < 1.0:
        raise ValueError("Holder exponent mu must lie in (0, 1)")
    if grid is None:
        grid = field.grid
    comps = (field.u, field.v) if hasattr(field, "u") else (field.values,)
    if pairs is None:
        pairs = _sample_interior_pairs(grid, n_pairs, seed, margin)
    P, Q = pairs
    dist = np.linalg.norm(P - Q, axis=1)
    keep = dist > 1e-12
    P, Q, dist = P[keep], Q[keep], dist[keep]
    diff_sq = np.zeros(len(P))
    valid = np.ones(len(P), dtype=bool)
    for comp in comps:
        up = interp_bilinear(grid, comp, P)
        uq = interp_bilinear(grid, comp, Q)
        ok = ~(np.isnan(up) | np.isnan(uq))
        valid &= ok
        d = np.where(ok, up - uq, 0.0)
        diff_sq += d * d
    quots = np.sqrt(diff_sq[valid]) / dist[valid] ** mu
    if quots.size == 0:
        raise ConfigurationError("no valid interior pairs for the Holder quotient")
    return HolderEstimate(exponent=mu, quotient=float(quots.max()),
                          pairs_used=int(valid.sum()))


def _sample_interior_pairs(grid, n_pairs, seed, margin):
    rng = np.random.default_rng(seed)
    if margin is None:
        margin = 2.0 * grid.h
    idx_j, idx_i = np.nonzero(grid.mask)
    xs = grid.x0 + (idx_i + 0.5) * grid.h
    ys = grid.y0 + (idx_j + 0.5) * grid.h
    lo = np.array([xs.min() + margin, ys.min() + margin])
    hi = np.array([xs.max() - margin, ys.max() - margin])
    pts = []
    need = 2 * n_pairs
    while sum(len(p) for p in pts) < need:
        cand = rng.uniform(lo, hi, size=(need, 2))
        vals = interp_bilinear(grid, grid.mask.astype(float), cand)
        inside = np.nan_to_num(vals, nan=0.0) > 0.999
        pts.append(cand[inside])
    all_pts = np.concatenate(pts)[:need]
    return all_pts[:n_pairs], all_pts[n_pairs:]


@dataclass
class GradientConstantFit:
    p_values: np.ndarray
    ratios: np.ndarray
    constant: float
    trend_free: bool   # max over the sweep within 1.5x of the small-p max


def fit_gradient_constant(sol, problem, p_list=(3, 4, 8, 16, 32, 64)):
    """max_p ||grad v||_p / (p ||b omega||_p) over the sweep.

    ``problem.rhs`` is the curl datum b*omega of the solve that produced
    ``sol``.  A uniform constant (no upward trend in p) is the discrete
    echo of the p-independent gradient estimate.
    """
    p_list = np.asarray(sorted(p_list), dtype=float)
    if p_list[0] < 3:
        raise ValueError("gradient-constant sweep starts at p = 3")
    grid = problem.grid
    gnorm = velocity_gradient_norm(grid, sol.velocity)
    ratios = []
    for p in p_list:
        denom = p * lp_norm(grid, problem.rhs.values, p)
        if denom == 0.0:
            raise ValueError("zero curl datum: gradient ratio undefined")
        ratios.append(lp_norm(grid, gnorm, p) / denom)
    ratios = np.array(ratios)
    small = ratios[p_list <= 8.0]
    trend_free = bool(ratios.max() <= 1.5 * small.max())
    return GradientConstantFit(p_values=p_list, ratios=ratios,
                               constant=float(ratios.max()), trend_free=trend_free)


def osgood_envelope(y0, M, C, t):
    """Closed-form solution of dy/dt = e C y / log(M^2 / y) from y(0) = y0.

    Returns M^2 past the horizon u0^2/(2 e C) (bound blow-up; flagged by
    callers, not an exception).  Monotone increasing in t, y0 and C on its
    domain, decreasing in M at fixed y0 for t > 0 (a larger ceiling deepens
    the log well), and collapsing to 0 for all t as y0 -> 0: that collapse
    is the uniqueness statement.
    """
    if M <= 0:
        raise ValueError("velocity ceiling M must be positive")
    if C < 0:
        raise ValueError("gradient constant C must be nonnegative")
    if not 0.0 < y0 < M * M:
        raise ValueError("need 0 < y0 < M^2 for the envelope")
    t = np.asarray(t, dtype=float)
    u0 = math.log(M * M / y0)
    disc = u0 * u0 - 2.0 * math.e * C * t
    out = np.where(disc > 0.0,
                   M * M * np.exp(-np.sqrt(np.maximum(disc, 0.0))),
                   M * M)
    return float(out) if out.ndim == 0 else out


def osgood_horizon(y0, M, C):
    """Time at which the envelope reaches M^2."""
    if C == 0:
        return math.inf
    u0 = math.log(M * M / y0)
    return u0 * u0 / (2.0 * math.e * C)


@dataclass
class UniquenessExperiment:
    run_a: object
    run_b: object
    times: np.ndarray
    y: np.ndarray
    M: float
    C: float
    M_percentile: float   # 99.9th percentile cross-check of sqrt(b)|v|


def build_uniqueness_experiment(run_a, run_b, profile, C):
    """Pair two trajectories on the same grid into a uniqueness experiment."""
    ga = run_a.snapshots[0].omega.grid
    gb = run_b.snapshots[0].omega.grid
    if not ga.same_layout(gb):
        raise ConfigurationError("uniqueness runs live on different grids")
    ta = np.asarray(run_a.times)
    tb = np.asarray(run_b.times)
    if len(ta) != len(tb) or np.max(np.abs(ta - tb)) > 1e-10:
        raise ConfigurationError("uniqueness runs have mismatched snapshot times")
    X, Y = ga.centers()
    b = np.where(ga.mask, profile.depth(X, Y), 0.0)
    sqb = np.sqrt(b)
    ys = []
    weighted_speeds = []
    M = 0.0
    for run in (run_a, run_b):
        peak = 0.0
        for snap in run.snapshots:
            speed = sqb * snap.velocity.magnitude()
            peak = max(peak, float(speed[ga.mask].max()))
            weighted_speeds.append(speed[ga.mask])
        M += peak
    for sa, sb in zip(run_a.snapshots, run_b.snapshots):
        du = sa.velocity.u - sb.velocity.u
        dv = sa.velocity.v - sb.velocity.v
        ys.append(float(np.sum(b * (du * du + dv * dv)) * ga.h**2))
    percentile = float(np.percentile(np.concatenate(weighted_speeds), 99.9))
    return UniquenessExperiment(run_a=run_a, run_b=run_b, times=ta,
                                y=np.array(ys), M=M, C=C,
                                M_percentile=percentile)


@dataclass
class UniquenessReport:
    experiment: UniquenessExperiment
    envelope: np.ndarray
    slack: float
    y0_floor: float
    saturated: bool
    passed: bool


def uniqueness_report(exp, slack=10.0, y0_floor=None):
    """Check y(t) <= slack * envelope(y(0) + floor, M, C, t) at all snapshots.

    Identical runs give y = 0 exactly and pass trivially.  The floor keeps
    the envelope defined when the initial separation is numerically zero.
    """
    y0 = float(exp.y[0])
    if y0_floor is None:
        y0_floor = max(1e-30 * exp.M**2, 1e-300)
    y0_eff = y0 + y0_floor
    env = osgood_envelope(y0_eff, exp.M, exp.C, exp.times)
    horizon = osgood_horizon(y0_eff, exp.M, exp.C)
    saturated = bool(exp.times[-1] >= horizon)
    passed = bool(np.all(exp.y <= slack * env + 1e-300))
    return UniquenessReport(experiment=exp, envelope=env, slack=slack,
                            y0_floor=y0_floor, saturated=saturated, passed=passed)
