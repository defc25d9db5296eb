"""Command-line entry point: reproducible runs bound to config files.

Subcommands: solve-elliptic, simulate, kernel-check, diagnose.  Every run
writes CSV artifacts plus a manifest.json recording the config echo, seed,
key scalar outputs and the sha256 of each emitted file.  With a fixed seed
the CSV artifacts are byte-identical across repeated runs (the manifest's
wall_time_s field is the only nondeterministic output).

Exit codes: 0 success, 2 config validation, 3 run configuration,
4 solver failure, 5 numerical accuracy, 6 diagnostic check failed,
1 unexpected.
"""

import argparse
import hashlib
import json
import os
import sys
import time

import numpy as np

from . import __version__
from . import diagnostics as diag
from . import elliptic, kernels, transport
from .config import parse_config
from .errors import ConfigurationError, NumericsError, ShorelakeError, SolverError
from .geometry import ScalarField, VectorField, boundary_chart, build_grid

_FMT = "%.17g"


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_FMT % v if isinstance(v, float) else str(v)
                              for v in row) + "\n")


def _field_rows(grid, columns):
    X, Y = grid.centers()
    jj, ii = np.nonzero(grid.mask)
    for j, i in zip(jj.tolist(), ii.tolist()):
        yield [i, j, float(X[j, i]), float(Y[j, i])] + [float(c[j, i]) for c in columns]


def _sha256(path):
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


class RunWriter:
    def __init__(self, out_dir, subcommand, cfg, seed, threads):
        self.out_dir = out_dir
        os.makedirs(out_dir, exist_ok=True)
        self.t0 = time.time()
        self.manifest = {
            "tool": "shorelake",
            "version": __version__,
            "subcommand": subcommand,
            "seed": seed,
            "threads": threads,
            "config": cfg.raw_text if cfg is not None else "",
            "outputs": {},
            "scalars": {},
        }

    def path(self, name):
        return os.path.join(self.out_dir, name)

    def register(self, name):
        self.manifest["outputs"][name] = _sha256(self.path(name))

    def scalar(self, key, value):
        self.manifest["scalars"][key] = value

    def finish(self):
        self.manifest["wall_time_s"] = time.time() - self.t0
        with open(self.path("manifest.json"), "w") as fh:
            json.dump(self.manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return self.manifest


def _grid_for(cfg):
    profile = cfg.profile()
    h = cfg.get("domain", "h")
    if h is None:
        raise ConfigurationError("domain.h is required")
    return profile, build_grid(profile, h, bbox=cfg.get("domain", "bbox"))


def _chart_for(cfg, profile, grid):
    anchor = cfg.get("domain", "anchor", (0.0, 0.0))
    if len(anchor) != 2:
        raise ConfigurationError("domain.anchor needs two coordinates")
    return boundary_chart(profile, delta=5 * grid.h, anchor=anchor)


def _cmd_solve_elliptic(cfg, writer, seed):
    profile, grid = _grid_for(cfg)
    rhs_expr = cfg.expression("elliptic", "rhs", "-8")
    rhs = ScalarField.from_function(grid, rhs_expr)
    problem = elliptic.WeightedPoissonProblem(grid, profile, rhs)
    sol = elliptic.solve(problem, tol=cfg.get("elliptic", "tol", 1e-10),
                         max_iter=cfg.get("elliptic", "max_iter"))
    chart = _chart_for(cfg, profile, grid)
    trace = elliptic.normal_trace_residual(sol.velocity, chart, n_samples=128)

    _write_csv(writer.path("fields.csv"),
               ["i", "j", "x", "y", "psi", "phi", "v1", "v2"],
               _field_rows(grid, [sol.psi.values, sol.phi_scaled.values,
                                  sol.velocity.u, sol.velocity.v]))
    writer.register("fields.csv")
    writer.scalar("iterations", sol.iterations)
    writer.scalar("residual", sol.residual_norm)
    writer.scalar("cells", grid.cell_count)
    writer.scalar("normal_trace_residual", trace)
    exact_expr = cfg.get("elliptic", "exact")
    if exact_expr:
        exact = ScalarField.from_function(grid, cfg.expression("elliptic", "exact", "0"))
        num = np.sqrt(np.sum((sol.psi.values - exact.values)[grid.mask] ** 2))
        den = np.sqrt(np.sum(exact.values[grid.mask] ** 2))
        writer.scalar("rel_l2_error", float(num / den) if den > 0 else float(num))
    p_list = cfg.get("elliptic", "p_list")
    if p_list:
        for p in p_list:
            writer.scalar(f"gradient_ratio_p{p:g}",
                          elliptic.lp_gradient_ratio(sol, problem, p))
    return 0


def _cmd_simulate(cfg, writer, seed):
    profile, grid = _grid_for(cfg)
    omega_expr = cfg.expression("transport", "omega0", "1-r2")
    omega0 = ScalarField.from_function(grid, omega_expr)
    eta = cfg.get("transport", "perturbation", 0.0)
    if eta > 0:
        rng = np.random.default_rng(seed)
        noise = rng.standard_normal(omega0.values.shape)
        omega0 = ScalarField(grid, omega0.values + eta * np.where(grid.mask, noise, 0.0))
    config = transport.TransportConfig(
        cfl=cfg.get("transport", "cfl", 0.8),
        t_end=cfg.get("transport", "t_end", 1.0),
        eps=cfg.get("transport", "eps", 0.0),
        truncation=cfg.get("transport", "truncation"),
        output_dt=cfg.get("transport", "output_dt", 0.1),
        elliptic_tol=cfg.get("transport", "elliptic_tol", 1e-10),
        elliptic_weight=cfg.get("transport", "elliptic_weight", "depth"),
        shore_floor=cfg.get("transport", "shore_floor", 1.0),
    )
    chart = _chart_for(cfg, profile, grid)
    traj = transport.simulate(profile, grid, omega0, config, chart=chart)

    for k, snap in enumerate(traj.snapshots):
        name = f"snapshot_{k:04d}.csv"
        _write_csv(writer.path(name),
                   ["i", "j", "x", "y", "omega", "v1", "v2"],
                   _field_rows(grid, [snap.omega.values, snap.velocity.u,
                                      snap.velocity.v]))
        writer.register(name)
    keys = sorted(traj.series.keys())
    _write_csv(writer.path("timeseries.csv"), keys,
               zip(*(map(float, traj.series[k]) for k in keys)))
    writer.register("timeseries.csv")
    writer.scalar("steps", traj.total_steps)
    writer.scalar("snapshots", len(traj.snapshots))
    writer.scalar("mass_drift", float(traj.series["mass"][-1] - traj.series["mass"][0]))
    writer.scalar("cumulative_boundary_flux", traj.cumulative_boundary_flux)
    writer.scalar("max_principle_overshoot", traj.max_principle_overshoot())
    return 0


def _cmd_kernel_check(cfg, writer, seed):
    a = cfg.get("kernels", "a", 1.0)
    n = cfg.get("kernels", "n", 2)
    eps_list = cfg.get("kernels", "eps_list", (0.1, 0.01, 0.001))
    h_fd = cfg.get("kernels", "h_fd", 1e-3)
    rows = []

    gamma = kernels.calibrate_normalization(a, n)
    writer.scalar("gamma", gamma)
    rows.append(["gamma", a, n, 0.0, -1, "calibration", 0.0, gamma])

    params_small = kernels.KernelParams(a=a, n=n, gamma=gamma, eps=min(eps_list))
    ref = np.zeros(n)
    for frac in (0.25, 0.5, 0.75):
        ref[-1] = frac
        mass = kernels.mollifier_mass(params_small, ref.copy())
        rows.append(["approx_identity_mass", a, n, params_small.eps, -1,
                     f"x_n={frac}", frac, mass])
        writer.scalar(f"mass_xn_{frac:g}", mass)

    x = np.zeros(n)
    x[-1] = 0.8
    y = np.zeros(n)
    y[0] = 0.3
    y[-1] = 0.5
    for eps in eps_list:
        p = kernels.KernelParams(a=a, n=n, gamma=gamma, eps=eps)
        rep = kernels.model_identity_residual(p, [(x.copy(), y.copy())], h_fd=h_fd)
        rows.append(["model_identity_residual", a, n, eps, -1, "canonical",
                     h_fd, rep.max_relative])
        writer.scalar(f"identity_residual_eps{eps:g}", rep.max_relative)

    n_random = cfg.get("kernels", "samples", 4)
    if a >= 1.0:
        for eps in eps_list:
            p = kernels.KernelParams(a=a, n=n, gamma=gamma, eps=eps)
            for k in (0, 1, 2):
                rep = kernels.decay_bound_report(p, k, seed=seed, n_random=n_random)
                for scale, val in zip(rep.scales, rep.plain_max):
                    rows.append(["decay_plain", a, n, eps, k, "max", scale, val])
                for scale, val in zip(rep.scales, rep.weighted_max):
                    if val > 0:
                        rows.append(["decay_weighted", a, n, eps, k, "near-diag",
                                     scale, val])
                writer.scalar(f"plain_spread_eps{eps:g}_k{k}", rep.plain_spread)

    growth = kernels.operator_norm_growth("identity", (2, 4, 8, 16, 32), seed=seed)
    rows.append(["norm_growth_identity", a, n, 0.0, -1, "slope", 0.0, growth.slope])
    writer.scalar("identity_norm_slope", growth.slope)

    _write_csv(writer.path("kernel_report.csv"),
               ["check", "a", "n", "eps", "k", "regime", "scale", "value"],
               rows)
    writer.register("kernel_report.csv")
    return 0


def load_run(run_dir):
    """Rebuild (profile, grid, times, snapshots) from a simulate run directory."""
    manifest_path = os.path.join(run_dir, "manifest.json")
    if not os.path.exists(manifest_path):
        raise ConfigurationError(f"no manifest.json under {run_dir}")
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    if manifest.get("subcommand") != "simulate":
        raise ConfigurationError(f"{run_dir} is not a simulate run")
    cfg = parse_config(manifest["config"], "simulate")
    profile, grid = _grid_for(cfg)

    ts_path = os.path.join(run_dir, "timeseries.csv")
    with open(ts_path) as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    series = {k: data[:, idx] for idx, k in enumerate(header)}

    snapshots = []
    names = sorted(n for n in manifest["outputs"] if n.startswith("snapshot_"))
    for name in names:
        table = np.loadtxt(os.path.join(run_dir, name), delimiter=",", skiprows=1,
                           ndmin=2)
        ii = table[:, 0].astype(int)
        jj = table[:, 1].astype(int)
        om = np.zeros(grid.mask.shape)
        vu = np.zeros(grid.mask.shape)
        vv = np.zeros(grid.mask.shape)
        om[jj, ii] = table[:, 4]
        vu[jj, ii] = table[:, 5]
        vv[jj, ii] = table[:, 6]
        snapshots.append((ScalarField(grid, om), VectorField(grid, vu, vv)))
    return profile, grid, series["t"], snapshots, cfg


class _LoadedRun:
    """Adapter giving loaded runs the Trajectory surface diagnostics expects."""

    def __init__(self, times, snapshots):
        self.times = list(times)
        self.snapshots = [type("S", (), {"omega": om, "velocity": vel})()
                          for om, vel in snapshots]


def _cmd_diagnose(cfg, writer, seed, run_dirs):
    if not 1 <= len(run_dirs) <= 2:
        raise ConfigurationError("diagnose takes one or two run directories")
    p_list = cfg.get("diagnose", "p_list", (3, 4, 8, 16, 32, 64)) if cfg else (3, 4, 8, 16, 32, 64)
    mu_list = cfg.get("diagnose", "mu_list", (0.5,)) if cfg else (0.5,)
    slack = cfg.get("diagnose", "slack", 10.0) if cfg else 10.0
    n_pairs = int(cfg.get("diagnose", "pairs", 100_000)) if cfg else 100_000

    profile, grid, times, snaps, run_cfg = load_run(run_dirs[0])
    rows = []
    summary = []

    # gradient constant from the final snapshot of run A
    om_last, _ = snaps[-1]
    X, Y = grid.centers()
    b = profile.depth(X, Y)
    rhs = ScalarField(grid, b * om_last.values)
    problem = elliptic.WeightedPoissonProblem(grid, profile, rhs)
    sol = elliptic.solve(problem, tol=1e-10)
    fit = diag.fit_gradient_constant(sol, problem, p_list)
    for p, r in zip(fit.p_values, fit.ratios):
        rows.append(["gradient_ratio", float(p), float(r)])
    writer.scalar("gradient_constant", fit.constant)
    writer.scalar("gradient_trend_free", fit.trend_free)
    summary.append(f"gradient constant C = {fit.constant:.6g} "
                   f"({'no upward trend' if fit.trend_free else 'UPWARD TREND'})")

    for mu in mu_list:
        est = diag.holder_quotient(snaps[-1][1], mu, grid=grid,
                                   n_pairs=n_pairs, seed=seed)
        rows.append(["holder_quotient", float(mu), est.quotient])
        writer.scalar(f"holder_mu{mu:g}", est.quotient)
        summary.append(f"Holder quotient mu={mu:g}: {est.quotient:.6g}")

    passed = fit.trend_free
    if len(run_dirs) == 2:
        profile_b, grid_b, times_b, snaps_b, _ = load_run(run_dirs[1])
        if not grid.same_layout(grid_b):
            raise ConfigurationError("diagnose: runs use different grids")
        exp = diag.build_uniqueness_experiment(
            _LoadedRun(times, snaps), _LoadedRun(times_b, snaps_b),
            profile, C=fit.constant)
        rep = diag.uniqueness_report(exp, slack=slack)
        for t, yv, env in zip(exp.times, exp.y, rep.envelope):
            rows.append(["uniqueness_y", float(t), float(yv)])
            rows.append(["uniqueness_envelope", float(t), float(env)])
        writer.scalar("uniqueness_passed", rep.passed)
        writer.scalar("uniqueness_M", exp.M)
        writer.scalar("uniqueness_M_p999", exp.M_percentile)
        writer.scalar("envelope_saturated", rep.saturated)
        summary.append(f"M = {exp.M:.6g} (99.9th pct {exp.M_percentile:.6g})")
        summary.append(f"uniqueness envelope ({slack:g}x slack): "
                       f"{'PASS' if rep.passed else 'FAIL'}"
                       + (" [envelope saturated]" if rep.saturated else ""))
        passed = passed and rep.passed

    _write_csv(writer.path("diagnose_report.csv"), ["record", "key", "value"], rows)
    writer.register("diagnose_report.csv")
    summary.append("overall: " + ("PASS" if passed else "FAIL"))
    with open(writer.path("summary.txt"), "w") as fh:
        fh.write("\n".join(summary) + "\n")
    writer.register("summary.txt")
    print("\n".join(summary))
    return 0 if passed else 6


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="shorelake",
        description="Degenerate-shore lake runs: elliptic solves, vorticity "
                    "transport, kernel checks, estimate diagnostics.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in ("solve-elliptic", "simulate", "kernel-check"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=(name != "kernel-check"))
        p.add_argument("--out", default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int, default=1,
                       help="reserved; recorded in the manifest")
        if name == "kernel-check":
            p.add_argument("--a", type=float, default=None)
            p.add_argument("--n", type=int, default=None)
            p.add_argument("--eps", type=float, nargs="+", default=None,
                           help="truncation sweep")
            p.add_argument("--samples", type=int, default=None)
    p = sub.add_parser("diagnose")
    p.add_argument("runs", nargs="+", help="one or two simulate run directories")
    p.add_argument("--config", default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=1)
    args = parser.parse_args(argv)

    out_dir = args.out or os.environ.get("SHORELAKE_OUT") or f"runs/{args.subcommand}"
    try:
        cfg = None
        if args.config is not None:
            with open(args.config) as fh:
                text = fh.read()
            cfg = parse_config(text, args.subcommand)
        elif args.subcommand in ("kernel-check", "diagnose"):
            cfg = parse_config("", args.subcommand)
    except ConfigurationError as exc:
        print(f"error: config-validation: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: config-validation: {exc}", file=sys.stderr)
        return 2

    if args.subcommand == "kernel-check":
        overrides = {("kernels", "a"): getattr(args, "a", None),
                     ("kernels", "n"): getattr(args, "n", None),
                     ("kernels", "eps_list"): tuple(args.eps) if args.eps else None,
                     ("kernels", "samples"): getattr(args, "samples", None)}
        for key, val in overrides.items():
            if val is not None:
                cfg.values[key] = val
        if cfg.values[("kernels", "a")] <= 0 or cfg.values[("kernels", "n")] < 2 \
                or any(not 0 < e < 1 for e in cfg.values[("kernels", "eps_list")]):
            print("error: config-validation: kernel-check needs a > 0, n >= 2, "
                  "eps in (0, 1)", file=sys.stderr)
            return 2

    seed = args.seed if args.seed is not None else (cfg.seed if cfg else 0)
    writer = RunWriter(out_dir, args.subcommand, cfg, seed, args.threads)
    try:
        if args.subcommand == "solve-elliptic":
            status = _cmd_solve_elliptic(cfg, writer, seed)
        elif args.subcommand == "simulate":
            status = _cmd_simulate(cfg, writer, seed)
        elif args.subcommand == "kernel-check":
            status = _cmd_kernel_check(cfg, writer, seed)
        else:
            status = _cmd_diagnose(cfg, writer, seed, args.runs)
    except ConfigurationError as exc:
        print(f"error: configuration: {exc}", file=sys.stderr)
        return 3
    except SolverError as exc:
        print(f"error: solver: {exc}", file=sys.stderr)
        return 4
    except NumericsError as exc:
        print(f"error: numerics: {exc}", file=sys.stderr)
        return 5
    except ShorelakeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    writer.finish()
    return status


if __name__ == "__main__":
    sys.exit(main())
