"""Command-line front end: ``python -m first_crossing <command> ...``.

Commands
--------
closed-form   evaluate a closed-form quantity for a preset
simulate      Monte Carlo samples, histogram, Laplace curves and moment table
solve         finite-difference solution of a boundary-value problem
figures       curve bundles for the area histogram and Laplace comparisons
triangulate   cross-check closed forms, Monte Carlo and the solvers

Every file written is accompanied by a ``.manifest`` sidecar in
``key = value`` form; passing it back through ``--config`` reruns the
command with the same inputs.  Exit codes: 0 success, 1 usage error,
2 statistical-quality warning, 3 solver failure.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import closed_forms as cf
from . import estimators as est
from . import io
from . import pdde
from .process import Barrier, ProcessSpec, conjugation_map, parse_preset, preset_string
from .simulate import MCConfig, default_t_max, simulate_paths

log = logging.getLogger("first_crossing")

EXIT_OK, EXIT_USAGE, EXIT_STAT, EXIT_SOLVER = 0, 1, 2, 3
MANIFEST_ONLY_KEYS = {"command", "tool_version", "wall_clock_seconds", "output"}
CONFIG_ALIASES = {"lambda": "lam", "n_paths": "paths"}
DEFAULT_LAMBDAS = "0,0.05,0.1,0.2,0.3,0.4,0.5,0.75,1,1.5,2,3,5,7.5,10"
FIGURE1_MUS = (1.0, 1.2, 1.5, 2.0, 3.0)
FIGURE2_MU = 1.5
ROBUSTNESS_TOL = 1e-7
MIN_BIAS_COEF = 0.5826  # E max of the Brownian bridge gap per sqrt(dt) (Siegmund's constant)


class UsageError(Exception):
    pass


def tool_version() -> str:
    try:
        from importlib.metadata import version

        return version("artifact")
    except Exception:  # not installed: running from a source tree
        from . import __version__

        return __version__


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _bool(text) -> bool:
    value = str(text).strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _common(p: argparse.ArgumentParser, seed=True):
    p.add_argument("--S", dest="S", type=float, help="barrier level")
    p.add_argument("--x", dest="x", type=float, help="starting point")
    if seed:
        p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default=None, help="directory for CSV outputs and manifests")
    p.add_argument("--config", default=None, help="key = value file (a manifest works)")


def _mc_flags(p, paths=10_000):
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--paths", type=int, default=paths)
    p.add_argument("--t-max", type=float, default=None)
    p.add_argument("--bridge-correction", type=_bool, default=False, nargs="?", const=True)
    p.add_argument("--workers", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="first_crossing", description=__doc__.splitlines()[0])
    parser.add_argument("--log-level", default="WARNING")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("closed-form", help="evaluate a closed-form quantity")
    p.add_argument("quantity", nargs="?", choices=sorted(CLOSED_FORM_QUANTITIES))
    p.add_argument("preset", nargs="?")
    _common(p, seed=False)
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--z", type=float, default=None)

    p = sub.add_parser("simulate", help="Monte Carlo run with CSV outputs")
    p.add_argument("preset", nargs="?")
    _common(p)
    _mc_flags(p)
    p.add_argument("--bins", type=int, default=50)
    p.add_argument("--lambdas", type=_float_list, default=_float_list(DEFAULT_LAMBDAS))

    p = sub.add_parser("solve", help="finite-difference boundary-value solve")
    p.add_argument("problem", nargs="?", choices=SOLVE_PROBLEMS)
    p.add_argument("preset", nargs="?")
    _common(p, seed=False)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--z", type=float, default=None)
    p.add_argument("--h", type=float, default=1e-3)
    p.add_argument("--x-min", type=float, default=None)
    p.add_argument("--left-bc", choices=("polynomial-match", "natural"), default=None)

    p = sub.add_parser("figures", help="curve bundles for the area figures")
    p.add_argument("figure", nargs="?", type=int, choices=(1, 2))
    _common(p)
    _mc_flags(p, paths=100_000)
    p.add_argument("--bins", type=int, default=60)
    p.add_argument("--lambdas", type=_float_list, default=_float_list(DEFAULT_LAMBDAS))

    p = sub.add_parser("triangulate", help="closed form vs Monte Carlo vs solver")
    p.add_argument("preset", nargs="?")
    _common(p)
    _mc_flags(p, paths=100_000)
    p.set_defaults(bridge_correction=True)
    p.add_argument("--h", type=float, default=1e-3)
    p.add_argument("--z", type=float, default=None)
    return parser


# --------------------------------------------------------------------------- config


def _subparser(parser, command):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[command]
    raise KeyError(command)


def _convert(action, raw: str):
    if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
        return _bool(raw)
    if raw == "n/a":
        return None
    value = action.type(raw) if action.type else raw
    if action.choices is not None and value not in action.choices:
        raise UsageError(f"config value {raw!r} not allowed for {action.dest}")
    return value


def parse_args(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        raise UsageError("a command is required: " + ", ".join(COMMANDS))
    if args.config:
        try:
            entries = io.read_config(args.config)
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read config: {exc}") from exc
        if entries.get("command", args.command) != args.command:
            raise UsageError(f"config was written by {entries['command']!r}, not {args.command!r}")
        sub = _subparser(parser, args.command)
        actions = {a.dest: a for a in sub._actions}
        defaults = {}
        for key, raw in entries.items():
            key = CONFIG_ALIASES.get(key, key)
            if key in MANIFEST_ONLY_KEYS:
                continue
            if key not in actions or key in ("help", "config"):
                raise UsageError(f"unknown config key {key!r}")
            try:
                defaults[key] = _convert(actions[key], raw)
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise UsageError(f"bad config value for {key}: {exc}") from exc
        sub.set_defaults(**defaults)
        args = parser.parse_args(argv)
    return args


def _require(args, *names):
    for name in names:
        if getattr(args, name, None) is None:
            raise UsageError(f"missing required value: {name}")


def _barrier(args) -> Barrier:
    _require(args, "S", "x")
    try:
        return Barrier(float(args.S), float(args.x))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _preset(args) -> ProcessSpec:
    _require(args, "preset")
    try:
        return parse_preset(args.preset)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _manifest_entries(args, extra=None) -> dict:
    entries = {"command": args.command}
    skip = {"command", "config", "out_dir", "log_level", "_started"}
    for key, value in vars(args).items():
        if key in skip:
            continue
        if isinstance(value, list):
            value = ",".join(repr(float(v)) for v in value)
        entries[key] = value
    entries["tool_version"] = tool_version()
    if extra:
        entries.update(extra)
    return entries


class _Outputs:
    """Writes CSV files with one sidecar manifest each."""

    def __init__(self, args):
        self.dir = Path(args.out_dir) if args.out_dir else Path(".")
        self.args = args
        self.start = getattr(args, "_started", time.perf_counter())
        self.files: list[Path] = []

    def write(self, name, header, rows):
        path = io.write_csv(self.dir / name, header, rows)
        self.files.append(path)
        return path

    def finish(self):
        elapsed = time.perf_counter() - self.start
        for path in self.files:
            io.write_manifest(path, _manifest_entries(
                self.args, {"output": path.name, "wall_clock_seconds": round(elapsed, 3)}))


# --------------------------------------------------------------------------- closed-form

CLOSED_FORM_QUANTITIES = {
    "mean-fpt", "fpt-moments", "fpt-law", "fpt-lt", "mean-area", "area-moments", "area-lt",
    "min-cdf",
}


class Unsupported(Exception):
    pass


def closed_form_rows(quantity: str, spec: ProcessSpec, barrier: Barrier, lam=None, z=None):
    """``(name, value)`` pairs for a closed-form quantity.

    Raises :class:`Unsupported` for pairs without a closed form and
    :class:`closed_forms.MomentUndefined` for infinite moments.
    """
    tag, p = spec.preset_tag, spec.params

    def need(value, flag):
        if value is None:
            raise UsageError(f"{quantity} needs --{flag}")
        return value

    def moments(pair: cf.MomentPair, prefix):
        return [(f"{prefix}-first", pair.first), (f"{prefix}-second", pair.second),
                (f"{prefix}-variance", pair.variance)]

    if tag == "BM_DRIFT":
        mu = p["mu"]
        if quantity in ("mean-fpt", "fpt-moments", "mean-area", "area-moments") and mu == 0:
            raise cf.MomentUndefined("mean is infinite for driftless Brownian motion")
        if quantity == "mean-fpt":
            return [(quantity, cf.bm_fpt_moments(barrier, mu).first)]
        if quantity == "fpt-moments":
            return moments(cf.bm_fpt_moments(barrier, mu), "fpt")
        if quantity == "fpt-lt":
            return [(quantity, cf.bm_fpt_lt(need(lam, "lambda"), barrier, mu))]
        if quantity == "mean-area":
            return [(quantity, cf.bm_area_mean(barrier, mu))]
        if quantity == "area-moments":
            return moments(cf.bm_area_moments(barrier, mu), "area")
        if quantity == "min-cdf":
            return [(quantity, cf.bm_min_cdf(need(z, "z"), barrier, mu))]
    elif tag == "POISSON":
        theta = p["theta"]
        if quantity == "mean-fpt":
            return [(quantity, cf.poisson_fpt_law(barrier, theta).moments.first)]
        if quantity == "fpt-moments":
            return moments(cf.poisson_fpt_law(barrier, theta).moments, "fpt")
        if quantity == "fpt-law":
            law = cf.poisson_fpt_law(barrier, theta)
            return [("shape", law.shape), ("rate", law.rate)]
        if quantity == "fpt-lt":
            return [(quantity, cf.poisson_fpt_lt(need(lam, "lambda"), barrier, theta))]
        if quantity == "mean-area":
            return [(quantity, cf.poisson_area_moments(barrier, theta).first)]
        if quantity == "area-moments":
            return moments(cf.poisson_area_moments(barrier, theta), "area")
        if quantity == "area-lt":
            return [(quantity, cf.poisson_area_lt(need(lam, "lambda"), barrier, theta))]
    elif tag == "OU":
        mu, sigma = p["mu"], p["sigma"]
        if quantity == "mean-fpt":
            return [(quantity, cf.ou_mean_fpt(barrier, mu, sigma))]
        if quantity == "min-cdf":
            return [(quantity, cf.ou_min_cdf(need(z, "z"), barrier, mu, sigma))]
    elif tag == "LEVY":
        raise Unsupported(f"no closed form is known for {quantity} under LEVY; "
                          "use the solve command")
    raise Unsupported(f"no closed form for {quantity} under {spec.describe()}")


def cmd_closed_form(args) -> int:
    _require(args, "quantity")
    spec, barrier = _preset(args), _barrier(args)
    try:
        rows = closed_form_rows(args.quantity, spec, barrier, args.lam, args.z)
    except Unsupported as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except cf.MomentUndefined as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    params = f"S={io.fmt(barrier.level)};x={io.fmt(barrier.start)}"
    if args.lam is not None:
        params += f";lambda={io.fmt(args.lam)}"
    if args.z is not None:
        params += f";z={io.fmt(args.z)}"
    table = [(name, preset_string(spec), params, value, None, "closed-form")
             for name, value in rows]
    sys.stdout.write(io.csv_text(io.CLOSED_FORM_HEADER, table))
    if args.out_dir:
        out = _Outputs(args)
        out.write("closed_form.csv", io.CLOSED_FORM_HEADER, table)
        out.finish()
    return EXIT_OK


# --------------------------------------------------------------------------- simulate


def _closed_stats(spec: ProcessSpec, barrier: Barrier) -> dict:
    out = {}
    tag, p = spec.preset_tag, spec.params

    def put(prefix, pair_fn):
        try:
            pair = pair_fn()
        except (ArithmeticError, ValueError):
            return
        out[f"{prefix}_mean"] = pair.first
        out[f"{prefix}_second"] = pair.second
        out[f"{prefix}_variance"] = pair.variance

    if tag == "BM_DRIFT":
        put("tau", lambda: cf.bm_fpt_moments(barrier, p["mu"]))
        put("area", lambda: cf.bm_area_moments(barrier, p["mu"]))
    elif tag == "POISSON":
        put("tau", lambda: cf.poisson_fpt_law(barrier, p["theta"]).moments)
        put("area", lambda: cf.poisson_area_moments(barrier, p["theta"]))
    elif tag == "OU":
        try:
            out["tau_mean"] = cf.ou_mean_fpt(barrier, p["mu"], p["sigma"])
        except ArithmeticError:
            pass
    return out


STATS_HEADER = ("quantity", "value", "stderr", "closed_form", "z_score", "n_effective",
                "censored_fraction")


def stats_rows(stats: est.CrossingStats, closed: dict):
    items = [("tau_mean", stats.tau_first), ("tau_second", stats.tau_second),
             ("tau_variance", stats.tau_variance), ("area_mean", stats.area_first),
             ("area_second", stats.area_second), ("area_variance", stats.area_variance)]
    rows = []
    for name, m in items:
        ref = closed.get(name)
        z = None if ref is None or not math.isfinite(m.value) else abs(m.z_score(ref))
        rows.append((name, m.value, m.stderr, ref, z, m.n_effective, stats.censored_fraction))
    return rows


def _mc_config(args, spec, barrier) -> MCConfig:
    t_max = args.t_max if args.t_max is not None else default_t_max(spec, barrier)
    try:
        return MCConfig(dt=args.dt, n_paths=args.paths, t_max=t_max, seed=args.seed,
                        bridge_correction=bool(args.bridge_correction))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def cmd_simulate(args) -> int:
    spec, barrier = _preset(args), _barrier(args)
    cfg = _mc_config(args, spec, barrier)
    if args.t_max is None:
        args.t_max = cfg.t_max
    samples = simulate_paths(spec, barrier, cfg, workers=args.workers)
    stats = est.estimate_crossing_stats(spec, barrier, cfg, samples=samples)
    out = _Outputs(args)
    out.write("samples.csv", io.SAMPLES_HEADER,
              ((i, samples.tau[i], samples.area[i], samples.minimum[i], bool(samples.censored[i]))
               for i in range(len(samples))))
    uncensored_area = samples.field("area")
    if uncensored_area.size >= 2 and np.ptp(uncensored_area) > 0:
        hist = est.histogram(samples, "area", bins=args.bins)
        out.write("histogram.csv", io.HISTOGRAM_HEADER,
                  zip(hist.edges[:-1], hist.edges[1:], hist.density))
    laplace = []
    for field in ("tau", "area"):
        values = samples.field(field)
        if values.size:
            curve = est.empirical_lt(values, field, args.lambdas)
            laplace += [(lam, v, f"empirical-{field}") for lam, v in zip(curve.lambdas, curve.values)]
    out.write("laplace.csv", io.LAPLACE_HEADER, laplace)
    out.write("stats.csv", STATS_HEADER, stats_rows(stats, _closed_stats(spec, barrier)))
    out.finish()
    sys.stdout.write(io.csv_text(STATS_HEADER, stats_rows(stats, _closed_stats(spec, barrier))))
    if not stats.reliable:
        print(f"warning: {100 * stats.censored_fraction:.1f}% of paths censored", file=sys.stderr)
        return EXIT_STAT
    return EXIT_OK


# --------------------------------------------------------------------------- solve

SOLVE_PROBLEMS = ("fpt-lt", "area-lt", "mean-fpt", "second-fpt", "mean-area", "second-area",
                  "min-cdf")
POISSON_DIFFUSION_FLOOR = 1e-6


def _is_levy_like(spec):
    return spec.preset_tag in ("LEVY", "POISSON")


def _grid(S, width, h) -> pdde.Grid1D:
    cells = int(round(width / h))
    if cells < 2:
        raise UsageError("grid too coarse for the interval")
    return pdde.Grid1D(S - cells * h, S, cells + 1)


def _left_width(spec, S, x_min):
    if x_min is not None:
        return S - x_min
    return math.ceil(S - pdde.default_x_min(spec, S))


def solve_problem(problem, spec, barrier, lam, h, width, left_bc=None, z=None):
    """Solve ``problem`` on ``[S - width, S]``; returns the solution."""
    S = barrier.level
    if problem == "min-cdf":
        if z is None:
            raise UsageError("min-cdf needs --z")
        if _is_levy_like(spec):
            raise pdde.SolverError("the minimum problem is implemented for pure diffusions")
        return pdde.solve_min_bvp(spec, z, S, _grid(S, S - z, h))
    grid = _grid(S, width, h)
    if _is_levy_like(spec):
        if problem.startswith("second"):
            raise UsageError(f"{problem} is not available for jump presets")
        if spec.preset_tag == "LEVY":
            beta, theta, sigma = spec.params["beta"], spec.params["theta"], 1.0
        else:
            beta, theta, sigma = 0.0, spec.params["theta"], POISSON_DIFFUSION_FLOOR
        return pdde.solve_pdde_levy(beta, theta, lam, problem, grid, sigma=sigma)
    weight = 1.0 if "fpt" in problem else (lambda x: x)
    if problem.endswith("-lt"):
        return pdde.solve_lt_bvp(spec, weight, lam, grid)
    first = pdde.solve_moment_bvp(spec, weight, 1, grid, left_bc_kind=left_bc)
    if problem.startswith("mean"):
        return first
    return pdde.solve_moment_bvp(spec, weight, 2, grid, prev=first, left_bc_kind=left_bc)


def solve_closed_form(problem, spec, barrier, lam, z):
    tag, p = spec.preset_tag, spec.params
    try:
        if tag == "BM_DRIFT":
            mu = p["mu"]
            return {
                "fpt-lt": lambda: cf.bm_fpt_lt(lam, barrier, mu),
                "mean-fpt": lambda: cf.bm_fpt_moments(barrier, mu).first,
                "second-fpt": lambda: cf.bm_fpt_moments(barrier, mu).second,
                "mean-area": lambda: cf.bm_area_mean(barrier, mu),
                "second-area": lambda: cf.bm_area_second(barrier, mu),
                "min-cdf": lambda: cf.bm_min_cdf(z, barrier, mu),
            }.get(problem, lambda: None)()
        if tag == "OU":
            mu, sigma = p["mu"], p["sigma"]
            return {
                "mean-fpt": lambda: cf.ou_mean_fpt(barrier, mu, sigma),
                "min-cdf": lambda: cf.ou_min_cdf(z, barrier, mu, sigma),
            }.get(problem, lambda: None)()
        if tag == "POISSON":
            theta = p["theta"]
            return {
                "fpt-lt": lambda: cf.poisson_fpt_lt(lam, barrier, theta),
                "area-lt": lambda: cf.poisson_area_lt(lam, barrier, theta),
                "mean-fpt": lambda: cf.poisson_fpt_law(barrier, theta).moments.first,
                "mean-area": lambda: cf.poisson_area_moments(barrier, theta).first,
            }.get(problem, lambda: None)()
    except (ArithmeticError, ValueError):
        return None
    return None


SOLVE_HEADER = ("problem", "preset", "x", "value", "closed_form", "abs_diff", "residual_norm",
                "truncation_delta", "robust", "flags")


def cmd_solve(args) -> int:
    _require(args, "problem")
    spec, barrier = _preset(args), _barrier(args)
    width = _left_width(spec, barrier.level, args.x_min)
    try:
        sol = solve_problem(args.problem, spec, barrier, args.lam, args.h, width,
                            args.left_bc, args.z)
        value = sol.at(barrier.start)
        delta = None
        if args.problem != "min-cdf":
            wider = solve_problem(args.problem, spec, barrier, args.lam, args.h, 2 * width,
                                  args.left_bc, args.z)
            delta = abs(wider.at(barrier.start) - value)
    except pdde.SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    closed = solve_closed_form(args.problem, spec, barrier, args.lam, args.z)
    diff = None if closed is None else abs(value - closed)
    robust = None if delta is None else delta < ROBUSTNESS_TOL
    row = (args.problem, preset_string(spec), barrier.start, value, closed, diff,
           sol.residual_norm, delta, robust, ";".join(sol.flags) or None)
    out = _Outputs(args)
    out.write("solution.csv", io.SOLUTION_HEADER, zip(sol.grid.nodes, sol.values))
    out.write("solve_summary.csv", SOLVE_HEADER, [row])
    out.finish()
    sys.stdout.write(io.csv_text(SOLVE_HEADER, [row]))
    return EXIT_OK


# --------------------------------------------------------------------------- figures


def figure1_series(args):
    """Area histograms for several drifts on a shared binning."""
    from .process import make_preset

    barrier = _barrier(args)
    sets = {}
    for mu in FIGURE1_MUS:
        spec = make_preset("BM_DRIFT", mu=mu)
        cfg = _mc_config(args, spec, barrier) if args.t_max is not None else MCConfig(
            dt=args.dt, n_paths=args.paths, t_max=default_t_max(spec, barrier), seed=args.seed,
            bridge_correction=bool(args.bridge_correction))
        sets[mu] = simulate_paths(spec, barrier, cfg, workers=args.workers)
    pooled = np.concatenate([s.field("area") for s in sets.values()])
    lo, hi = np.quantile(pooled, [0.001, 0.999])
    rows, peaks = [], {}
    for mu, samples in sets.items():
        hist = est.histogram(samples, "area", bins=args.bins, range=(lo, hi))
        centres = 0.5 * (hist.edges[1:] + hist.edges[:-1])
        name = f"mu={io.fmt(mu)}"
        rows += [(name, c, d) for c, d in zip(centres, hist.density)]
        peaks[mu] = hist.peak()
    return rows, peaks


def figure2_series(args):
    """Empirical area transform next to the moment-matched Gamma transform."""
    from .process import make_preset

    barrier = _barrier(args)
    spec = make_preset("BM_DRIFT", mu=FIGURE2_MU)
    cfg = MCConfig(dt=args.dt, n_paths=args.paths,
                   t_max=args.t_max if args.t_max is not None else default_t_max(spec, barrier),
                   seed=args.seed, bridge_correction=bool(args.bridge_correction))
    samples = simulate_paths(spec, barrier, cfg, workers=args.workers)
    lambdas = np.asarray(args.lambdas, dtype=float)
    emp = est.empirical_lt(samples.field("area"), "area", lambdas)
    try:
        moments = cf.bm_area_moments(barrier, FIGURE2_MU)
        gamma = cf.LaplaceCurve(lambdas, est.gamma_lt(moments.first, moments.variance, lambdas),
                                "gamma")
    except (ArithmeticError, ValueError):
        gamma = est.gamma_matched_lt(samples.field("area"), lambdas)
    rows = [("empirical", lam, v) for lam, v in zip(emp.lambdas, emp.values)]
    rows += [("gamma", lam, v) for lam, v in zip(gamma.lambdas, gamma.values)]
    return rows, emp, gamma


def cmd_figures(args) -> int:
    _require(args, "figure")
    if args.S is None:
        args.S = 2.0
    if args.x is None:
        args.x = 1.0
    if args.figure == 1:
        rows, _ = figure1_series(args)
    else:
        rows, _, _ = figure2_series(args)
    out = _Outputs(args)
    out.write(f"figure{args.figure}.csv", io.CURVE_HEADER, rows)
    out.finish()
    return EXIT_OK


# --------------------------------------------------------------------------- triangulate

TRIANGULATE_HEADER = ("route", "quantity", "value", "stderr", "reference", "tolerance", "verdict")
BVP_TOL = {"mean-fpt": 1e-4, "mean-area": 1e-4, "min-cdf": 1e-6}


def _mc_rows(quantity, estimate: est.MomentEstimate, reference, extra_tol=0.0):
    if reference is None:
        return ("mc", quantity, estimate.value, estimate.stderr, None, None, "n/a")
    tol = 3 * estimate.stderr + extra_tol
    verdict = "pass" if abs(estimate.value - reference) <= tol else "fail"
    return ("mc", quantity, estimate.value, estimate.stderr, reference, tol, verdict)


def triangulate_rows(spec, barrier, cfg, h, z, workers=1):
    """Rows comparing closed forms, Monte Carlo and the solvers."""
    rows = []
    tag = spec.preset_tag
    samples = simulate_paths(spec, barrier, cfg, workers=workers)
    stats = est.estimate_crossing_stats(spec, barrier, cfg, samples=samples)
    width = _left_width(spec, barrier.level, None)
    if tag == "BM_DRIFT" and spec.params["mu"] <= 0:
        quantities = ["min-cdf"]  # both means are infinite
    elif tag in ("BM_DRIFT", "OU"):
        quantities = ["mean-fpt", "mean-area", "min-cdf"]
    else:
        quantities = ["mean-fpt", "mean-area"]
    solvable = tag in ("BM_DRIFT", "OU", "LEVY", "POISSON")
    mc_values = {"mean-fpt": stats.tau_first, "mean-area": stats.area_first}
    for q in quantities:
        closed = solve_closed_form(q, spec, barrier, None, z)
        bvp = None
        if solvable:
            try:
                bvp = solve_problem(q, spec, barrier, None, h, width, z=z).at(barrier.start)
            except (pdde.SolverError, UsageError):
                bvp = None
        reference = closed if closed is not None else bvp
        rows.append(("closed", q, closed, None, None, None, "n/a" if closed is None else "ref"))
        if q == "min-cdf":
            m = est.estimate_mean((samples.minimum <= z).astype(float))
            pdf = _min_pdf(spec, barrier, z)
            bias = MIN_BIAS_COEF * math.sqrt(cfg.dt) * pdf if pdf is not None else 0.0
            rows.append(_mc_rows(q, m, reference, extra_tol=bias))
        else:
            rows.append(_mc_rows(q, mc_values[q], reference))
        if bvp is None:
            rows.append(("bvp", q, None, None, None, None, "n/a"))
        elif closed is None:
            rows.append(("bvp", q, bvp, None, None, None, "ref"))
        else:
            tol = BVP_TOL[q]
            verdict = "pass" if abs(bvp - closed) <= tol else "fail"
            rows.append(("bvp", q, bvp, None, closed, tol, verdict))
    if tag == "WF_CONJ":
        ok = bool(np.all((samples.area >= 0) & (samples.area <= samples.tau)))
        rows.append(("mc", "area-within-tau", float(ok), None, 1.0, 0.0, "pass" if ok else "fail"))
    if tag == "CIR_QUARTER":
        u = conjugation_map("CIR_QUARTER")
        gap = u.forward(barrier.level) - u.forward(barrier.start)
        reference = gap * gap / 0.6744897501960817 ** 2
        median = float(np.median(samples.tau)) if samples.censored_fraction < 0.5 else math.nan
        ok = abs(median - reference) <= 0.05 * reference
        rows.append(("mc", "median-fpt", median, None, reference, 0.05 * reference,
                     "pass" if ok else "fail"))
    if not stats.reliable:
        rows.append(("mc", "censored-fraction", stats.censored_fraction, None, 0.5, None, "fail"))
    return rows


def _min_pdf(spec, barrier, z):
    try:
        if spec.preset_tag == "BM_DRIFT":
            return abs(cf.bm_min_pdf(z, barrier, spec.params["mu"]))
        if spec.preset_tag == "OU":
            p = spec.params
            return abs(cf.ou_min_pdf(z, barrier, p["mu"], p["sigma"]))
    except (ArithmeticError, ValueError):
        return None
    return None


def cmd_triangulate(args) -> int:
    spec, barrier = _preset(args), _barrier(args)
    cfg = _mc_config(args, spec, barrier)
    if args.t_max is None:
        args.t_max = cfg.t_max
    z = args.z if args.z is not None else barrier.start - 1.0
    if args.z is None:
        args.z = z
    rows = triangulate_rows(spec, barrier, cfg, args.h, z, workers=args.workers)
    out = _Outputs(args)
    out.write("triangulate.csv", TRIANGULATE_HEADER, rows)
    out.finish()
    sys.stdout.write(io.csv_text(TRIANGULATE_HEADER, rows))
    return EXIT_STAT if any(r[-1] == "fail" for r in rows) else EXIT_OK


COMMANDS = {
    "closed-form": cmd_closed_form,
    "simulate": cmd_simulate,
    "solve": cmd_solve,
    "figures": cmd_figures,
    "triangulate": cmd_triangulate,
}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        started = time.perf_counter()
        args = parse_args(argv)
        args._started = started
        logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
                            format="%(levelname)s %(name)s: %(message)s")
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
