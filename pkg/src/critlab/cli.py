"""Command line entry point.

Exit status: 0 on success, 1 when a harness check fails, 2 on bad input
(configuration, field file or arguments).
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .besov import BesovIndex, besov_norm, initial_quantity, solution_norm
from .config import ConfigError, RunConfig, dump_config, parse_config
from .experiments import (
    SweepReport,
    limit_sweep,
    make_initial_data,
    smallness_sweep,
    strichartz_check,
    worker_count,
)
from .fieldio import FieldFormatError, read_field, write_field
from .inequalities import InequalityConfig, inequality_harness
from .models import director_drift
from .report import write_report
from .time_integration import integrate

__all__ = ["main", "run_cli", "build_parser"]

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


def _float(text: str) -> float:
    t = text.strip().lower()
    if t in ("inf", "infinity"):
        return float("inf")
    return float(t)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="critlab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, config_required: bool):
        p.add_argument("--config", required=config_required, help="INI run configuration")
        p.add_argument("--out", default="results", help="output directory")
        p.add_argument("--plot", action="store_true", help="also write SVG plots")

    common(sub.add_parser("solve", help="integrate one configuration"), True)
    common(sub.add_parser("limit-sweep", help="incompressible limit rates over eps"), True)
    common(sub.add_parser("smallness-sweep", help="small-data boundedness ladder"), True)

    p = sub.add_parser("verify-inequalities", help="harmonic analysis inequality suite")
    common(p, False)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--resolutions", default=None, help="comma separated grid sizes")

    p = sub.add_parser("strichartz-check", help="acoustic eps^(1/r) scaling")
    common(p, False)
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--p", type=_float, default=None)
    p.add_argument("--r", type=_float, default=None)
    p.add_argument("--n-times", type=int, default=None)
    p.add_argument("--eps-list", default=None, help="comma separated, decreasing")

    p = sub.add_parser("besov-norm", help="Besov norm of a stored field")
    p.add_argument("--config", default=None)
    p.add_argument("--field", required=True)
    p.add_argument("--s", type=_float, required=True)
    p.add_argument("--p", type=_float, default=2.0)
    p.add_argument("--r", type=_float, default=1.0)
    return ap


def _load(path: str | None) -> tuple[RunConfig, str]:
    if path is None:
        return RunConfig(), dump_config(RunConfig())
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read config: {exc}") from None
    return parse_config(text, path), text


def _finish(rep: SweepReport, args, cfg_text: str | None) -> int:
    jpath, cpath = write_report(rep, args.out, config_text=cfg_text)
    written = [jpath, cpath]
    if getattr(args, "plot", False):
        from .plotting import plot_rates

        written += plot_rates(rep, args.out)
    for c in rep.checks:
        tag = "PASS" if c["passed"] else ("FAIL" if c["hard"] else "FLAG")
        print(f"{tag:4s} {c['name']}" + (f"  ({c['detail']})" if c["detail"] else ""))
    for w in written:
        print(f"wrote {w}")
    return EXIT_OK if rep.passed else EXIT_FAIL


def _cmd_solve(args) -> int:
    cfg, text = _load(args.config)
    grid = cfg.make_grid()
    params = cfg.make_params()
    state0 = make_initial_data(grid, cfg.make_data())
    r = cfg.run
    traj = integrate(state0, r.T, r.dt, r.snapshot_every, r.model, params, r.linear,
                     r.renormalize_director)
    rep = SweepReport("solve", {**cfg.to_dict(), "seed": cfg.data.seed})
    rep.points.append({"status": traj.status, "message": traj.message, "snapshots": len(traj)})
    s = grid.dim / 2.0
    times = traj.times
    series = {
        "mean_b_drift": [abs(float(st.b.mean()[0] - state0.b.mean()[0])) for st in traj.snapshots],
        "director_drift": [director_drift(st.d) for st in traj.snapshots],
        "u_besov": [besov_norm(st.u, BesovIndex(s - 1)) for st in traj.snapshots],
        "b_besov": [besov_norm(st.b, BesovIndex(s)) for st in traj.snapshots],
        "g_besov": [besov_norm(st.director_perturbation(), BesovIndex(s)) for st in traj.snapshots],
    }
    for i, t in enumerate(times):
        for name, vals in series.items():
            rep.rows.append({"eps": params.eps, "quantity": name, "norm_spec": f"t={t:.17g}",
                             "value": vals[i], "target_exponent": float("nan")})
    if traj.ok and len(traj) >= 2 and r.model == "compressible":
        total = solution_norm(traj, s, params.nu, params.nu_lower, params.theta)
        q0 = initial_quantity(state0, s, params.nu)
        for name, val in (("solution_norm", total), ("initial_quantity", q0)):
            rep.rows.append({"eps": params.eps, "quantity": name, "norm_spec": f"B_nu^{s:g}",
                             "value": val, "target_exponent": float("nan")})
    rep.add_check("run_completed", traj.ok, f"{traj.status}: {traj.message}" if not traj.ok else "")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    last = traj.snapshots[-1]
    for name, f in (("b", last.b), ("u", last.u), ("d", last.d)):
        write_field(out / f"{name}.field", f)
    if args.plot:
        from .plotting import plot_series

        plot_series(times, series, out / "solve_series.svg", "single run")
    return _finish(rep, args, text)


def _cmd_limit(args) -> int:
    cfg, text = _load(args.config)
    sweep = cfg.sweep_config()
    return _finish(limit_sweep(sweep), args, text)


def _cmd_smallness(args) -> int:
    cfg, text = _load(args.config)
    sweep = cfg.sweep_config()
    if not sweep.amplitudes:
        raise ConfigError("smallness-sweep needs [sweep] amplitudes", None, args.config)
    return _finish(smallness_sweep(sweep), args, text)


def _cmd_inequalities(args) -> int:
    icfg = InequalityConfig()
    if args.config is not None:
        cfg, _ = _load(args.config)
        icfg = replace(icfg, seed=cfg.data.seed, dim=cfg.grid.dim)
    kw = {}
    if args.seed is not None:
        kw["seed"] = args.seed
    if args.dim is not None:
        kw["dim"] = args.dim
    if args.samples is not None:
        kw["samples"] = args.samples
    if args.resolutions is not None:
        try:
            kw["resolutions"] = tuple(int(x) for x in args.resolutions.split(","))
        except ValueError:
            raise InputError(f"bad --resolutions {args.resolutions!r}") from None
    icfg = replace(icfg, **kw)
    return _finish(inequality_harness(icfg), args, None)


def _cmd_strichartz(args) -> int:
    cfg, text = _load(args.config)
    sc = cfg.strichartz_config()
    kw = {}
    for name in ("dim", "n", "p", "r"):
        val = getattr(args, name)
        if val is not None:
            kw[name] = val
    if args.n_times is not None:
        kw["n_times"] = args.n_times
    if args.eps_list is not None:
        kw["eps_list"] = tuple(_float(x) for x in args.eps_list.split(","))
    sc = replace(sc, **kw)
    return _finish(strichartz_check(sc), args, text)


def _cmd_besov(args) -> int:
    frac = 2.0 / 3.0
    if args.config is not None:
        cfg, _ = _load(args.config)
        frac = cfg.grid.dealias
    f = read_field(args.field, frac)
    if args.config is not None:
        g = cfg.grid
        if (g.dim, g.n) != (f.grid.dim, f.grid.n) or not np.isclose(g.L, f.grid.box_length):
            raise InputError(
                f"field grid (dim={f.grid.dim}, n={f.grid.n}, L={f.grid.box_length}) "
                f"does not match the configuration (dim={g.dim}, n={g.n}, L={g.L})"
            )
    print(f"{besov_norm(f, BesovIndex(args.s, args.p, args.r)):.17e}")
    return EXIT_OK


COMMANDS = {
    "solve": _cmd_solve,
    "limit-sweep": _cmd_limit,
    "smallness-sweep": _cmd_smallness,
    "verify-inequalities": _cmd_inequalities,
    "strichartz-check": _cmd_strichartz,
    "besov-norm": _cmd_besov,
}


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        worker_count()
        return COMMANDS[args.command](args)
    except (ConfigError, FieldFormatError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        # invalid settings discovered while building a harness configuration
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
