"""Command-line entry point: ``lvcoop <command> [options]``."""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from . import __version__
from .config import Config, parse_config
from .errors import ConfigError, LVError
from .io import RunManifest, config_hash, write_csv, write_ndjson

log = logging.getLogger("lvcoop")

COMMANDS = ("simulate", "rate", "bound", "threshold", "eigen", "periodic", "sweep", "verify")


def _float_or_inf(text):
    if text.lower() in ("inf", "infinity"):
        return math.inf
    return float(text)


def _grid_arg(text):
    parts = [int(p) for p in text.split(",")]
    if any(p < 1 for p in parts):
        raise argparse.ArgumentTypeError("grid sizes must be positive")
    return parts[0] if len(parts) == 1 else tuple(parts)


def _seed(text):
    v = int(text, 0)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser():
    p = argparse.ArgumentParser(prog="lvcoop", description=__doc__)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="JSON problem configuration")
        s.add_argument("--seed", type=_seed, default=0)
        s.add_argument("--out", default="out", help="output directory")
        s.add_argument("--ensemble", type=int, default=0, help="ensemble size (bound)")
        s.add_argument("--grid", type=_grid_arg, help="points per axis, N or N,N")
        s.add_argument("--horizon", type=_float_or_inf)
        s.add_argument("--lambda", dest="lam", type=float, help="homotopy parameter")
        s.add_argument("--tol", type=float)
        s.add_argument("--threads", type=int, default=1)
        s.add_argument("-v", "--verbose", action="store_true")
        if name == "verify":
            s.add_argument("--checks", help="comma-separated subset of check numbers")
    return p


def _load(args, required=True) -> Config:
    if args.config is None:
        if required:
            raise ConfigError(f"{args.command} needs --config")
        return None
    return parse_config(args.config)


def _grid_of(args, cfg, default=128):
    if args.grid is not None:
        return cfg.make_grid(args.grid) if cfg else None
    return cfg.make_grid()


def _horizon(args, cfg):
    return args.horizon if args.horizon is not None else cfg.horizon


def cmd_simulate(args, cfg, man):
    from .integrate import evolve, write_checkpoint

    grid = _grid_of(args, cfg)
    out = evolve(cfg.spec, grid, cfg.initial_state(grid), _horizon(args, cfg), cfg.controls,
                 cfg.output_times)
    summary = out.summary()
    write_ndjson(os.path.join(args.out, "outcome.ndjson"), [summary])
    tr = out.trajectory.arrays()
    rows = [dict(zip(tr, vals)) for vals in zip(*tr.values())]
    write_csv(os.path.join(args.out, "trajectory.csv"), rows)
    if out.final is not None and out.final.finite:
        write_checkpoint(os.path.join(args.out, "final.lvb"), out.final, grid,
                         cfg.spec.q, cfg.spec.r)
    man.outcomes.append(summary)
    man.files += ["outcome.ndjson", "trajectory.csv"]
    print(f"{out.kind}: t_end={out.t_end:.6g} T_est={out.T_est:.6g} peak={out.peak_norm:.6g}")
    return out


def cmd_rate(args, cfg, man):
    out = cmd_simulate(args, cfg, man)
    if out.rate_fit is None:
        print("no rate fit (run did not blow up)")
        return 1
    f = out.rate_fit
    rec = {"slope": f.slope, "intercept": f.intercept, "r2": f.r2, "T_est": f.T_est,
           "window": list(f.window), "n_samples": f.n_samples}
    write_ndjson(os.path.join(args.out, "rate.ndjson"), [rec])
    man.files.append("rate.ndjson")
    print(f"slope={f.slope:.6f} R2={f.r2:.6f} T_est={f.T_est:.9g}")
    return 0


def _bound_job(job):
    from .ensemble import bound_member
    member, n, horizon = job
    return bound_member(member, n, horizon)


def cmd_bound(args, cfg, man):
    from .analyze import universal_bound_statistic
    from .ensemble import generate
    from .integrate import evolve
    from .model import ClassParams

    if args.ensemble > 0:
        ens = cfg.ensemble if cfg else {}
        cp = ClassParams(ens.get("eps0", 0.5), ens.get("M0", 4.0))
        members = generate(args.seed, args.ensemble, cp,
                           amplitude=tuple(ens.get("amplitude", (10.0, 30.0))))
        n = args.grid or (cfg.grid if cfg else 128)
        horizon = args.horizon if args.horizon is not None else ens.get("horizon", 2.0)
        jobs = [(m, n, horizon) for m in members]
        if args.threads > 1:
            with ProcessPoolExecutor(args.threads) as pool:
                rows = list(pool.map(_bound_job, jobs))
        else:
            rows = [_bound_job(j) for j in jobs]
        write_ndjson(os.path.join(args.out, "bound.ndjson"), rows)
        write_csv(os.path.join(args.out, "bound.csv"), rows)
        c = max(r["c_emp"] for r in rows)
        man.outcomes.append({"C_emp": c, "members": len(rows)})
        man.files += ["bound.ndjson", "bound.csv"]
        print(f"C_emp={c:.9g} over {len(rows)} members (lower bound for the universal constant)")
        return 0
    if cfg is None:
        raise ConfigError("bound needs --config or --ensemble")
    grid = _grid_of(args, cfg)
    out = evolve(cfg.spec, grid, cfg.initial_state(grid), _horizon(args, cfg), cfg.controls)
    T = out.T_est if out.kind == "BlowUp" else math.inf
    regime = (1, 0) if cfg.spec.bc != "whole_space" else (1, 1)
    rep = universal_bound_statistic(out.trajectory, T, regime, grid)
    rec = rep.as_dict()
    rec["kind"] = out.kind
    write_ndjson(os.path.join(args.out, "bound.ndjson"), [rec])
    man.outcomes.append(rec)
    man.files.append("bound.ndjson")
    print(f"C_emp={rep.c_emp:.9g} regime={regime} T={T:.6g}")
    return 0


def cmd_threshold(args, cfg, man):
    from .threshold import bisect_threshold

    th = cfg.threshold
    grid = _grid_of(args, cfg)
    res = bisect_threshold(cfg.spec, grid, th.get("alpha_lo", 0.1), th.get("alpha_hi", 50.0),
                           args.tol or th.get("tol", 1e-3),
                           args.horizon or th.get("horizon", 2.0), cfg.controls)
    write_csv(os.path.join(args.out, "threshold_history.csv"), res.rows())
    mono, tmono = res.audit()
    rec = {"alpha_lo": res.bracket[0], "alpha_hi": res.bracket[1], "width": res.width,
           "undecided": res.undecided, "warnings": res.warnings, "monotone": mono,
           "T_monotone": tmono,
           "statistic": res.statistic.c_emp if res.statistic else math.nan}
    write_ndjson(os.path.join(args.out, "threshold.ndjson"), [rec])
    man.outcomes.append(rec)
    man.files += ["threshold_history.csv", "threshold.ndjson"]
    print(f"bracket [{res.bracket[0]:.9g}, {res.bracket[1]:.9g}] monotone={mono} "
          f"statistic={rec['statistic']:.6g}")
    return 0


def cmd_eigen(args, cfg, man):
    from .model import ProblemSpec
    from .spectral import adjoint_periodic_eigenpair, principal_eigenvalue

    spec = cfg.spec if cfg else ProblemSpec.constant()
    n = args.grid or (cfg.grid if cfg else 200)
    grid = spec.grid(n)
    eig = principal_eigenvalue(grid)
    per = adjoint_periodic_eigenpair(grid, spec.period or 1.0)
    row = {"n": str(n), "Lambda1": eig.value, "residual": eig.residual,
           "Lambda1_T": per.value, "periodic_residual": per.residual,
           "iterations": eig.iterations}
    write_csv(os.path.join(args.out, "eigen.csv"), [row])
    man.outcomes.append(row)
    man.files.append("eigen.csv")
    print(f"Lambda1={eig.value:.12g}")
    return 0


def _periodic_opts(args, cfg):
    from dataclasses import replace
    pc = cfg.periodic_controls
    if args.tol is not None:
        pc = replace(pc, tol=args.tol)
    return pc


def cmd_periodic(args, cfg, man):
    from .periodic import default_guess, export_orbit, find_periodic_orbit

    grid = _grid_of(args, cfg)
    pc = _periodic_opts(args, cfg)
    lam = args.lam if args.lam is not None else cfg.periodic.get("lambda", 1.0)
    beta = cfg.periodic.get("beta")
    guess = default_guess(cfg.spec, grid, beta=beta) if beta is not None else None
    orbit = find_periodic_orbit(cfg.spec, grid, guess, lam,
                                cfg.periodic.get("method", "newton-krylov"), controls=pc)
    path = export_orbit(orbit, grid, args.out, q=cfg.spec.q, r=cfg.spec.r)
    man.outcomes.append(orbit.manifest())
    man.files.append(os.path.basename(path))
    print(f"{orbit.status}: residual={orbit.residual:.3e} margin={orbit.positivity_margin:.6g}")
    return 0 if orbit.converged else 1


def cmd_sweep(args, cfg, man):
    from .periodic import homotopy_sweep

    grid = _grid_of(args, cfg)
    lams = cfg.periodic.get("lambdas", [round(1.0 - 0.1 * k, 10) for k in range(10)])
    rep = homotopy_sweep(cfg.spec, grid, lams, controls=_periodic_opts(args, cfg))
    rows = rep.rows()
    write_ndjson(os.path.join(args.out, "sweep.ndjson"), rows)
    man.outcomes.append({"branch_max": rep.branch_max, "terminated_at": rep.terminated_at})
    man.files.append("sweep.ndjson")
    print(f"branch max {rep.branch_max:.6g}; terminated at {rep.terminated_at}")
    return 0


def cmd_verify(args, cfg, man):
    from .acceptance import run_all

    select = {int(c) for c in args.checks.split(",")} if args.checks else None
    results = run_all(select)
    rows = [{"number": r.number, "title": r.title, "passed": r.passed, "detail": r.detail,
             "seconds": r.seconds} for r in results]
    write_ndjson(os.path.join(args.out, "verify.ndjson"), rows)
    man.outcomes += rows
    man.files.append("verify.ndjson")
    return 0 if all(r.passed for r in results) else 1


HANDLERS = {"simulate": cmd_simulate, "rate": cmd_rate, "bound": cmd_bound,
            "threshold": cmd_threshold, "eigen": cmd_eigen, "periodic": cmd_periodic,
            "sweep": cmd_sweep, "verify": cmd_verify}
OPTIONAL_CONFIG = {"eigen", "verify", "bound"}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        cfg = _load(args, required=args.command not in OPTIONAL_CONFIG)
        os.makedirs(args.out, exist_ok=True)
        man = RunManifest(args.command, config_hash(cfg.raw) if cfg else config_hash({}),
                          args.seed, __version__)
        status = HANDLERS[args.command](args, cfg, man)
        status = 0 if status is None or not isinstance(status, int) else status
        man.finish()
        man.write(args.out)
        return status
    except LVError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
