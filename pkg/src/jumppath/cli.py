"""Command-line front end: ``simulate``, ``estimate`` and ``verify``.

Exit codes: 0 success, 1 verification criteria failed, 2 usage or
configuration error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path as FsPath

import numpy as np

from . import config as C
from .estimate import (
    CSV_HEADER,
    EstimateError,
    estimate_density,
    estimate_hitting_prob,
    estimate_mean_exit_time,
    estimate_occupation,
    estimate_resolvent,
    estimate_tube_probability,
)
from .geometry import GeometryError
from .kernel import KernelError, default_eps_min
from .simulate import SimulationError, simulate_paths
from .verify import SCENARIO_NAMES, ConfigError as ScenarioError, default_suite, reports_csv, reports_summary, run_scenario

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
ESTIMATORS = ("exit-time", "hitting", "occupation", "resolvent", "density", "tube")

log = logging.getLogger("jumppath")


class UsageError(Exception):
    pass


def _workers(args) -> int:
    if args.threads is not None:
        if args.threads < 1:
            raise UsageError("--threads must be >= 1")
        return args.threads
    return os.cpu_count() or 1


def _comment(cfg_hash: str, seed: int) -> str:
    return f"config_hash={cfg_hash} seed={seed}"


def _emit(text: str, out):
    if out:
        FsPath(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    cfg = C.RunConfig.load(args.config)
    seed = C.seed_from(cfg, "sim", args.seed)
    s = C.sim_from(cfg, seed)
    reps = args.replicas or s.replicas
    if s.beta is not None and not s.sim.eps_min < s.beta < 1:
        raise cfg.error("sim", "beta", f"beta must lie in (eps_min, 1), got {s.beta}")
    batch = simulate_paths(s.kernel, s.x0, s.sim, n=reps, beta=s.beta)
    comment = _comment(cfg.hash, seed)
    out = FsPath(args.out) if args.out else None
    for i, path in enumerate(batch):
        text = path.to_csv(comment=f"{comment} replica={i}")
        if out is None:
            sys.stdout.write(text)
        else:
            target = out if reps == 1 else out.with_name(f"{out.stem}-{i}{out.suffix}")
            target.write_text(text, encoding="utf-8")
        fin = ",".join(f"{v:.6g}" for v in path.positions[-1])
        print(
            f"replica {i}: events={len(path)} jumps={len(path) - 1} final=({fin}) "
            f"t_final={path.t_final:.6g} status={path.stop_reason}",
            file=sys.stderr if out is None else sys.stdout,
        )
    return EXIT_OK


# ---------------------------------------------------------------------------
# estimate
# ---------------------------------------------------------------------------


def _run_estimator(cfg: C.RunConfig, name: str, n: int, seed: int, workers: int):
    S = "estimate"
    kp = C.kernel_from(cfg)
    d = kp.d
    eps = cfg.get("sim", "eps_min", C.to_float, None) if cfg.has("sim") else None
    if eps is None:
        eps = cfg.get(S, "eps_min", C.to_float, default_eps_min(kp))
    region = lambda key: cfg.get(S, key, lambda v: C.to_region(v, d))  # noqa: E731
    point = lambda key, default=None: cfg.get(S, key, lambda v: C.to_point(v, d), default)  # noqa: E731
    x = point("x", np.zeros(d))
    kw = dict(eps_min=eps, workers=workers)
    horizon = cfg.get(S, "horizon", C.to_float, None)
    if name == "exit-time":
        return estimate_mean_exit_time(kp, x, region("domain"), n, seed, horizon=horizon, **kw)
    if name == "hitting":
        return estimate_hitting_prob(kp, x, region("target"), region("confine"), n, seed, **kw)
    if name == "occupation":
        return estimate_occupation(kp, x, region("q"), region("b"), n, seed, horizon=horizon, **kw)
    if name == "resolvent":
        lam = cfg.get(S, "lambda", C.to_float)
        tol = cfg.get(S, "tol", C.to_float, 1e-4)
        return estimate_resolvent(kp, x, region("c"), lam, n, seed, tol=tol, **kw)
    if name == "density":
        t = cfg.get(S, "t", C.to_float)
        h = cfg.get(S, "h", C.to_float, 0.05)
        return estimate_density(kp, t, x, point("y", x), n, h, seed, **kw)
    if name == "tube":
        tube = C.tube_from(cfg, S, d)
        start = point("x", None)
        return estimate_tube_probability(kp, tube, n, seed, start=start, **kw)
    raise UsageError(f"unknown estimator {name!r}; choose from {', '.join(ESTIMATORS)}")


def cmd_estimate(args) -> int:
    cfg = C.RunConfig.load(args.config)
    name = args.estimator or cfg.get("estimate", "estimator", str, None)
    if name is None:
        raise UsageError("no estimator given (use --estimator or [estimate] estimator=)")
    if name not in ESTIMATORS:
        raise UsageError(f"unknown estimator {name!r}; choose from {', '.join(ESTIMATORS)}")
    n = args.n if args.n is not None else cfg.get("estimate", "n", C.to_int)
    if n < 2:
        raise UsageError(f"n must be >= 2, got {n}")
    seed = C.seed_from(cfg, ("estimate", "sim"), args.seed)
    res = _run_estimator(cfg, name, n, seed, _workers(args))
    scenario = cfg.get("estimate", "scenario", str, FsPath(args.config).stem)
    text = f"# {_comment(cfg.hash, seed)}\n{CSV_HEADER}\n{res.csv_row(scenario, name, C.kernel_from(cfg).params_hash())}\n"
    _emit(text, args.out)
    if res.censored:
        log.warning("%.2f%% of paths were censored at the horizon", 100 * res.censored_frac)
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

_OPTION_KEYS = {
    "plateau": C.to_floats,
    "offdiag_times": C.to_floats,
    "offdiag_distance": C.to_float,
    "h": C.to_float,
    "killed_time": C.to_float,
    "killed_radius": C.to_float,
    "offset": C.to_float,
    "horizon": C.to_float,
    "confine_radius": C.to_float,
    "target_offset": C.to_float,
    "trivial_n": C.to_int,
    "r": C.to_float,
    "shape_fraction": C.to_float,
    "cells": C.to_int,
    "epsilon": C.to_float,
    "radius": C.to_float,
    "z_length": C.to_float,
    "delta": C.to_float,
    "t0": C.to_float,
}
_KERNEL_KEYS = ("dimension", "alpha", "kappa1", "kappa2", "modulation")


def _points(s: str, d: int):
    return [tuple(C.to_point(p, d)) for p in s.split(";") if p.strip()]


def scenarios_from(cfg, base_seed, explicit_seed: bool = False) -> list:
    """Default suite with per-scenario overrides from ``[verify.<name>]`` sections.

    A per-scenario ``seed`` key applies unless the seed was set on the command
    line or in the environment.
    """
    suite = default_suite(base_seed) if base_seed is not None else default_suite()
    out = []
    for scn in suite:
        sec = f"verify.{scn.name}"
        if cfg is None or not cfg.has(sec):
            out.append(scn)
            continue
        kp = C.kernel_from(cfg, sec, base=scn.kernel) if any(cfg.has(sec, k) for k in _KERNEL_KEYS) else scn.kernel
        d = kp.d
        opts = dict(scn.options)
        for key in cfg.keys(sec):
            if key in _OPTION_KEYS:
                opts["R" if key == "r" else key] = cfg.get(sec, key, _OPTION_KEYS[key])
            elif key == "starts":
                opts["starts"] = cfg.get(sec, key, lambda v: _points(v, d))
            elif key == "center":
                opts["center"] = tuple(cfg.get(sec, key, lambda v: C.to_point(v, d)))
            elif key.startswith("tube."):
                opts.setdefault("tubes", {})
                opts["tubes"] = dict(opts["tubes"], **{key[5:]: cfg.get(sec, key, lambda v: C.to_waypoints(v, d))})
            elif key not in _KERNEL_KEYS + ("n", "seed", "eps_min", "grid"):
                raise cfg.error(sec, key, f"unknown key '{key}' for scenario {scn.name}")
        seed = scn.seed
        if cfg.has(sec, "seed") and not explicit_seed:
            seed = cfg.get(sec, "seed", C.to_seed)
        out.append(
            scn.replace(
                kernel=kp,
                n=cfg.get(sec, "n", C.to_int, scn.n),
                seed=seed,
                eps_min=cfg.get(sec, "eps_min", C.to_float, scn.eps_min),
                grid=cfg.get(sec, "grid", C.to_floats, scn.grid),
                options=opts,
            )
        )
    return out


def cmd_verify(args) -> int:
    if args.list:
        print("\n".join(SCENARIO_NAMES))
        return EXIT_OK
    cfg = C.RunConfig.load(args.config) if args.config else None
    explicit = args.seed is not None or os.environ.get(C.SEED_ENV) not in (None, "")
    if explicit:
        base = C.seed_from(cfg, "verify", args.seed)
    elif cfg is not None and cfg.has("verify", "seed"):
        base = cfg.get("verify", "seed", C.to_seed)
    else:
        base = None
    names = list(args.scenario or [])
    if args.suite and args.suite != "default":
        raise UsageError(f"unknown suite {args.suite!r}; only 'default' is available")
    for nm in names:
        if nm not in SCENARIO_NAMES:
            raise UsageError(f"unknown scenario {nm!r}; available: {', '.join(SCENARIO_NAMES)}")
    scns = scenarios_from(cfg, base, explicit)
    if names:
        scns = [s for s in scns if s.name in names]
    workers = _workers(args)
    reports = []
    for scn in scns:
        log.info("running %s (n=%d, seed=%d)", scn.name, scn.n, scn.seed)
        reports.append(run_scenario(scn, workers))
    seed_note = "default" if base is None else str(base)
    csv_text = reports_csv(reports, comment=_comment(cfg.hash if cfg else "builtin", seed_note))
    summary = reports_summary(reports)
    if args.out:
        out = FsPath(args.out)
        out.write_text(csv_text, encoding="utf-8")
        out.with_suffix(".txt").write_text(summary + "\n", encoding="utf-8")
        print(summary)
    else:
        sys.stdout.write(csv_text)
        print(summary, file=sys.stderr)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="jumppath", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config_required=True):
        sp.add_argument("-c", "--config", required=config_required, help="INI run configuration")
        sp.add_argument("--seed", help="master seed (overrides JUMPPATH_SEED and the config)")
        sp.add_argument("--threads", type=int, help="worker processes (default: all cores)")
        sp.add_argument("--out", help="output CSV path (default: stdout)")

    s = sub.add_parser("simulate", help="simulate paths and dump them as CSV")
    common(s)
    s.add_argument("--replicas", type=int, help="number of paths (overrides [sim] replicas)")
    s.set_defaults(func=cmd_simulate)

    e = sub.add_parser("estimate", help="run one estimator and print a CSV row")
    common(e)
    e.add_argument("--estimator", help=f"one of: {', '.join(ESTIMATORS)}")
    e.add_argument("--n", type=int, help="number of replicas")
    e.set_defaults(func=cmd_estimate)

    v = sub.add_parser("verify", help="run statistical experiments")
    common(v, config_required=False)
    v.add_argument("--suite", help="run a named suite (only 'default')")
    v.add_argument("--scenario", action="append", help="run one scenario (repeatable)")
    v.add_argument("--list", action="store_true", help="list scenario names and exit")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (UsageError, C.ConfigError, ScenarioError) as e:
        print(f"jumppath: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (EstimateError, SimulationError, KernelError, GeometryError, ValueError) as e:
        print(f"jumppath: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
