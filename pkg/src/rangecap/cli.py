"""Command-line entry point.

Every subcommand writes ``report.json`` (and/or ``report.csv``) plus
``manifest.json`` into ``--out``.  Exit codes: 0 success, 2 invalid input (no
files are written), 3 resource cap or iteration cap hit, 4 an acceptance check
failed under ``--assert``.
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import dataclass

from . import __version__
from .errors import NonConvergence, ResourceCapError, ValidationError
from .experiments import (
    clt_experiment,
    dyadic_sandwich_experiment,
    exit_tail_check,
    exponent_fit,
    kernel_decay_check,
    pair_green_sum_check,
    slln_experiment,
)
from .groups import DEFAULT_BALL_CAP, GroupPresentation, group_from_spec, growth_profile, load_group
from .io import RunManifest, csv_text, dumps, load_json_arg, utc_now, write_outputs
from .kernels import exact_kernel
from .parallel import default_threads
from .potential import (
    EstimatorConfig,
    capacity_bracket,
    capacity_mc,
    capacity_solve,
    green_mc,
    green_source,
    green_truncated,
    prefix_range_capacities,
)
from .walks import encode_element, path_to_csv, range_of, simulate

SUBCOMMANDS = (
    "walk", "growth", "kernel", "green", "capacity", "slln", "clt",
    "fit", "sandwich", "decay", "exit-tail", "pair-sum",
)

DEFAULTS = {
    "walk": {"n": 100},
    "growth": {"rmax": 10},
    "kernel": {"n": 8},
    "green": {"horizon": 400, "trials": 1000, "method": "truncated-kernel"},
    "capacity": {"n": 1000, "trials": 64, "method": "auto"},
    "slln": {"grid": [256, 512, 1024, 2048], "seeds": 20},
    "fit": {"grid": [128, 256, 512, 1024, 2048, 4096], "seeds": 20},
    "clt": {"n": 1024, "reps": 300},
    "sandwich": {"n": 512, "levels": [1, 2, 3], "seeds": 100},
    "decay": {"grid": [4, 8, 16, 32]},
    "exit-tail": {"n": 400, "radii": [20, 30, 40, 50], "trials": 10000},
    "pair-sum": {"grid": [64, 128, 256, 512, 1024], "seeds": 20},
}


def int_list(text) -> list:
    """``"1,2,3"`` or ``"start:stop[:step]"`` (stop exclusive)."""
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    text = str(text).strip()
    try:
        if ":" in text:
            parts = [int(p) for p in text.split(":")]
            return list(range(*parts))
        return [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise ValidationError(f"cannot parse integer list {text!r}") from None


def seed_list(spec, base: int) -> list:
    """A bare integer ``k`` means ``k`` consecutive seeds starting at ``base``."""
    if isinstance(spec, (list, tuple)):
        return [int(s) for s in spec]
    if isinstance(spec, int):
        return list(range(base, base + spec))
    text = str(spec).strip()
    if "," in text or ":" in text:
        return int_list(text)
    try:
        return list(range(base, base + int(text)))
    except ValueError:
        raise ValidationError(f"cannot parse seeds {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    a = common.add_argument
    a("--group", help="group spec: JSON file path or inline JSON object")
    a("--config", help="experiment config: JSON file path or inline JSON object")
    a("--n", type=int, help="walk length")
    a("--trials", type=int, help="Monte Carlo trials")
    a("--horizon", type=int, help="escape or Green truncation horizon")
    a("--radius", type=int, help="ball radius for harmonic brackets")
    a("--seed", type=int, help="base seed (default 0)")
    a("--seeds", help="seed list 'a,b,c', range 'a:b', or a count starting at --seed")
    a("--threads", type=int, help="worker threads (default: CPU count)")
    a("--out", default="rangecap-out", help="output directory")
    a("--format", choices=("json", "csv", "both"), default="json")
    a("--assert", dest="assert_", action="store_true", help="exit 4 if an acceptance check fails")
    a("--rmax", type=int, help="growth profile radius")
    a("--reps", type=int, help="CLT replications")
    a("--grid", help="n grid, e.g. '256,512,1024'")
    a("--levels", help="dyadic levels, e.g. '1,2,3'")
    a("--radii", help="exit radii, e.g. '20,30,40'")
    a("--method", help="estimator: auto, green-solve, escape-mc, harmonic-bracket (capacity); "
                       "truncated-kernel, monte-carlo, lattice-integral (green)")
    a("--target", help="target element for green, e.g. '1,0,0'")
    a("--prune", type=float, help="kernel pruning threshold (default 0)")
    a("--ball-cap", dest="ball_cap", type=int, help="maximum number of enumerated group elements (default 1e7)")
    parser = argparse.ArgumentParser(prog="rangecap", description="Random walks on groups and the capacity of their range.")
    parser.add_argument("--version", action="version", version=f"rangecap {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


@dataclass
class Context:
    command: str
    group: GroupPresentation
    params: dict
    seed: int
    threads: int


def resolve(args) -> Context:
    """Merge defaults, ``--config`` and explicit flags; validate everything up front."""
    cfg = load_json_arg(args.config, "config") if args.config else {}
    if "experiment" in cfg and cfg["experiment"] != args.command:
        raise ValidationError(f"config is for {cfg['experiment']!r}, not {args.command!r}")
    params = dict(DEFAULTS.get(args.command, {}))
    for key in ("n", "trials", "horizon", "radius", "rmax", "reps", "grid", "levels", "radii", "method", "target", "seeds", "prune", "ball_cap"):
        if key in cfg:
            params[key] = cfg[key]
        val = getattr(args, key, None)
        if val is not None:
            params[key] = val
    if "estimator" in cfg:
        params["estimator"] = cfg["estimator"]
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    if args.group:
        group = load_group(args.group)
    elif "group" in cfg:
        group = group_from_spec(cfg["group"])
    else:
        raise ValidationError("--group (or a config with a 'group' entry) is required")
    for key in ("grid", "levels", "radii"):
        if key in params:
            params[key] = int_list(params[key])
    if "seeds" in params:
        params["seeds"] = seed_list(params["seeds"], seed)
    for key in ("n", "trials", "horizon", "radius", "rmax", "reps", "ball_cap"):
        if key in params and params[key] is not None and int(params[key]) < 0:
            raise ValidationError(f"--{key} must be non-negative")
    threads = args.threads if args.threads is not None else default_threads()
    if threads < 1:
        raise ValidationError("--threads must be >= 1")
    return Context(args.command, group, params, seed, threads)


def _estimator(ctx: Context) -> EstimatorConfig:
    est = dict(ctx.params.get("estimator") or {})
    if ctx.params.get("method") and ctx.command != "green":
        est["method"] = ctx.params["method"]
    if ctx.params.get("trials") is not None and ctx.command in ("slln", "fit", "clt", "sandwich"):
        est["trials"] = ctx.params["trials"]
    return EstimatorConfig.from_dict(est)


# -- subcommands -----------------------------------------------------------------


def _ball_cap(ctx) -> int:
    cap = ctx.params.get("ball_cap")
    return DEFAULT_BALL_CAP if cap is None else int(cap)


def cmd_walk(ctx):
    path = simulate(ctx.group, int(ctx.params["n"]), ctx.seed, 0)
    R = range_of(path)
    payload = {
        "schema": 1,
        "group": ctx.group.to_spec(),
        "n": path.n,
        "seed": ctx.seed,
        "steps": path.steps.tolist(),
        "positions": [list(g) for g in path.positions],
        "range_size": R.size,
    }
    return payload, None, path_to_csv(path), None


def cmd_growth(ctx):
    gp = growth_profile(ctx.group, int(ctx.params["rmax"]), cap=_ball_cap(ctx))
    payload = {"schema": 1, "group": ctx.group.to_spec(), **gp.to_dict()}
    rows = [("radius", "ball_size")] + list(zip(gp.radii, gp.ball_sizes))
    return payload, rows, None, None


def cmd_kernel(ctx):
    n = int(ctx.params["n"])
    table = exact_kernel(ctx.group, n, ctx.params.get("prune", 0.0), cap=_ball_cap(ctx))
    e = ctx.group.identity()
    dist = table.distribution(n)
    ordered = sorted(dist.items())
    payload = {
        "schema": 1,
        "group": ctx.group.to_spec(),
        "horizon": n,
        "return_probabilities": [table.prob(k, e) for k in range(n + 1)],
        "pruned_mass": table.pruned_mass.tolist(),
        "distribution": [{"element": list(g), "p": p} for g, p in ordered],
    }
    rows = [("k", "element", "p")] + [(n, encode_element(g), p) for g, p in ordered]
    return payload, rows, None, None


def _target(ctx):
    t = ctx.params.get("target")
    if t is None:
        return ctx.group.identity()
    return ctx.group.canonical(int_list(t))


def cmd_green(ctx):
    method = ctx.params.get("method") or "truncated-kernel"
    g = _target(ctx)
    H = int(ctx.params["horizon"])
    if method == "truncated-kernel":
        est = green_truncated(ctx.group, g, H).to_dict()
    elif method == "monte-carlo":
        est = green_mc(ctx.group, g, H, int(ctx.params["trials"]), ctx.seed).to_dict()
    elif method == "lattice-integral":
        src = green_source(ctx.group, "lattice-integral")
        est = {"target": list(g), "value": src.value(g), "method": method, "lower_bound_only": False}
    else:
        raise ValidationError(f"unknown Green method {method!r}")
    payload = {"schema": 1, "group": ctx.group.to_spec(), **est}
    return payload, [("statistic", "value"), ("green", est["value"])], None, None


def cmd_capacity(ctx):
    n = int(ctx.params["n"])
    path = simulate(ctx.group, n, ctx.seed, 0)
    A = list(dict.fromkeys(path.positions))
    method = ctx.params.get("method") or "auto"
    if method == "escape-mc":
        H = int(ctx.params.get("horizon") or 16 * max(n, 1))
        est = capacity_mc(ctx.group, A, H, int(ctx.params["trials"]), ctx.seed, threads=ctx.threads)
    elif method == "harmonic-bracket":
        if ctx.params.get("radius") is None:
            raise ValidationError("harmonic-bracket needs --radius")
        est = capacity_bracket(ctx.group, A, int(ctx.params["radius"]), cap=_ball_cap(ctx))
    elif method == "green-solve":
        est = capacity_solve(ctx.group, A)
    else:
        est = prefix_range_capacities(path, [n], _estimator(ctx), seed=ctx.seed)[0]
    d = est.to_dict()
    d["seed"] = ctx.seed
    d["n"] = n
    payload = {"schema": 1, "group": ctx.group.to_spec(), **d}
    return payload, [("statistic", "value"), ("capacity", est.point)], None, None


def _experiment(report):
    return report.payload(), report.csv_rows(), None, report.passed


def cmd_slln(ctx):
    return _experiment(slln_experiment(ctx.group, ctx.params["grid"], ctx.params["seeds"], _estimator(ctx), ctx.threads))


def cmd_fit(ctx):
    return _experiment(exponent_fit(ctx.group, ctx.params["grid"], ctx.params["seeds"], _estimator(ctx), ctx.threads))


def cmd_clt(ctx):
    seeds = ctx.params.get("seeds") or list(range(ctx.seed, ctx.seed + int(ctx.params["reps"])))
    return _experiment(clt_experiment(ctx.group, int(ctx.params["n"]), seeds, _estimator(ctx), ctx.threads))


def cmd_sandwich(ctx):
    rep = dyadic_sandwich_experiment(
        ctx.group, int(ctx.params["n"]), ctx.params["levels"], ctx.params["seeds"], _estimator(ctx), ctx.threads
    )
    return _experiment(rep)


def cmd_decay(ctx):
    return _experiment(kernel_decay_check(ctx.group, ctx.params["grid"]))


def cmd_exit_tail(ctx):
    rep = exit_tail_check(ctx.group, ctx.params["radii"], int(ctx.params["n"]), int(ctx.params["trials"]), ctx.seed)
    return _experiment(rep)


def cmd_pair_sum(ctx):
    return _experiment(pair_green_sum_check(ctx.group, ctx.params["grid"], ctx.params["seeds"], threads=ctx.threads))


COMMANDS = {
    "walk": cmd_walk,
    "growth": cmd_growth,
    "kernel": cmd_kernel,
    "green": cmd_green,
    "capacity": cmd_capacity,
    "slln": cmd_slln,
    "fit": cmd_fit,
    "clt": cmd_clt,
    "sandwich": cmd_sandwich,
    "decay": cmd_decay,
    "exit-tail": cmd_exit_tail,
    "pair-sum": cmd_pair_sum,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    started = utc_now()
    t0 = time.perf_counter()
    try:
        ctx = resolve(args)
        payload, rows, raw_csv, passed = COMMANDS[args.command](ctx)
    except ValidationError as exc:
        print(f"rangecap: invalid input: {exc}", file=sys.stderr)
        return 2
    except (ResourceCapError, NonConvergence) as exc:
        print(f"rangecap: {exc}", file=sys.stderr)
        return 3
    files = {}
    if args.format in ("json", "both"):
        files["report.json"] = dumps(payload)
    if args.format in ("csv", "both"):
        files["report.csv"] = raw_csv if raw_csv is not None else csv_text(rows or [])
    config = {k: v for k, v in ctx.params.items()}
    config.update({"command": args.command, "group": ctx.group.to_spec(), "seed": ctx.seed, "format": args.format})
    manifest = RunManifest(
        __version__,
        args.command,
        config,
        ctx.params.get("seeds") or [ctx.seed],
        ctx.threads,
        started=started,
    )
    manifest.finished = utc_now()
    manifest.runtime = round(time.perf_counter() - t0, 3)
    write_outputs(args.out, files, manifest)
    if args.assert_ and passed is False:
        print("rangecap: acceptance check failed", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
