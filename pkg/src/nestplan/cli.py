"""Command-line entry point: ``nestplan domain|filter|plan|simulate|profile|bench|bound``."""
from __future__ import annotations

import argparse
import sys

import numpy as np

from . import __version__
from .analysis import BoundInputs, chernoff_epsilon, horizon_error_bound, value_range
from .domains import BUILTIN_DOMAINS, dump_domain, get_domain, load_domain
from .errors import NestplanError
from .harness import (
    ExperimentConfig,
    hardware_string,
    load_config,
    parse_sequence,
    run_filter_experiment,
    run_profile_experiment,
    run_runtime_benchmark,
    simulate_episode,
)
from .model import sample_initial_particles, validate_domain
from .planner import RtsConfig, SolveContext, approx_policy
from .rng import Stream


def _experiment_args(p: argparse.ArgumentParser, horizon=2):
    p.add_argument("--domain", default="tiger")
    p.add_argument("--level", type=int, default=1)
    p.add_argument("--prior", default=None, help="built-in prior name or prior file")
    p.add_argument("--particles", default="1000", help="comma-separated particle counts")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.add_argument("--gamma", type=float, default=0.9)
    p.add_argument("--horizon", type=int, default=horizon)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nestplan", description=__doc__)
    parser.add_argument("--version", action="version", version=f"nestplan {__version__}")
    parser.add_argument("--config", default=None, help="key = value file; flags override it")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("domain", help="export, validate or list domains")
    p.add_argument("action", choices=["export", "validate", "list"])
    p.add_argument("file", nargs="?")
    p.add_argument("--name", default="tiger")
    p.add_argument("--out", default=None)

    p = sub.add_parser("filter", help="filtering convergence experiment")
    _experiment_args(p, horizon=1)
    p.add_argument("--action", default=None)
    p.add_argument("--obs", default=None)
    p.add_argument("--steps", type=int, default=1, help="times to repeat --action/--obs")
    p.add_argument("--sequence", default=None, help="e.g. 'L:GL,S;OR:GL,S'")
    p.add_argument("--baseline", default="grid:200", help="grid:<G>")
    p.add_argument("--variant", choices=["enum", "sample"], default="enum")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--no-timing", action="store_true", help="blank the timing column")

    p = sub.add_parser("plan", help="compute and print a policy tree")
    _experiment_args(p)
    p.add_argument("--rts", default="off", help="off | N | depth:N,...")
    p.add_argument("--stats", action="store_true")
    p.add_argument("--node-budget", type=int, default=None)

    p = sub.add_parser("simulate", help="plan once, then play episodes")
    _experiment_args(p)
    p.add_argument("--rts", default="off")
    p.add_argument("--runs", type=int, default=10)

    p = sub.add_parser("profile", help="performance profile experiment")
    _experiment_args(p)
    p.add_argument("--rts", default="off")
    p.add_argument("--obs-draws", default="", help="comma-separated RTS draws per node")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--runs", type=int, default=100)
    p.add_argument("--no-timing", action="store_true")

    p = sub.add_parser("bench", help="runtime benchmark")
    _experiment_args(p, horizon=4)
    p.add_argument("--rts", default="default")
    p.add_argument("--repetitions", type=int, default=5)
    p.add_argument("--tasks", default="filter,plan")
    p.add_argument("--sequence", default=None)

    p = sub.add_parser("bound", help="Chernoff-Hoeffding error bounds")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--rho", type=float, default=None)
    p.add_argument("--rmax", type=float, default=None)
    p.add_argument("--rmin", type=float, default=None)
    p.add_argument("--gamma", type=float, default=0.9)
    p.add_argument("--t", type=int, default=2)
    p.add_argument("--loose", action="store_true", help="use (Rmax-Rmin)/(1-gamma) as the value range")
    p.add_argument("--csv", action="store_true")
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", default=None)
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    values = load_config(known.config)
    for action in parser._subparsers._group_actions:
        for sp in action.choices.values():
            dests = {a.dest for a in sp._actions}
            sp.set_defaults(**{k: v for k, v in values.items() if k in dests})


def _config(args, **extra) -> ExperimentConfig:
    data = {k: v for k, v in vars(args).items() if v is not None}
    data.update(extra)
    if getattr(args, "no_timing", False) in (True, "true", "1"):
        data["timing"] = False
    return ExperimentConfig.from_mapping(data)


def _emit(text: str, out: str | None):
    if not out:
        sys.stdout.write(text)


def cmd_domain(args) -> int:
    if args.action == "list":
        print("\n".join(BUILTIN_DOMAINS))
        return 0
    if args.action == "export":
        text = dump_domain(get_domain(args.name))
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        return 0
    if not args.file:
        print("domain validate needs a file", file=sys.stderr)
        return 2
    try:
        with open(args.file, encoding="utf-8") as fh:
            d = load_domain(fh.read())
    except NestplanError as exc:
        print(f"invalid: {exc}")
        return 1
    report = validate_domain(d)
    for v in report:
        print(v)
    if not report:
        print(f"ok: {d.name} ({d.n_states} states)")
    return 1 if report else 0


def cmd_filter(args) -> int:
    extra = {}
    if args.action and args.obs:
        extra["sequence"] = ";".join([f"{args.action}:{args.obs}"] * max(1, args.steps))
    if args.baseline and args.baseline.startswith("grid:"):
        extra["grid"] = int(args.baseline.split(":", 1)[1])
    cfg = _config(args, **extra)
    parse_sequence(cfg.sequence or "x:y")
    _emit(run_filter_experiment(cfg), cfg.out)
    return 0


def _plan(args):
    cfg = _config(args)
    prior = cfg.prior_for(cfg.horizon)
    N = cfg.particles[0]
    rts = RtsConfig.parse(cfg.rts)
    stream = Stream(cfg.seed)
    ps = sample_initial_particles(prior, N, stream.child("prior").generator())
    ctx = SolveContext(seed=cfg.seed, rts=rts, node_budget=getattr(args, "node_budget", None))
    dist, tree = approx_policy(ps, cfg.level, cfg.horizon, rts, stream.child("plan"), ctx=ctx)
    return cfg, prior, tree, ctx


def cmd_plan(args) -> int:
    cfg, _, tree, ctx = _plan(args)
    print(tree.render())
    if args.stats:
        stats = ctx.stats()
        stats["tree_nodes"] = tree.count()
        print(" ".join(f"{k}={v}" for k, v in stats.items()))
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(tree.to_json())
    return 0


def cmd_simulate(args) -> int:
    cfg, prior, tree, ctx = _plan(args)
    domain = get_domain(cfg.domain)
    totals = []
    for r in range(args.runs):
        rec = simulate_episode(domain, tree, None, cfg.horizon, Stream(cfg.seed).child("episode", r),
                               prior=prior, ctx=ctx, rts=RtsConfig.parse(cfg.rts))
        totals.append(rec.total)
        acts = " ".join(domain.actions["i"][a] for a in rec.actions_i)
        print(f"run {r}: start={domain.states[rec.states[0]]} i=[{acts}] reward={rec.total:.6g}"
              + (f" replans={rec.replans}" if rec.replans else ""))
    print(f"mean={np.mean(totals):.6g} sd={np.std(totals, ddof=1) if len(totals) > 1 else 0.0:.6g}")
    return 0


def cmd_profile(args) -> int:
    cfg = _config(args)
    _emit(run_profile_experiment(cfg), cfg.out)
    return 0


def cmd_bench(args) -> int:
    cfg = _config(args)
    _emit(run_runtime_benchmark(cfg, tasks=tuple(args.tasks.split(","))), cfg.out)
    return 0


def cmd_bound(args) -> int:
    if args.rho is None and (args.rmax is None or args.rmin is None):
        print("bound needs --rho or both --rmax and --rmin", file=sys.stderr)
        return 2
    rmax = args.rmax if args.rmax is not None else args.rho
    rmin = args.rmin if args.rmin is not None else 0.0
    rho = args.rho
    if rho is None:
        rho = value_range(rmax, rmin, args.gamma, args.t, finite=not args.loose)
    inp = BoundInputs(args.n, args.delta, args.gamma, args.t, rmax, rmin, rho)
    eps = chernoff_epsilon(args.n, args.delta, rho)
    e_t, worst = horizon_error_bound(inp, eps)
    if args.csv:
        print(f"# nestplan {__version__} bound {hardware_string()} 0")
        print("N,delta,rho,gamma,t,epsilon,error_bound,trivial_bound")
        print(",".join(f"{x:.10g}" for x in (args.n, args.delta, rho, args.gamma, args.t, eps, e_t, worst)))
    else:
        print(f"N={args.n} delta={args.delta:g} rho={rho:.6g} gamma={args.gamma:g} t={args.t}: "
              f"epsilon={eps:.6g} E^t={e_t:.6g} trivial={worst:.6g}")
    return 0


COMMANDS = {
    "domain": cmd_domain,
    "filter": cmd_filter,
    "plan": cmd_plan,
    "simulate": cmd_simulate,
    "profile": cmd_profile,
    "bench": cmd_bench,
    "bound": cmd_bound,
}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    parser = build_parser()
    _apply_config(parser, argv)
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except NestplanError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
