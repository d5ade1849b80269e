"""Command line interface.

Subcommands: sample (emit serialized trees), exp <name> (run an
experiment, write CSV + JSON summary), oracle (certify the sampler
against the exhaustive small-tree law), stable (density CSV). Exit codes:
0 pass, 2 statistical-test failure, 1 usage or configuration error.
Flags win over values from --config; GWCOND_WORKERS sets the default
worker count.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from collections import Counter

import numpy as np

from . import experiments, oracle
from .distributions import build_power_law, build_split
from .experiments import EXPERIMENTS, ExperimentConfig
from .sampler import INVALID, sample_tree_Tn_Omega, tree_to_line
from .stable import StableLaw
from .streams import child_stream


def _add_law_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", type=float, default=1.5, help="tail exponent (>1, not 2)")
    p.add_argument("--mean", type=float, default=0.5, help="offspring mean in (0,1)")
    p.add_argument("--omega", type=str, default="all",
                   help="'all', 'k1,k2,...' (finite Omega) or '~k1,...' (finite complement)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", type=str, default=None,
                   help="JSON config file; explicit flags win on conflict")


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gwcond",
                                 description="Conditioned subcritical Galton-Watson tree lab")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="emit sampled trees, one per line")
    _add_law_args(p)
    p.add_argument("--n", type=int, default=100, help="number of Omega-outdegree vertices")
    p.add_argument("--count", type=int, default=1, help="number of trees")
    p.add_argument("--mode", choices=["auto", "exact", "bigjump"], default="auto")

    p = sub.add_parser("exp", help="run an experiment")
    p.add_argument("name", choices=sorted(EXPERIMENTS))
    _add_law_args(p)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--mode", choices=["auto", "exact", "bigjump"], default="auto")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", type=str, default=None, help="CSV output path")
    p.add_argument("--statistic", choices=["second_degree", "max_fringe_size", "kth_degree"],
                   default="second_degree")
    p.add_argument("--order-i", type=int, default=3)
    p.add_argument("--pattern", type=str, default="0", help="pattern outdegrees, e.g. '2 0 0'")
    p.add_argument("--t-grid", type=str, default="0.25,0.5,0.75,1.0")
    p.add_argument("--n-grid", type=str, default="")
    p.add_argument("--cap-b", type=int, default=8)

    p = sub.add_parser("oracle", help="chi-square the sampler against exhaustive enumeration")
    _add_law_args(p)
    p.add_argument("--cap", type=int, default=6)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--reps", type=int, default=100000)
    p.add_argument("--mode", choices=["auto", "exact", "bigjump"], default="exact")

    p = sub.add_parser("stable", help="stable-law numerics")
    stable_sub = p.add_subparsers(dest="stable_command", required=True)
    pd = stable_sub.add_parser("density", help="emit CSV x,h rows")
    pd.add_argument("--theta", type=float, required=True)
    pd.add_argument("--from", dest="lo", type=float, default=-10.0)
    pd.add_argument("--to", dest="hi", type=float, default=10.0)
    pd.add_argument("--step", type=float, default=0.1)
    pd.add_argument("--out", type=str, default=None)
    return ap


def _apply_config_file(args: argparse.Namespace, argv) -> None:
    if not getattr(args, "config", None):
        return
    with open(args.config) as fh:
        file_conf = json.load(fh)
    given = {a.lstrip("-").split("=")[0].replace("-", "_") for a in argv if a.startswith("--")}
    for key, val in file_conf.items():
        attr = key.replace("-", "_")
        if hasattr(args, attr) and attr not in given:
            setattr(args, attr, val)


def _parse_grid(text: str, cast=float) -> tuple:
    text = text.strip()
    if not text:
        return ()
    return tuple(cast(t) for t in text.replace(",", " ").split())


def _cmd_sample(args) -> int:
    law = build_power_law(args.alpha, args.mean)
    split = build_split(law, args.omega)
    mode = args.mode
    if mode == "auto":
        mode = "exact" if args.n <= experiments.EXACT_MODE_MAX_N else "bigjump"
    for i in range(args.count):
        stream = child_stream(args.seed, i)
        tree = sample_tree_Tn_Omega(split, args.n, stream, mode=mode)
        print("INVALID" if tree is INVALID else tree_to_line(tree))
    return 0


def _cmd_exp(args, argv) -> int:
    workers = args.workers
    if workers is None:
        workers = int(os.environ.get("GWCOND_WORKERS", "1"))
    config = ExperimentConfig(
        alpha=args.alpha, mean=args.mean, omega=args.omega, n=args.n,
        reps=args.reps, seed=args.seed, mode=args.mode, workers=workers,
        experiment=args.name, out=args.out, statistic=args.statistic,
        order_i=args.order_i, pattern=args.pattern,
        t_grid=_parse_grid(args.t_grid) or (0.25, 0.5, 0.75, 1.0),
        n_grid=_parse_grid(args.n_grid, int), cap_b=args.cap_b)
    summary, _ = EXPERIMENTS[args.name](config)
    print(summary.to_json())
    return 0 if summary.passed else 2


def _cmd_oracle(args) -> int:
    law = build_power_law(args.alpha, args.mean)
    split = build_split(law, args.omega)
    table = oracle.enumerate_trees(law, args.cap)
    exact = oracle.exact_conditional_law(table, split.omega, args.n)
    exact_pmf = {t.key: p for t, p in exact}
    counts: Counter = Counter()
    kept = 0
    for i in range(args.reps):
        stream = child_stream(args.seed, i)
        tree = sample_tree_Tn_Omega(split, args.n, stream, mode=args.mode)
        if tree is INVALID or tree.size > args.cap:
            continue
        counts[tree.key] += 1
        kept += 1
    gof = oracle.goodness_of_fit(dict(counts), exact_pmf)
    passed = gof.pvalue > experiments.CHI2_P_MIN
    print(json.dumps({
        "schema": 1, "experiment": "oracle_equivalence",
        "config": {"alpha": args.alpha, "mean": args.mean, "omega": str(split.omega),
                   "n": args.n, "cap": args.cap, "reps": args.reps,
                   "seed": args.seed, "mode": args.mode},
        "kept": kept, "chi2": gof.chi2, "dof": gof.dof, "pvalue": gof.pvalue,
        "passed": passed}, indent=2, sort_keys=True))
    return 0 if passed else 2


def _cmd_stable(args) -> int:
    law = StableLaw(args.theta)
    xs = np.arange(args.lo, args.hi + args.step / 2, args.step)
    hs = law.density(xs)
    lines = ["x,h"]
    lines.extend(f"{x:.17g},{h:.17g}" for x, h in zip(xs, hs))
    text = "\n".join(lines) + "\n"
    if args.out:
        experiments._write_atomic(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    try:
        if getattr(args, "config", None):
            _apply_config_file(args, argv)
        if args.command == "sample":
            return _cmd_sample(args)
        if args.command == "exp":
            return _cmd_exp(args, argv)
        if args.command == "oracle":
            return _cmd_oracle(args)
        if args.command == "stable":
            return _cmd_stable(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 1


if __name__ == "__main__":
    sys.exit(main())
