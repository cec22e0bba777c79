"""Command-line interface.

Verbs: ``run`` (a named recipe or a JSON config), ``resources`` (per-circuit
width/depth table), ``fit-state`` (fit ansatz parameters to a vector file),
``metrics`` (recompute aggregate metrics from a run directory).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np


def _add_common(p):
    p.add_argument("--seed", type=int, default=None, help="master RNG seed")
    p.add_argument("--runs", type=int, default=None, help="target number of successful runs")
    p.add_argument("--out-dir", default="vqelast_out", help="output directory for CSV files")
    p.add_argument(
        "--backend",
        choices=["circuit", "algebraic", "both"],
        default=None,
        help="expectation backend (default: algebraic)",
    )


def cmd_run(args) -> int:
    from .recipes import RECIPES, load_config, run_experiment, run_recipe

    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.runs is not None:
        overrides["runs"] = args.runs
    if args.backend is not None:
        overrides["backend"] = args.backend

    if args.target in RECIPES:
        results = run_recipe(args.target, out_dir=args.out_dir, **overrides)
        for key, val in results.items():
            stats = getattr(val, "stats", val)
            print(f"{key}: {json.dumps(_short_stats(stats))}")
    elif os.path.exists(args.target):
        cfg = load_config(args.target)
        for key, val in overrides.items():
            setattr(cfg, key, val)
        cfg.validate()
        batch = run_experiment(cfg, args.out_dir)
        print(json.dumps(_short_stats(batch.stats), indent=2))
    else:
        print(f"error: {args.target!r} is neither a recipe nor a config file", file=sys.stderr)
        return 2
    print(f"outputs written under {args.out_dir}")
    return 0


def _short_stats(stats) -> dict:
    if not isinstance(stats, dict):
        return stats
    keep = {}
    for k, v in stats.items():
        if isinstance(v, float):
            keep[k] = round(v, 8)
        else:
            keep[k] = v
    return keep


def cmd_resources(args) -> int:
    from .recipes import ExperimentConfig, load_config, report_resources

    if os.path.exists(args.target):
        cfg = load_config(args.target)
    else:
        cfg = ExperimentConfig.from_dict({"scheme": args.target})
    out = os.path.join(args.out_dir, "resources.csv")
    rows = report_resources(cfg, out)
    width = max(r[1] for r in rows)
    print(f"{len(rows)} distinct circuits, max width {width}; table at {out}")
    for label, w, depth, total, _ in rows:
        print(f"  {label:18s} width={w:3d} depth={depth:5d} gates={total}")
    return 0


def cmd_fit_state(args) -> int:
    from .stateprep import FitCache, fit_state
    from .ansatz import realize_vector

    target = np.loadtxt(args.vector_file)
    n = int(np.log2(target.size))
    cache = FitCache(args.cache) if args.cache else None
    params = fit_state(target, n, args.depth, tol=args.tol, seed=args.seed or 0, cache=cache)
    residual = float(np.linalg.norm(realize_vector(params) - target))
    print(json.dumps({
        "scale": params.scale,
        "angles": list(params.angles),
        "n": params.n,
        "d": params.d,
        "residual": residual,
    }, indent=2))
    return 0


def cmd_metrics(args) -> int:
    import csv as _csv

    printed = 0
    for root, _dirs, files in os.walk(args.run_dir):
        for name in sorted(files):
            if name == "aggregate.csv":
                with open(os.path.join(root, name), encoding="utf-8") as fh:
                    rows = list(_csv.reader(fh))
                print(os.path.relpath(os.path.join(root, name), args.run_dir))
                for key, val in zip(rows[0], rows[1]):
                    print(f"  {key}: {val}")
                printed += 1
    if not printed:
        print(f"no aggregate.csv found under {args.run_dir}", file=sys.stderr)
        return 1
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="vqelast",
        description="Variational quantum solver for 1D Neo-Hookean elasticity",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a recipe (ex1, kappa_sweep, scaling, robustness) or a JSON config")
    p_run.add_argument("target")
    _add_common(p_run)
    p_run.set_defaults(fn=cmd_run)

    p_res = sub.add_parser("resources", help="emit per-circuit width/depth/gate-count table")
    p_res.add_argument("target", help="scheme name or JSON config path")
    _add_common(p_res)
    p_res.set_defaults(fn=cmd_resources)

    p_fit = sub.add_parser("fit-state", help="fit ansatz parameters to a vector file")
    p_fit.add_argument("vector_file")
    p_fit.add_argument("--depth", type=int, default=2)
    p_fit.add_argument("--tol", type=float, default=1e-5)
    p_fit.add_argument("--seed", type=int, default=0)
    p_fit.add_argument("--cache", default=None)
    p_fit.set_defaults(fn=cmd_fit_state)

    p_met = sub.add_parser("metrics", help="print aggregate metrics from a run directory")
    p_met.add_argument("run_dir")
    p_met.set_defaults(fn=cmd_metrics)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
