"""Command-line front end: synth, run, suite, ari, inspect.

Exit codes: 0 success, 2 usage, 3 data-format, 4 runtime failure.
Experiment configs are JSON documents mirroring ExperimentConfig field
names; suite configs may hold lists for method/guidance/kschedule/metric
plus a seeds list.
"""

import argparse
import json
import sys

import numpy as np

from .clustering import adjusted_rand_index
from .data import DatasetFormatError, SyntheticSpec, generate_synthetic, load_dataset, save_dataset
from .engine import (
    ExperimentConfig,
    emit_report,
    report_rows,
    run_experiment,
    run_suite,
)
from .promptmodel import TrainConfig

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_RUNTIME = 4


def _emit(args, payload, human):
    if args.quiet:
        print(json.dumps(payload, sort_keys=True))
    else:
        print(human)


def _load_config_doc(path):
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def _experiment_config(doc, seed_override=None):
    doc = dict(doc)
    train_doc = doc.pop("train", {})
    seeds = doc.pop("seeds", [0])
    if seed_override is not None:
        seeds = list(seed_override)
    known = {f for f in ExperimentConfig.__dataclass_fields__} - {"train", "seeds"}
    unknown = set(doc) - known
    if unknown:
        raise ValueError(f"unknown config fields: {sorted(unknown)}")
    return ExperimentConfig(train=TrainConfig(**train_doc), seeds=seeds, **doc)


def cmd_synth(args):
    spec = SyntheticSpec(
        c=args.classes,
        d=args.dim,
        per_class=args.per_class,
        spread=args.spread,
        text_noise=args.text_noise,
        seed=args.seed,
    )
    try:
        spec.validate()
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    ds = generate_synthetic(spec)
    save_dataset(ds, args.out)
    _emit(
        args,
        {"n": ds.n, "d": ds.d, "c": ds.c, "out": args.out},
        f"wrote {args.out}: n={ds.n} d={ds.d} c={ds.c}",
    )
    return EXIT_OK


def cmd_run(args):
    ds = load_dataset(args.dataset)
    doc = _load_config_doc(args.config) if args.config else {}
    cfg = _experiment_config(doc, seed_override=[args.seed] if args.seed is not None else None)
    seed = cfg.seeds[0]
    cfg = cfg.resolved(ds)
    reports = run_experiment(ds, cfg, seed, snapshot_dir=args.snapshots)
    table = report_rows(cfg, seed, reports)
    emit_report(table, args.out, format=args.format)
    final = reports[-1]
    _emit(
        args,
        {
            "out": args.out,
            "rounds": len(reports),
            "final_accuracy": final.accuracy,
            "cum_budget_ratio": final.cum_budget_ratio,
        },
        f"wrote {args.out}: {len(reports)} rounds, final accuracy "
        f"{final.accuracy:.4f}, cumulative budget {final.cum_budget_ratio:.2%}",
    )
    return EXIT_OK


def _expand_matrix(doc):
    """A matrix document holds lists over the swept fields."""
    base = dict(doc)
    seeds = base.pop("seeds", [0])
    if not isinstance(seeds, list) or not seeds:
        raise ValueError("matrix needs a nonempty seeds list")
    sweeps = {}
    for key in ("method", "guidance", "kschedule", "metric"):
        if key in base and isinstance(base[key], list):
            sweeps[key] = base.pop(key)
            if not sweeps[key]:
                raise ValueError(f"matrix field {key} must not be an empty list")
    cells = [{}]
    for key, values in sweeps.items():
        cells = [dict(cell, **{key: v}) for cell in cells for v in values]
    configs = [_experiment_config(dict(base, **cell), seed_override=seeds) for cell in cells]
    return configs, seeds


def cmd_suite(args):
    ds = load_dataset(args.dataset)
    configs, seeds = _expand_matrix(_load_config_doc(args.config))
    table = run_suite(ds, configs, seeds, jobs=args.jobs)
    emit_report(table, args.out, format=args.format)
    _emit(
        args,
        {"out": args.out, "cells": len(configs), "seeds": len(seeds), "rows": len(table)},
        f"wrote {args.out}: {len(configs)} config cells x {len(seeds)} seeds, {len(table)} rows",
    )
    return EXIT_OK


def cmd_ari(args):
    ds = load_dataset(args.dataset)
    with open(args.partition, encoding="utf-8") as f:
        assign = [int(line) for line in f.read().split()]
    train_idx = ds.split_indices("train")
    if len(assign) != len(train_idx):
        print(
            f"error: partition has {len(assign)} entries, train split has {len(train_idx)}",
            file=sys.stderr,
        )
        return EXIT_USAGE
    score = adjusted_rand_index(np.asarray(assign), ds.labels[train_idx])
    _emit(args, {"ari": round(score, 4)}, f"{score:.4f}")
    return EXIT_OK


def cmd_inspect(args):
    ds = load_dataset(args.dataset)
    train_idx = ds.split_indices("train")
    test_idx = ds.split_indices("test")
    counts = np.bincount(ds.labels.astype(np.int64), minlength=ds.c)
    summary = {
        "n": ds.n,
        "d": ds.d,
        "c": ds.c,
        "train": int(train_idx.size),
        "test": int(test_idx.size),
        "class_names": list(ds.class_names),
        "per_class_counts": counts.tolist(),
    }
    _emit(args, summary, json.dumps(summary, indent=2))
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="aepl", description=__doc__)
    parser.add_argument("--quiet", action="store_true", help="one summary JSON line on stdout")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset file")
    p.add_argument("--classes", type=int, default=10)
    p.add_argument("--dim", type=int, default=16)
    p.add_argument("--per-class", type=int, default=100)
    p.add_argument("--spread", type=float, default=0.05)
    p.add_argument("--text-noise", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("run", help="run one experiment with one seed")
    p.add_argument("--dataset", required=True)
    p.add_argument("--config", help="JSON experiment config (defaults apply when omitted)")
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--snapshots", help="directory for per-round snapshot JSON")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("suite", help="run a config matrix across seeds")
    p.add_argument("--dataset", required=True)
    p.add_argument("--config", required=True, help="JSON matrix config")
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(fn=cmd_suite)

    p = sub.add_parser("ari", help="ARI of a stored partition vs ground truth")
    p.add_argument("--dataset", required=True)
    p.add_argument("--partition", required=True, help="one cluster id per line, train split order")
    p.set_defaults(fn=cmd_ari)

    p = sub.add_parser("inspect", help="print a dataset summary")
    p.add_argument("--dataset", required=True)
    p.set_defaults(fn=cmd_inspect)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except DatasetFormatError as exc:
        print(f"data format error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
