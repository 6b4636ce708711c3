"""Command line interface: ``sbmcommunity {gen,cluster,bench,eval}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import harness
from .graph import (
    PRESETS,
    SsbmParams,
    read_edgelist,
    read_labels,
    ssbm_generate,
    write_edgelist,
    write_labels,
)
from .metrics import hard_modularity, nmi, overlap


def _add_model_flags(p):
    p.add_argument("--lambda", dest="lam", type=float, help="balance penalty weight (default 0.5)")
    p.add_argument("--layers", type=int)
    p.add_argument("--heads", type=int)
    p.add_argument("--hidden", type=int)
    p.add_argument("--restarts", type=int)
    p.add_argument("--max-steps", type=int)
    p.add_argument("--patience", type=int)
    p.add_argument("--lr", dest="learning_rate", type=float)
    p.add_argument("--r-mode", choices=("standard", "literal"))
    p.add_argument("--reg-mode", choices=("normalized", "literal"))


def _add_graph_flags(p):
    p.add_argument("--preset", choices=sorted(PRESETS), default="assoc")
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--a", type=float)
    p.add_argument("--b", type=float)


def _overrides(args) -> dict:
    keys = harness.NEURAL_OVERRIDES + ("r_mode",)
    return {k: getattr(args, k) for k in keys if getattr(args, k, None) is not None}


def _params(args) -> SsbmParams:
    base = PRESETS[args.preset]
    return SsbmParams(
        n=args.n if args.n is not None else base.n,
        k=args.k if args.k is not None else base.k,
        a=args.a if args.a is not None else base.a,
        b=args.b if args.b is not None else base.b,
    )


def cmd_gen(args):
    params = _params(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i in range(args.count):
        g, labels = ssbm_generate(params, args.seed + i)
        write_edgelist(g, out / f"graph_{i}.txt")
        write_labels(labels, out / f"labels_{i}.txt")
    print(f"wrote {args.count} graphs to {out}", file=sys.stderr)


def cmd_cluster(args):
    g = read_edgelist(args.graph)
    mode = args.mode or harness.preset_mode(args.preset)
    t0 = time.perf_counter()
    out = harness.run_method(g, args.method, mode, args.k, args.seed, _overrides(args))
    runtime = time.perf_counter() - t0
    labels = out.pop("labels")
    doc = {
        "schema": harness.SCHEMA,
        "method": args.method,
        "mode": mode,
        "seed": args.seed,
        "k": args.k,
        "overrides": _overrides(args),
        "labels": [int(c) for c in labels],
        "modularity": hard_modularity(g, labels) if g.m else None,
        **{key: float(v) for key, v in out.items()},
        "runtime": runtime,
    }
    if args.out:
        write_labels(labels, args.out)
    print(json.dumps(doc, sort_keys=True))


def cmd_eval(args):
    truth = read_labels(args.truth)
    pred = read_labels(args.pred)
    doc = {"schema": harness.SCHEMA, "nmi": nmi(truth, pred)}
    k = args.k or int(max(truth.max(), pred.max())) + 1
    if pred.max() < k and truth.max() < k:
        doc["overlap"] = overlap(truth, pred, k)
    if args.graph:
        doc["modularity"] = hard_modularity(read_edgelist(args.graph), pred)
    print(json.dumps(doc, sort_keys=True))


def cmd_bench(args):
    use_custom = any(getattr(args, f) is not None for f in ("n", "k", "a", "b"))
    doc = harness.bench(
        preset=args.preset,
        methods=args.methods,
        trials=args.trials,
        seed=args.seed,
        jobs=args.jobs,
        overrides=_overrides(args),
        params=_params(args) if use_custom else None,
        data_dir=args.data_dir,
    )
    if args.out:
        harness.write_json(doc, args.out)
    title = f"{args.preset}: {args.trials} trials, master seed {args.seed}"
    print(harness.format_table(doc["summary"], title))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sbmcommunity", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="sample SSBM graphs and their labels")
    _add_graph_flags(p)
    p.add_argument("--count", "--trials", dest="count", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("cluster", help="cluster one graph file, JSON on stdout")
    p.add_argument("graph")
    p.add_argument("--method", required=True, choices=[m for m in harness.METHODS if m != "true-labels"])
    p.add_argument("--preset", choices=sorted(PRESETS), default="assoc")
    p.add_argument("--mode", choices=("associative", "disassociative"))
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="also write the labels file here")
    _add_model_flags(p)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("bench", help="benchmark methods over many graphs")
    _add_graph_flags(p)
    p.add_argument("--methods", "--method", dest="methods", default="all",
                   help="comma separated method names or 'all'")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--data-dir", help="load graph_<i>.txt / labels_<i>.txt instead of sampling")
    p.add_argument("--out", help="write per-trial results and summary JSON here")
    _add_model_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("eval", help="score a labels file against ground truth")
    p.add_argument("--truth", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--graph", help="edge list, enables the modularity score")
    p.add_argument("--k", type=int)
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
