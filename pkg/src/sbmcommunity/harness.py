"""Benchmark orchestration: trials, per-method runs, aggregation, tables."""

from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from .estimators import (
    BetheHessianClustering,
    LouvainClustering,
    ModularityEncoderClustering,
    check_mode,
)
from .graph import PRESETS, Graph, SsbmParams, read_edgelist, read_labels, ssbm_generate
from .metrics import hard_modularity, nmi, overlap

log = logging.getLogger(__name__)

SCHEMA = 1

METHODS = (
    "true-labels",
    "bethe-hessian",
    "louvain",
    "gnn-random",
    "gnn-bh",
    "attention-random",
    "attention-bh",
)

NEURAL = {
    "gnn-random": ("gcn", "random"),
    "gnn-bh": ("gcn", "bethe-hessian"),
    "attention-random": ("attention", "random"),
    "attention-bh": ("attention", "bethe-hessian"),
}

# keys of ModularityEncoderClustering accepted as overrides from the command line
NEURAL_OVERRIDES = (
    "layers", "heads", "hidden", "lam", "reg_mode", "restarts",
    "max_steps", "patience", "learning_rate",
)


def preset_mode(preset: str) -> str:
    return "associative" if preset == "assoc" else "disassociative"


def parse_methods(spec) -> list[str]:
    if spec in (None, "all"):
        return list(METHODS)
    names = spec.split(",") if isinstance(spec, str) else list(spec)
    for m in names:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}; choose from {', '.join(METHODS)}")
    return names


def run_method(g: Graph, method: str, mode: str, k: int, seed: int, overrides=None) -> dict:
    """Run one clustering method on ``g``; ground truth is never passed in.

    Returns a dict with ``labels`` and, for the neural methods, ``soft_modularity``.
    """
    overrides = dict(overrides or {})
    mode = check_mode(mode)
    if method == "bethe-hessian":
        est = BetheHessianClustering(k, mode, r_mode=overrides.get("r_mode", "standard"), random_state=seed)
        return {"labels": est.fit_predict(g), "r": est.r_}
    if method == "louvain":
        est = LouvainClustering(random_state=seed).fit(g)
        return {"labels": est.labels_, "n_communities": est.n_clusters_}
    if method in NEURAL:
        kind, init = NEURAL[method]
        kw = {key: overrides[key] for key in NEURAL_OVERRIDES + ("r_mode",) if key in overrides}
        est = ModularityEncoderClustering(k, mode, encoder=kind, init=init, random_state=seed, **kw)
        est.fit(g)
        return {
            "labels": est.labels_,
            "soft_modularity": est.soft_modularity_,
            "train_steps": len(est.history_.losses),
            "best_loss": est.history_.best_loss,
        }
    raise ValueError(f"unknown method {method!r}")


@dataclass
class TrialResult:
    dataset: str
    trial: int
    graph_seed: int
    method: str
    metrics: dict | None
    runtime: float
    extras: dict = field(default_factory=dict)
    error: str | None = None


def evaluate(g: Graph, truth, labels, k: int, with_overlap=True) -> dict:
    out = {"modularity": hard_modularity(g, labels)}
    if with_overlap:
        out["overlap"] = overlap(truth, labels, k)
    out["nmi"] = nmi(truth, labels)
    return out


def run_trial(
    dataset: str,
    params: SsbmParams,
    trial: int,
    graph_seed: int,
    methods,
    mode: str,
    overrides=None,
    data_dir=None,
) -> list[TrialResult]:
    """Generate (or load) one graph and run every method on it."""
    if data_dir is not None:
        g = read_edgelist(Path(data_dir) / f"graph_{trial}.txt")
        truth = read_labels(Path(data_dir) / f"labels_{trial}.txt")
    else:
        g, truth = ssbm_generate(params, graph_seed)
    k = params.k
    results = []
    with threadpool_limits(1):
        for method in methods:
            if method == "louvain" and mode == "disassociative":
                continue
            t0 = time.perf_counter()
            try:
                if method == "true-labels":
                    labels, extras = truth, {}
                else:
                    out = run_method(g, method, mode, k, graph_seed, overrides)
                    labels = out.pop("labels")
                    extras = {key: float(v) for key, v in out.items()}
                metrics = evaluate(g, truth, labels, k, with_overlap=method != "louvain")
                err = None
            except Exception as exc:  # recorded per trial, never dropped
                log.warning("trial %d %s failed: %s", trial, method, exc)
                metrics, extras, err = None, {}, f"{type(exc).__name__}: {exc}"
            results.append(
                TrialResult(dataset, trial, graph_seed, method, metrics,
                            time.perf_counter() - t0, extras, err)
            )
    return results


def _trial_job(args):
    return run_trial(*args)


def bench(
    preset="assoc",
    methods="all",
    trials=20,
    seed=0,
    jobs=1,
    overrides=None,
    params: SsbmParams | None = None,
    data_dir=None,
) -> dict:
    """Run every method on ``trials`` graphs; trial ``i`` uses graph seed ``seed + i``."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    params = params or PRESETS[preset]
    mode = preset_mode(preset)
    methods = parse_methods(methods)
    jobs_args = [
        (preset, params, i, seed + i, methods, mode, overrides, data_dir) for i in range(trials)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            per_trial = list(pool.map(_trial_job, jobs_args))
    else:
        per_trial = [_trial_job(a) for a in jobs_args]
    results = [r for rs in per_trial for r in rs]
    return {
        "schema": SCHEMA,
        "preset": preset,
        "params": asdict(params),
        "master_seed": seed,
        "trials": trials,
        "methods": methods,
        "overrides": dict(overrides or {}),
        "results": [asdict(r) for r in results],
        "summary": summarize(results, methods, mode),
    }


def summarize(results, methods, mode) -> dict:
    """Mean and sample standard deviation (0 for a single trial) per method and metric."""
    summary = {}
    for method in methods:
        rows = [r for r in results if _get(r, "method") == method]
        if method == "louvain" and mode == "disassociative":
            summary[method] = {"trials": 0, "failed": 0, "not_applicable": True}
            continue
        ok = [_get(r, "metrics") for r in rows if _get(r, "metrics") is not None]
        entry = {"trials": len(ok), "failed": len(rows) - len(ok)}
        for metric in ("modularity", "overlap", "nmi"):
            vals = [m[metric] for m in ok if metric in m]
            if not vals:
                continue
            vals = np.asarray(vals, dtype=float)
            std = float(vals.std(ddof=1)) if len(vals) > 1 else 0.0
            entry[metric] = {"mean": float(vals.mean()), "std": std}
        summary[method] = entry
    return summary


def _get(r, key):
    return r[key] if isinstance(r, dict) else getattr(r, key)


def format_table(summary: dict, title="") -> str:
    header = ("Algorithm", "Modularity", "Overlap", "NMI")
    rows = []
    for method, entry in summary.items():
        cells = [method]
        for metric in ("modularity", "overlap", "nmi"):
            s = entry.get(metric)
            cells.append("N/A" if s is None else f"{s['mean']:.3f} ± {s['std']:.3f}")
        rows.append(cells)
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h) for i, h in enumerate(header)]
    line = lambda cells: " | ".join(c.ljust(w) for c, w in zip(cells, widths))
    out = [title] if title else []
    out += [line(header), "-+-".join("-" * w for w in widths)]
    out += [line(r) for r in rows]
    return "\n".join(out)


def write_json(doc, path) -> None:
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
