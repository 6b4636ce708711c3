"""Label-permutation invariant clustering scores: overlap, NMI, hard modularity."""

from __future__ import annotations

from itertools import permutations

import numpy as np
from scipy.optimize import linear_sum_assignment

from .graph import Graph

EXHAUSTIVE_MAX_CLASSES = 8


def _check_pair(y, yhat):
    y = np.asarray(y, dtype=np.int64)
    yhat = np.asarray(yhat, dtype=np.int64)
    if y.shape != yhat.shape or y.ndim != 1:
        raise ValueError(f"label vectors differ in shape: {y.shape} vs {yhat.shape}")
    return y, yhat


def confusion_matrix(y, yhat, c: int | None = None) -> np.ndarray:
    """``counts[i, j]`` = number of nodes with ``y == i`` and ``yhat == j``."""
    y, yhat = _check_pair(y, yhat)
    if c is None:
        c = int(max(y.max(initial=-1), yhat.max(initial=-1))) + 1
    if y.size and (min(y.min(), yhat.min()) < 0 or max(y.max(), yhat.max()) >= c):
        raise ValueError(f"labels must lie in [0, {c})")
    counts = np.zeros((c, c), dtype=np.int64)
    np.add.at(counts, (y, yhat), 1)
    return counts


def _best_matching(counts: np.ndarray) -> int:
    c = counts.shape[0]
    if c <= EXHAUSTIVE_MAX_CLASSES:
        rows = np.arange(c)
        return max(int(counts[rows, list(p)].sum()) for p in permutations(range(c)))
    r, col = linear_sum_assignment(counts, maximize=True)
    return int(counts[r, col].sum())


def overlap(y, yhat, c: int) -> float:
    """Best-permutation agreement, rescaled so chance level is 0 and perfect is 1."""
    counts = confusion_matrix(y, yhat, c)
    n = counts.sum()
    if c == 1:
        return 1.0
    matched = _best_matching(counts)
    return (matched / n - 1.0 / c) / (1.0 - 1.0 / c)


def _entropy(counts: np.ndarray, n: int) -> float:
    p = counts[counts > 0] / n
    return float(-(p * np.log(p)).sum())


def nmi(y, yhat) -> float:
    """Mutual information over the arithmetic mean of the two label entropies."""
    y, yhat = _check_pair(y, yhat)
    n = y.size
    if n == 0:
        raise ValueError("nmi needs at least one node")
    _, yi = np.unique(y, return_inverse=True)
    _, yj = np.unique(yhat, return_inverse=True)
    counts = np.zeros((yi.max() + 1, yj.max() + 1), dtype=np.int64)
    np.add.at(counts, (yi, yj), 1)
    hy = _entropy(counts.sum(1), n)
    hyhat = _entropy(counts.sum(0), n)
    if hy == 0 and hyhat == 0:
        return 1.0
    if hy == 0 or hyhat == 0:
        return 0.0
    row = counts.sum(1, keepdims=True)
    col = counts.sum(0, keepdims=True)
    nz = counts > 0
    mi = (counts[nz] / n * np.log(n * counts[nz] / (row * col)[nz])).sum()
    return float(mi / (0.5 * (hy + hyhat)))


def hard_modularity(g: Graph, y) -> float:
    """Newman modularity of a hard partition, summed community by community."""
    y = np.asarray(y, dtype=np.int64)
    if y.shape != (g.n,):
        raise ValueError(f"need one label per node ({g.n}), got shape {y.shape}")
    if g.m == 0:
        raise ValueError("modularity is undefined on a graph without edges")
    two_m = g.a1_norm
    _, comm = np.unique(y, return_inverse=True)
    u, v = g.edges[:, 0], g.edges[:, 1]
    same = comm[u] == comm[v]
    # each undirected internal edge contributes A_uv + A_vu = 2
    internal = np.bincount(comm[u[same]], minlength=comm.max() + 1) * 2.0
    vol = np.bincount(comm, weights=g.degree.astype(float), minlength=comm.max() + 1)
    return float(((internal - vol**2 / two_m) / two_m).sum())
