"""Louvain greedy modularity maximization."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .graph import Graph

GAIN_TOL = 1e-7


@dataclass(frozen=True)
class WeightedAggGraph:
    """Supernode graph; ``weights[i, i]`` holds the (doubly counted) internal mass."""

    weights: sp.csr_matrix

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    @property
    def total(self) -> float:
        return float(self.weights.sum())

    @property
    def strength(self) -> np.ndarray:
        return np.asarray(self.weights.sum(1)).ravel()

    def aggregate(self, comm) -> "WeightedAggGraph":
        comm = np.asarray(comm)
        P = sp.csr_matrix((np.ones(self.n), (np.arange(self.n), comm)), shape=(self.n, comm.max() + 1))
        return WeightedAggGraph(sp.csr_matrix(P.T @ self.weights @ P))

    def modularity(self, comm) -> float:
        comm = np.asarray(comm)
        two_m = self.total
        coo = self.weights.tocoo()
        internal = np.bincount(comm[coo.row], weights=coo.data * (comm[coo.row] == comm[coo.col]),
                               minlength=comm.max() + 1)
        tot = np.bincount(comm, weights=self.strength, minlength=comm.max() + 1)
        return float(((internal - tot**2 / two_m) / two_m).sum())


def _move_nodes(agg: WeightedAggGraph, rng, q):
    """Local moving phase. Returns ``(communities, modularity, moved_any)``."""
    W = agg.weights
    n, two_m = agg.n, agg.total
    k = agg.strength
    comm = np.arange(n)
    tot = k.copy()
    order = rng.permutation(n)
    moved_any = False
    while True:
        moved = False
        for i in order:
            row = slice(W.indptr[i], W.indptr[i + 1])
            nbrs, w = W.indices[row], W.data[row]
            off = nbrs != i
            links = {}
            for c, wt in zip(comm[nbrs[off]], w[off]):
                links[c] = links.get(c, 0.0) + wt
            own = comm[i]
            tot[own] -= k[i]
            # gain (x 2m / 2) of inserting the isolated node i into community c
            own_gain = links.get(own, 0.0) - tot[own] * k[i] / two_m
            best, best_gain = own, own_gain
            for c in sorted(links):
                gain = links[c] - tot[c] * k[i] / two_m
                if gain > best_gain:
                    best, best_gain = c, gain
            delta = 2.0 * (best_gain - own_gain) / two_m
            if best != own and delta > GAIN_TOL:
                comm[i] = best
                new_q = q + delta
                assert new_q >= q, "modularity decreased on an accepted move"
                q = new_q
                moved = moved_any = True
            tot[comm[i]] += k[i]
        if not moved:
            break
    _, comm = np.unique(comm, return_inverse=True)
    return comm, q, moved_any


def louvain(g: Graph, seed=0) -> tuple[np.ndarray, float]:
    """Multi-level Louvain; the number of communities is not constrained.

    Returns ``(labels, modularity)``.
    """
    if g.m == 0:
        raise ValueError("Louvain needs at least one edge")
    rng = np.random.default_rng(seed)
    agg = WeightedAggGraph(g.adjacency.astype(float))
    total = agg.total
    labels = np.arange(g.n)
    q = agg.modularity(np.arange(agg.n))
    while True:
        comm, q_new, moved = _move_nodes(agg, rng, q)
        if not moved:
            break
        assert q_new >= q
        q = q_new
        labels = comm[labels]
        agg = agg.aggregate(comm)
        assert abs(agg.total - total) <= 1e-9 * total, "aggregation lost edge weight"
    _, labels = np.unique(labels, return_inverse=True)
    return labels, q
