"""Graph substrate, SSBM sampling and modularity-matrix primitives."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.sparse as sp


@dataclass(frozen=True)
class SsbmParams:
    """Symmetric SBM: ``k`` balanced blocks, link probabilities ``a/n`` inside, ``b/n`` across."""

    n: int
    k: int
    a: float
    b: float

    def __post_init__(self):
        if not (self.n >= self.k >= 1):
            raise ValueError(f"need n >= k >= 1, got n={self.n}, k={self.k}")
        for name in ("a", "b"):
            v = getattr(self, name)
            if not (0 <= v <= self.n):
                raise ValueError(f"{name}/n = {v / self.n:g} is not a probability")

    @property
    def p_in(self) -> float:
        return self.a / self.n

    @property
    def p_out(self) -> float:
        return self.b / self.n


PRESETS = {
    "assoc": SsbmParams(n=400, k=5, a=21, b=2),
    "disassoc": SsbmParams(n=400, k=5, a=0, b=18),
}


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable undirected simple graph.

    Build with :meth:`from_edges`; ``edges`` holds unique ``(u, v)`` pairs with ``u < v``
    in lexicographic order.
    """

    n: int
    edges: np.ndarray
    indptr: np.ndarray = field(repr=False)
    indices: np.ndarray = field(repr=False)

    @classmethod
    def from_edges(cls, n: int, edges) -> "Graph":
        e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if e.size and (e.min() < 0 or e.max() >= n):
            raise ValueError("edge endpoint out of range")
        if np.any(e[:, 0] == e[:, 1]):
            raise ValueError("self-loops are not allowed")
        e = np.sort(e, axis=1)
        e = np.unique(e, axis=0)
        src = np.concatenate([e[:, 0], e[:, 1]])
        dst = np.concatenate([e[:, 1], e[:, 0]])
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
        for arr in (e, indptr, dst):
            arr.setflags(write=False)
        return cls(n=int(n), edges=e, indptr=indptr, indices=dst)

    @classmethod
    def from_adjacency(cls, adj) -> "Graph":
        """From a symmetric 0/1 (dense or scipy sparse) adjacency matrix."""
        m = sp.coo_matrix(adj)
        if m.shape[0] != m.shape[1]:
            raise ValueError(f"adjacency must be square, got {m.shape}")
        keep = (m.row < m.col) & (m.data != 0)
        return cls.from_edges(m.shape[0], np.column_stack([m.row[keep], m.col[keep]]))

    @property
    def m(self) -> int:
        return len(self.edges)

    def neighbors(self, u: int) -> np.ndarray:
        return self.indices[self.indptr[u]:self.indptr[u + 1]]

    @cached_property
    def degree(self) -> np.ndarray:
        d = np.diff(self.indptr)
        d.setflags(write=False)
        return d

    @property
    def a1_norm(self) -> float:
        """Entrywise 1-norm of A, i.e. twice the edge count."""
        return float(2 * self.m)

    @cached_property
    def adjacency(self) -> sp.csr_matrix:
        data = np.ones(len(self.indices))
        return sp.csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))

    @cached_property
    def closed_neighborhoods(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """CSR ``(indptr, indices, reverse)`` of ``A + I``.

        ``reverse[e]`` is the position of the mirrored entry ``(v, u)`` of entry
        ``e = (u, v)``; every row is non-empty because of the diagonal.
        """
        m = (self.adjacency + sp.identity(self.n, format="csr")).tocsr()
        m.sort_indices()
        src = np.repeat(np.arange(self.n), np.diff(m.indptr))
        keys = src * self.n + m.indices
        reverse = np.searchsorted(keys, m.indices * self.n + src)
        return m.indptr.astype(np.int64), m.indices.astype(np.int64), reverse

    @cached_property
    def gcn_adjacency(self) -> sp.csr_matrix:
        """``D~^{-1/2} (A + I) D~^{-1/2}`` with ``D~ = D + I``."""
        s = 1.0 / np.sqrt(self.degree + 1.0)
        m = self.adjacency + sp.identity(self.n, format="csr")
        return sp.csr_matrix(sp.diags(s) @ m @ sp.diags(s))

    def permute(self, perm) -> "Graph":
        """Relabel node ``u`` as ``perm[u]``."""
        perm = np.asarray(perm)
        return Graph.from_edges(self.n, perm[self.edges])

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.edges, other.edges)

    __hash__ = None


def ssbm_generate(params: SsbmParams, seed) -> tuple[Graph, np.ndarray]:
    """Sample an SSBM graph and its planted labels.

    Node ``i`` starts in block ``i mod k`` and the labels are then shuffled, so block
    sizes differ by at most one. Each unordered pair gets an independent Bernoulli
    draw, vectorised over the upper triangle. ``seed`` is anything accepted by
    :func:`numpy.random.default_rng`.
    """
    rng = np.random.default_rng(seed)
    n, k = params.n, params.k
    labels = rng.permutation(np.arange(n) % k)
    iu, ju = np.triu_indices(n, k=1)
    prob = np.where(labels[iu] == labels[ju], params.p_in, params.p_out)
    hit = rng.random(len(iu)) < prob
    g = Graph.from_edges(n, np.column_stack([iu[hit], ju[hit]]))
    return g, labels


def snr(params: SsbmParams | None = None, *, a=None, b=None, k=None) -> float:
    """Signal-to-noise ratio ``(a-b)^2 / (k (a + (k-1) b))``."""
    if params is not None:
        a, b, k = params.a, params.b, params.k
    denom = k * (a + (k - 1) * b)
    if denom == 0:
        raise ValueError("SNR undefined for a = b = 0")
    return (a - b) ** 2 / denom


def modularity_matrix_apply(g: Graph, X) -> np.ndarray:
    """Compute ``(A - d d^T / |A|_1) @ X`` without forming the dense matrix."""
    X = np.asarray(X, dtype=float)
    vec = X.ndim == 1
    if vec:
        X = X[:, None]
    if X.shape[0] != g.n:
        raise ValueError(f"expected {g.n} rows, got {X.shape[0]}")
    d = g.degree.astype(float)
    out = g.adjacency @ X
    if g.a1_norm > 0:
        out = out - np.outer(d, d @ X) / g.a1_norm
    return out[:, 0] if vec else out


# ---- text formats ---------------------------------------------------------


def write_edgelist(g: Graph, path) -> None:
    path = Path(path)
    with path.open("w") as fh:
        fh.write(f"{g.n} {g.m}\n")
        for u, v in g.edges:
            fh.write(f"{u} {v}\n")


def read_edgelist(path) -> Graph:
    path = Path(path)
    with path.open() as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ValueError(f"{path}:1: empty file")
    try:
        n, m = (int(t) for t in lines[0].split())
    except ValueError:
        raise ValueError(f"{path}:1: expected header 'n m', got {lines[0]!r}") from None
    edges = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split()
        try:
            u, v = int(parts[0]), int(parts[1])
            if len(parts) != 2:
                raise ValueError
        except (ValueError, IndexError):
            raise ValueError(f"{path}:{lineno}: expected 'u v', got {line!r}") from None
        if not (0 <= u < v < n):
            raise ValueError(f"{path}:{lineno}: need 0 <= u < v < {n}, got {u} {v}")
        edges.append((u, v))
    if len(edges) != m:
        raise ValueError(f"{path}: header declares {m} edges, found {len(edges)}")
    return Graph.from_edges(n, edges)


def write_labels(labels, path) -> None:
    Path(path).write_text("".join(f"{int(c)}\n" for c in labels))


def read_labels(path) -> np.ndarray:
    path = Path(path)
    out = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            out.append(int(line))
        except ValueError:
            raise ValueError(f"{path}:{lineno}: expected an integer label, got {line!r}") from None
    return np.asarray(out, dtype=np.int64)
