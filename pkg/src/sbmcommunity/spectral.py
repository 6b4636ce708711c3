"""Bethe Hessian spectral clustering and the embeddings it produces."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np

from .graph import Graph

RMode = Literal["standard", "literal"]

DENSE_MAX_DIM = 2000


class ConvergenceWarning(UserWarning):
    pass


class EigensolverError(RuntimeError):
    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


@dataclass(frozen=True)
class SpectralEmbedding:
    vectors: np.ndarray
    values: np.ndarray
    r: float
    r_converged: bool = True


# ---- non-backtracking radius ----------------------------------------------


def moment_radius(g: Graph) -> float:
    """``sum d^2 / sum d - 1``, the mean excess degree."""
    d = g.degree.astype(float)
    return float((d**2).sum() / d.sum() - 1.0)


def nonbacktracking_radius(g: Graph, max_iter=1000, tol=1e-9) -> tuple[float, bool]:
    """Spectral radius of the non-backtracking operator by power iteration.

    Iterates the 2N x 2N companion map ``(x, y) -> (A x + (I - D) y, x)``, whose
    non-trivial spectrum coincides with the edge operator's. The growth is measured
    over two steps so a ``-rho`` eigenvalue of equal modulus does not stall it.
    Returns ``(rho, converged)``; on failure ``rho`` is the moment estimate.
    """
    if g.m == 0:
        raise ValueError("radius estimate needs at least one edge")
    A = g.adjacency
    one_minus_d = 1.0 - g.degree.astype(float)
    x = g.degree.astype(float) + 1.0
    y = np.ones(g.n)
    nrm = np.sqrt(x @ x + y @ y)
    x, y = x / nrm, y / nrm
    prev = moment_radius(g)
    for _ in range(max_iter):
        x1, y1 = A @ x + one_minus_d * y, x
        x2, y2 = A @ x1 + one_minus_d * y1, x1
        growth = np.sqrt(x2 @ x2 + y2 @ y2)
        if growth == 0:
            break
        rho = float(np.sqrt(growth))
        x, y = x2 / growth, y2 / growth
        if abs(rho - prev) <= tol * max(1.0, rho):
            return rho, True
        prev = rho
    warnings.warn(
        "non-backtracking power iteration did not converge; using moment estimate",
        ConvergenceWarning,
        stacklevel=2,
    )
    return moment_radius(g), False


def estimate_r(
    g: Graph, mode="associative", r_mode: RMode = "standard", **kwargs
) -> tuple[float, bool]:
    """Bethe Hessian parameter ``+-sqrt(rho)`` (``+-rho`` with ``r_mode="literal"``).

    The sign is negative for disassociative graphs. Returns ``(r, converged)``.
    """
    if r_mode not in ("standard", "literal"):
        raise ValueError(f"unknown r_mode {r_mode!r}")
    rho, ok = nonbacktracking_radius(g, **kwargs)
    mag = np.sqrt(rho) if r_mode == "standard" else rho
    sign = 1.0 if mode == "associative" else -1.0
    return sign * float(mag), ok


def bethe_hessian_apply(g: Graph, r: float, x) -> np.ndarray:
    """``((r^2 - 1) I - r A + D) @ x``."""
    x = np.asarray(x, dtype=float)
    if x.shape[0] != g.n:
        raise ValueError(f"expected {g.n} rows, got {x.shape[0]}")
    d = g.degree.astype(float)
    dx = d * x if x.ndim == 1 else d[:, None] * x
    return (r * r - 1.0) * x - r * (g.adjacency @ x) + dx


# ---- symmetric eigensolver ------------------------------------------------


def _dense_from_operator(op, dim):
    M = op(np.eye(dim))
    return 0.5 * (M + M.T)


def _lanczos_smallest(op, dim, k, rng, max_basis=None):
    """Lanczos with full reorthogonalization; the basis grows until the k wanted
    Ritz pairs meet the residual bound (at ``dim`` the projection is exact)."""
    max_basis = dim if max_basis is None else min(max_basis, dim)
    m = min(dim, max(2 * k + 20, 40))
    Q = np.zeros((dim, max_basis + 1))
    q = rng.standard_normal(dim)
    Q[:, 0] = q / np.linalg.norm(q)
    alpha, beta = [], []
    j = 0
    while True:
        while j < m:
            w = op(Q[:, j])
            a = Q[:, j] @ w
            w = w - a * Q[:, j] - (beta[-1] * Q[:, j - 1] if j else 0.0)
            # two passes of classical Gram-Schmidt keep the basis orthonormal
            for _ in range(2):
                w -= Q[:, : j + 1] @ (Q[:, : j + 1].T @ w)
            b = np.linalg.norm(w)
            alpha.append(a)
            beta.append(b)
            j += 1
            if j == dim:
                break
            if b < 1e-12:
                # invariant subspace found: restart with a fresh orthogonal vector
                w = rng.standard_normal(dim)
                for _ in range(2):
                    w -= Q[:, :j] @ (Q[:, :j].T @ w)
                b = np.linalg.norm(w)
                beta[-1] = 0.0
            Q[:, j] = w / b
        T = np.diag(alpha) + np.diag(beta[: j - 1], 1) + np.diag(beta[: j - 1], -1)
        theta, S = np.linalg.eigh(T)
        vals = theta[:k]
        vecs = Q[:, :j] @ S[:, :k]
        vecs, _ = np.linalg.qr(vecs)
        # Rayleigh-Ritz on the k vectors fixes any rotation introduced by QR
        Hk = vecs.T @ op(vecs)
        vals, R = np.linalg.eigh(0.5 * (Hk + Hk.T))
        vecs = vecs @ R
        res = np.linalg.norm(op(vecs) - vecs * vals, axis=0)
        if np.all(res <= 1e-8 * np.maximum(1.0, np.abs(vals))) or j >= max_basis:
            return vals, vecs, res
        m = min(max_basis, 2 * m)


def smallest_eigenpairs(
    op: Callable[[np.ndarray], np.ndarray],
    dim: int,
    k: int,
    method: Literal["auto", "dense", "lanczos"] = "auto",
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """The ``k`` algebraically smallest eigenpairs of a symmetric linear operator.

    ``op`` maps an ``(dim,)`` vector or ``(dim, p)`` block to its image. Values come
    back ascending with orthonormal eigenvector columns. The dense path is used up
    to ``DENSE_MAX_DIM``; above that, Lanczos with full reorthogonalization.
    """
    if not (1 <= k <= dim):
        raise ValueError(f"need 1 <= k <= dim, got k={k}, dim={dim}")
    if method == "auto":
        method = "dense" if dim <= DENSE_MAX_DIM else "lanczos"
    if method == "dense":
        vals, vecs = np.linalg.eigh(_dense_from_operator(op, dim))
        vals, vecs = vals[:k], vecs[:, :k]
        res = np.linalg.norm(op(vecs) - vecs * vals, axis=0)
    elif method == "lanczos":
        vals, vecs, res = _lanczos_smallest(op, dim, k, np.random.default_rng(seed))
    else:
        raise ValueError(f"unknown method {method!r}")
    bound = 1e-8 * np.maximum(1.0, np.abs(vals))
    if not np.all(res <= bound):
        raise EigensolverError(f"eigenpairs did not converge, residuals {res}", residuals=res)
    # fix the sign of each vector (largest-magnitude entry positive) for reproducibility
    idx = np.argmax(np.abs(vecs), axis=0)
    vecs = vecs * np.sign(vecs[idx, np.arange(k)])
    return vals, vecs


# ---- k-means --------------------------------------------------------------


def _sq_dists(X, C):
    return np.maximum(
        (X**2).sum(1)[:, None] - 2.0 * X @ C.T + (C**2).sum(1)[None, :], 0.0
    )


def _kmeanspp(X, k, rng):
    n = len(X)
    centers = [X[rng.integers(n)]]
    d2 = ((X - centers[0]) ** 2).sum(1)
    for _ in range(1, k):
        total = d2.sum()
        i = rng.choice(n, p=d2 / total) if total > 0 else rng.integers(n)
        centers.append(X[i])
        d2 = np.minimum(d2, ((X - X[i]) ** 2).sum(1))
    return np.array(centers)


def _lloyd(X, centers, max_iter, tol):
    k = len(centers)
    prev = np.inf
    for _ in range(max_iter):
        D = _sq_dists(X, centers)
        labels = D.argmin(1)  # argmin takes the lowest index on ties
        # reseed empty clusters at the point farthest from its centre
        for c in range(k):
            if not np.any(labels == c):
                far = D[np.arange(len(X)), labels].argmax()
                labels[far] = c
                D[far] = np.inf
                D[far, c] = 0.0
        centers = np.array([X[labels == c].mean(0) for c in range(k)])
        inertia = ((X - centers[labels]) ** 2).sum()
        assert inertia <= prev * (1 + 1e-12) + 1e-12, "k-means objective increased"
        converged = np.isfinite(prev) and prev - inertia <= tol * prev
        prev = inertia
        if converged:
            break
    return labels, centers, inertia


def kmeans(X, k: int, seed=0, n_init=10, max_iter=100, tol=1e-6):
    """Lloyd's algorithm from k-means++ starts; best of ``n_init`` restarts.

    Returns ``(labels, centers, inertia)``.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if len(X) < k:
        raise ValueError(f"need at least k={k} points, got {len(X)}")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(n_init):
        out = _lloyd(X, _kmeanspp(X, k, rng), max_iter, tol)
        if best is None or out[2] < best[2]:
            best = out
    return best


# ---- composed baseline ----------------------------------------------------


def bethe_hessian_embedding(
    g: Graph, k: int, mode="associative", r_mode: RMode = "standard"
) -> SpectralEmbedding:
    r, ok = estimate_r(g, mode, r_mode)
    vals, vecs = smallest_eigenpairs(lambda x: bethe_hessian_apply(g, r, x), g.n, k)
    return SpectralEmbedding(vectors=vecs, values=vals, r=r, r_converged=ok)


def bethe_hessian_cluster(
    g: Graph, k: int, mode="associative", seed=0, r_mode: RMode = "standard"
) -> tuple[np.ndarray, SpectralEmbedding]:
    """Cluster the rows of the k lowest Bethe Hessian eigenvectors with k-means."""
    if g.m == 0:
        raise ValueError("Bethe Hessian clustering needs at least one edge")
    emb = bethe_hessian_embedding(g, k, mode, r_mode)
    labels, _, _ = kmeans(emb.vectors, k, seed=seed)
    return labels, emb
