"""Per-graph neural encoder producing soft cluster assignments.

The network is a projection block (affine, node-wise batch norm, ReLU, skip-connected
second affine), a stack of encoder layers (neighbour attention or graph convolution)
and an affine + softmax output head. Every piece has a hand-written backward pass;
forward functions return a cache that the matching backward consumes.

Parameters live in a flat ``dict[str, ndarray]`` keyed like ``"layer0.Wq"`` so the
optimizer and finite-difference checks can treat them uniformly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
import scipy.sparse as sp

from .graph import Graph
from .spectral import SpectralEmbedding

ModelParams = dict[str, np.ndarray]

BN_EPS = 1e-8


@dataclass(frozen=True)
class EncoderConfig:
    layers: int = 2
    heads: int = 3
    hidden: int = 48
    clusters: int = 5
    encoder_kind: Literal["attention", "gcn"] = "attention"
    init_kind: Literal["bethe-hessian", "random"] = "bethe-hessian"

    def __post_init__(self):
        if self.layers < 0 or self.heads < 1 or self.hidden < 1 or self.clusters < 1:
            raise ValueError("layers >= 0 and heads, hidden, clusters >= 1 required")
        if self.hidden % self.heads:
            raise ValueError(f"hidden={self.hidden} is not divisible by heads={self.heads}")
        if self.encoder_kind not in ("attention", "gcn"):
            raise ValueError(f"unknown encoder_kind {self.encoder_kind!r}")
        if self.init_kind not in ("bethe-hessian", "random"):
            raise ValueError(f"unknown init_kind {self.init_kind!r}")

    @property
    def head_dim(self) -> int:
        return self.hidden // self.heads


def init_params(cfg: EncoderConfig, input_dim: int, seed) -> ModelParams:
    """Weights ~ N(0, 1/fan_in), biases and shifts 0, normalization scales 1."""
    rng = np.random.default_rng(seed)
    H, C = cfg.hidden, cfg.clusters

    def w(fan_in, fan_out):
        return rng.standard_normal((fan_in, fan_out)) / np.sqrt(fan_in)

    p = {
        "proj.W1": w(input_dim, H),
        "proj.b1": np.zeros(H),
        "proj.gamma": np.ones(H),
        "proj.beta": np.zeros(H),
        "proj.W2": w(H, H),
        "proj.b2": np.zeros(H),
    }
    for i in range(cfg.layers):
        pre = f"layer{i}."
        if cfg.encoder_kind == "attention":
            for name in ("Wq", "Wk", "Wv", "Wo", "Wf1", "Wf2"):
                p[pre + name] = w(H, H)
            for name in ("bo", "bf1", "bf2", "beta1", "beta2"):
                p[pre + name] = np.zeros(H)
            p[pre + "gamma1"] = np.ones(H)
            p[pre + "gamma2"] = np.ones(H)
        else:
            p[pre + "W"] = w(H, H)
            p[pre + "b"] = np.zeros(H)
    p["head.W"] = w(H, C)
    p["head.b"] = np.zeros(C)
    return p


def initial_embeddings(
    g: Graph, cfg: EncoderConfig, spectral: SpectralEmbedding | None = None, seed=0
) -> np.ndarray:
    if cfg.init_kind == "bethe-hessian":
        if spectral is None:
            raise ValueError("bethe-hessian init needs a SpectralEmbedding")
        if spectral.vectors.shape[0] != g.n:
            raise ValueError("spectral embedding does not match the graph")
        return spectral.vectors
    d = spectral.vectors.shape[1] if spectral is not None else cfg.clusters
    return np.random.default_rng(seed).standard_normal((g.n, d))


# ---- building blocks ------------------------------------------------------


def _bn_forward(h, gamma, beta):
    mu = h.mean(0)
    inv_std = 1.0 / np.sqrt(h.var(0) + BN_EPS)
    xhat = (h - mu) * inv_std
    return gamma * xhat + beta, (xhat, inv_std)


def _bn_backward(dy, cache, gamma):
    xhat, inv_std = cache
    dgamma = (dy * xhat).sum(0)
    dbeta = dy.sum(0)
    dx = dy * gamma
    dh = inv_std * (dx - dx.mean(0) - xhat * (dx * xhat).mean(0))
    return dh, dgamma, dbeta


def _softmax_rows(z):
    z = z - z.max(1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(1, keepdims=True)


def _check_finite(x, where):
    if not np.all(np.isfinite(x)):
        raise FloatingPointError(f"non-finite activation in {where}")


# ---- attention layer ------------------------------------------------------


def _csr(data, indices, indptr, n):
    return sp.csr_matrix((data, indices, indptr), shape=(n, n))


def attention_layer_forward(g: Graph, X, p, heads: int):
    """Multi-head attention over each node's closed neighbourhood, then a ReLU
    feed-forward sublayer; both sublayers are residual and batch-normalized."""
    N, H = X.shape
    dh = H // heads
    indptr, dst, _ = g.closed_neighborhoods
    starts = indptr[:-1]
    src = np.repeat(np.arange(N), np.diff(indptr))

    Q = (X @ p["Wq"]).reshape(N, heads, dh)
    K = (X @ p["Wk"]).reshape(N, heads, dh)
    V = (X @ p["Wv"]).reshape(N, heads, dh)
    scale = 1.0 / np.sqrt(dh)
    scores = np.einsum("ehk,ehk->eh", Q[src], K[dst]) * scale
    scores = scores - np.maximum.reduceat(scores, starts, axis=0)[src]
    ex = np.exp(scores)
    alpha = ex / np.add.reduceat(ex, starts, axis=0)[src]
    O = np.concatenate(
        [_csr(alpha[:, h], dst, indptr, N) @ V[:, h] for h in range(heads)], axis=1
    )

    y1 = X + O @ p["Wo"] + p["bo"]
    z1, bn1 = _bn_forward(y1, p["gamma1"], p["beta1"])
    f1 = z1 @ p["Wf1"] + p["bf1"]
    r1 = np.maximum(f1, 0.0)
    y2 = z1 + r1 @ p["Wf2"] + p["bf2"]
    out, bn2 = _bn_forward(y2, p["gamma2"], p["beta2"])
    cache = dict(
        X=X, Q=Q, K=K, V=V, alpha=alpha, O=O, z1=z1, bn1=bn1,
        f1=f1, r1=r1, bn2=bn2, p=p, heads=heads, src=src, scale=scale,
        graph_csr=g.closed_neighborhoods,
    )
    return out, cache


def attention_layer_backward(dout, cache):
    p, X, heads = cache["p"], cache["X"], cache["heads"]
    Q, K, V, alpha = cache["Q"], cache["K"], cache["V"], cache["alpha"]
    src, scale = cache["src"], cache["scale"]
    N, H = X.shape
    dh = H // heads
    g_ = {}

    dy2, g_["gamma2"], g_["beta2"] = _bn_backward(dout, cache["bn2"], p["gamma2"])
    g_["Wf2"] = cache["r1"].T @ dy2
    g_["bf2"] = dy2.sum(0)
    df1 = (dy2 @ p["Wf2"].T) * (cache["f1"] > 0)
    g_["Wf1"] = cache["z1"].T @ df1
    g_["bf1"] = df1.sum(0)
    dz1 = dy2 + df1 @ p["Wf1"].T
    dy1, g_["gamma1"], g_["beta1"] = _bn_backward(dz1, cache["bn1"], p["gamma1"])
    g_["Wo"] = cache["O"].T @ dy1
    g_["bo"] = dy1.sum(0)
    dO = (dy1 @ p["Wo"].T).reshape(N, heads, dh)

    indptr, dst, rev = cache["graph_csr"]
    starts = indptr[:-1]
    dalpha = np.einsum("ehk,ehk->eh", dO[src], V[dst])
    dscore = alpha * (dalpha - np.add.reduceat(alpha * dalpha, starts, axis=0)[src])
    dscore *= scale
    # transposed products are plain products with the mirrored entries' values
    dQ, dK, dV = [], [], []
    for h in range(heads):
        dQ.append(_csr(dscore[:, h], dst, indptr, N) @ K[:, h])
        dK.append(_csr(dscore[rev, h], dst, indptr, N) @ Q[:, h])
        dV.append(_csr(alpha[rev, h], dst, indptr, N) @ dO[:, h])
    dQ, dK, dV = (np.concatenate(t, axis=1) for t in (dQ, dK, dV))

    g_["Wq"] = X.T @ dQ
    g_["Wk"] = X.T @ dK
    g_["Wv"] = X.T @ dV
    dX = dy1 + dQ @ p["Wq"].T + dK @ p["Wk"].T + dV @ p["Wv"].T
    return g_, dX


# ---- graph convolution layer ----------------------------------------------


def gcn_layer_forward(g: Graph, X, p):
    """``relu(A_hat X W + b) + X`` with the symmetric-normalized ``A_hat``."""
    AX = g.gcn_adjacency @ X
    pre = AX @ p["W"] + p["b"]
    out = np.maximum(pre, 0.0)
    if out.shape == X.shape:
        out = out + X
    return out, dict(AX=AX, pre=pre, p=p, A=g.gcn_adjacency, residual=out.shape == X.shape)


def gcn_layer_backward(dout, cache):
    dpre = dout * (cache["pre"] > 0)
    grads = {"W": cache["AX"].T @ dpre, "b": dpre.sum(0)}
    # A_hat is symmetric
    dX = cache["A"] @ (dpre @ cache["p"]["W"].T)
    if cache["residual"]:
        dX = dX + dout
    return grads, dX


# ---- full model -----------------------------------------------------------


def _sub(params, prefix):
    return {k[len(prefix):]: v for k, v in params.items() if k.startswith(prefix)}


@dataclass
class ForwardCache:
    U: np.ndarray
    cfg: EncoderConfig
    params: ModelParams
    X0: np.ndarray
    proj: tuple
    layers: list
    head_in: np.ndarray


def forward(g: Graph, X0, params: ModelParams, cfg: EncoderConfig):
    """Soft assignment ``U`` (N x C, rows on the simplex) and the backward cache."""
    X0 = np.asarray(X0, dtype=float)
    if X0.ndim != 2 or X0.shape[0] != g.n:
        raise ValueError(f"X0 must have {g.n} rows, got shape {X0.shape}")

    h1 = X0 @ params["proj.W1"] + params["proj.b1"]
    z, bn = _bn_forward(h1, params["proj.gamma"], params["proj.beta"])
    a = np.maximum(z, 0.0)
    X = a + a @ params["proj.W2"] + params["proj.b2"]
    _check_finite(X, "projection")
    proj = (z, bn, a)

    layers = []
    for i in range(cfg.layers):
        lp = _sub(params, f"layer{i}.")
        if cfg.encoder_kind == "attention":
            X, c = attention_layer_forward(g, X, lp, cfg.heads)
        else:
            X, c = gcn_layer_forward(g, X, lp)
        _check_finite(X, f"layer{i}")
        layers.append(c)

    logits = X @ params["head.W"] + params["head.b"]
    _check_finite(logits, "head")
    U = _softmax_rows(logits)
    return U, ForwardCache(U=U, cfg=cfg, params=params, X0=X0, proj=proj, layers=layers, head_in=X)


def backward(cache: ForwardCache, dU) -> tuple[ModelParams, np.ndarray]:
    """Gradients of a scalar loss w.r.t. every parameter and the input embeddings,
    given ``dU`` = dLoss/dU."""
    dU = np.asarray(dU, dtype=float)
    if dU.shape != cache.U.shape:
        raise ValueError(f"dU has shape {dU.shape}, cache holds U of shape {cache.U.shape}")
    p, cfg, U = cache.params, cache.cfg, cache.U
    grads: ModelParams = {}

    dlogits = U * (dU - (U * dU).sum(1, keepdims=True))
    grads["head.W"] = cache.head_in.T @ dlogits
    grads["head.b"] = dlogits.sum(0)
    dX = dlogits @ p["head.W"].T

    for i in reversed(range(cfg.layers)):
        if cfg.encoder_kind == "attention":
            lg, dX = attention_layer_backward(dX, cache.layers[i])
        else:
            lg, dX = gcn_layer_backward(dX, cache.layers[i])
        grads.update({f"layer{i}.{k}": v for k, v in lg.items()})

    z, bn, a = cache.proj
    grads["proj.W2"] = a.T @ dX
    grads["proj.b2"] = dX.sum(0)
    da = dX + dX @ p["proj.W2"].T
    dz = da * (z > 0)
    dh1, grads["proj.gamma"], grads["proj.beta"] = _bn_backward(dz, bn, p["proj.gamma"])
    grads["proj.W1"] = cache.X0.T @ dh1
    grads["proj.b1"] = dh1.sum(0)
    dX0 = dh1 @ p["proj.W1"].T
    return grads, dX0
