"""Unsupervised per-graph training of the encoder on the modularity loss."""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import encoder as enc
from .encoder import EncoderConfig, ModelParams
from .graph import Graph
from .objective import LossConfig, loss_and_grad
from .spectral import SpectralEmbedding


@dataclass(frozen=True)
class TrainConfig:
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    loss: LossConfig = field(default_factory=LossConfig)
    learning_rate: float = 1e-3
    max_steps: int = 300
    patience: int = 30
    min_improvement: float = 1e-5
    restarts: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0 or self.max_steps < 1 or self.patience < 1 or self.restarts < 1:
            raise ValueError("learning_rate, max_steps, patience and restarts must be positive")
        if self.encoder.clusters != self.loss.clusters:
            raise ValueError("encoder and loss disagree on the number of clusters")


@dataclass
class TrainHistory:
    losses: list[float] = field(default_factory=list)
    best_step: int = -1
    restart: int = -1
    duration: float = 0.0
    restart_losses: list[list[float]] = field(default_factory=list)

    @property
    def best_loss(self) -> float:
        return self.losses[self.best_step]

    def to_dict(self) -> dict:
        return asdict(self)


class TrainingDiverged(RuntimeError):
    def __init__(self, message, history: TrainHistory):
        super().__init__(message)
        self.history = history


@dataclass
class AdamState:
    m: dict
    v: dict
    t: int = 0

    @classmethod
    def zeros_like(cls, params: ModelParams) -> "AdamState":
        return cls({k: np.zeros_like(p) for k, p in params.items()},
                   {k: np.zeros_like(p) for k, p in params.items()})


def adam_step(params: ModelParams, grads: ModelParams, state: AdamState,
              lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
    """One bias-corrected Adam update; returns new ``(params, state)``.

    Raises ``FloatingPointError`` and leaves the inputs untouched if any gradient
    is non-finite.
    """
    for k, gk in grads.items():
        if not np.all(np.isfinite(gk)):
            raise FloatingPointError(f"non-finite gradient for {k}")
    t = state.t + 1
    m, v, new = {}, {}, {}
    for k, p in params.items():
        gk = grads[k]
        m[k] = beta1 * state.m[k] + (1 - beta1) * gk
        v[k] = beta2 * state.v[k] + (1 - beta2) * gk * gk
        mhat = m[k] / (1 - beta1**t)
        vhat = v[k] / (1 - beta2**t)
        new[k] = p - lr * mhat / (np.sqrt(vhat) + eps)
    return new, AdamState(m, v, t)


def hard_labels(U) -> np.ndarray:
    """Row-wise argmax, lowest cluster index on ties."""
    return np.asarray(U).argmax(1)


def _run_once(g, X0, params, cfg: TrainConfig):
    state = AdamState.zeros_like(params)
    losses = []
    best = (np.inf, None, -1)
    stale = 0
    for step in range(cfg.max_steps):
        U, cache = enc.forward(g, X0, params, cfg.encoder)
        value, dU = loss_and_grad(g, U, cfg.loss)
        if not np.isfinite(value):
            raise FloatingPointError("non-finite loss")
        losses.append(value)
        if value < best[0] - cfg.min_improvement:
            stale = 0
        else:
            stale += 1
        if value < best[0]:
            best = (value, U, step)
        if stale >= cfg.patience:
            break
        grads, _ = enc.backward(cache, dU)
        params, state = adam_step(params, grads, state, lr=cfg.learning_rate)
    return best, losses


def train_on_graph(g: Graph, spectral: SpectralEmbedding | None, cfg: TrainConfig):
    """Fit a fresh encoder to ``g`` ``cfg.restarts`` times and keep the lowest-loss
    soft assignment. Returns ``(U, labels, history)``."""
    if g.m == 0:
        raise ValueError("training needs a graph with at least one edge")
    t0 = time.perf_counter()
    history = TrainHistory()
    best = (np.inf, None)
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.restarts)
    for r, ss in enumerate(seeds):
        emb_seed, param_seed = ss.spawn(2)
        X0 = enc.initial_embeddings(g, cfg.encoder, spectral, seed=emb_seed)
        params = enc.init_params(cfg.encoder, X0.shape[1], seed=param_seed)
        try:
            (value, U, step), losses = _run_once(g, X0, params, cfg)
        except FloatingPointError:
            history.restart_losses.append([])
            continue
        history.restart_losses.append(losses)
        # strict comparison: ties go to the earlier restart
        if value < best[0]:
            best = (value, U)
            history.losses, history.best_step, history.restart = losses, step, r
    history.duration = time.perf_counter() - t0
    if best[1] is None:
        raise TrainingDiverged("every restart produced non-finite values", history)
    U = best[1]
    return U, hard_labels(U), history
