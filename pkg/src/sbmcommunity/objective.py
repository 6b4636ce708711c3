"""Soft modularity, cluster-balance penalty and the combined training loss."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .graph import Graph, modularity_matrix_apply

Mode = Literal["associative", "disassociative"]
MODES = ("associative", "disassociative")


@dataclass(frozen=True)
class LossConfig:
    mode: Mode = "associative"
    lam: float = 0.5
    clusters: int = 5
    reg_mode: Literal["normalized", "literal"] = "normalized"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.lam < 0:
            raise ValueError("lam must be non-negative")
        if self.reg_mode not in ("normalized", "literal"):
            raise ValueError(f"unknown reg_mode {self.reg_mode!r}")


def _check_soft(g: Graph, U) -> np.ndarray:
    U = np.asarray(U, dtype=float)
    if U.ndim != 2 or U.shape[0] != g.n:
        raise ValueError(f"U must be {g.n} x C, got {U.shape}")
    if g.a1_norm == 0:
        raise ValueError("soft modularity is undefined on a graph without edges")
    dev = np.abs(U.sum(1) - 1).max(initial=0)
    if dev > 1e-4:
        raise ValueError(f"rows of U must sum to 1 (max deviation {dev:.2e})")
    return U


def soft_modularity(g: Graph, U) -> float:
    """``trace(U^T B U) / |A|_1``; positive for assortative structure."""
    U = _check_soft(g, U)
    return float(np.sum(U * modularity_matrix_apply(g, U)) / g.a1_norm)


def cluster_mass(U, reg_mode="normalized") -> np.ndarray:
    mass = np.asarray(U).sum(0)
    return mass / len(U) if reg_mode == "normalized" else mass


def balance_regularizer(U, C: int | None = None, reg_mode="normalized") -> float:
    """Squared deviation of cluster masses from ``1/C``.

    The default divides each column mass by N so a balanced assignment scores 0;
    ``reg_mode="literal"`` compares raw column sums with ``1/C``.
    """
    U = np.asarray(U, dtype=float)
    C = U.shape[1] if C is None else C
    if U.shape[1] != C:
        raise ValueError(f"U has {U.shape[1]} columns, expected {C}")
    return float(((cluster_mass(U, reg_mode) - 1.0 / C) ** 2).sum())


def _sign(mode):
    return -1.0 if mode == "associative" else 1.0


def loss(g: Graph, U, cfg: LossConfig) -> float:
    """``-Q + lam R`` (associative) or ``Q + lam R`` (disassociative)."""
    q = soft_modularity(g, U)
    return _sign(cfg.mode) * q + cfg.lam * balance_regularizer(U, cfg.clusters, cfg.reg_mode)


def loss_grad_U(g: Graph, U, cfg: LossConfig) -> np.ndarray:
    U = _check_soft(g, U)
    dQ = 2.0 * modularity_matrix_apply(g, U) / g.a1_norm
    mass = cluster_mass(U, cfg.reg_mode)
    scale = 1.0 / len(U) if cfg.reg_mode == "normalized" else 1.0
    dR = np.broadcast_to(2.0 * (mass - 1.0 / cfg.clusters) * scale, U.shape)
    return _sign(cfg.mode) * dQ + cfg.lam * dR


def loss_and_grad(g: Graph, U, cfg: LossConfig) -> tuple[float, np.ndarray]:
    """Loss value and its gradient with a single modularity-operator application."""
    U = _check_soft(g, U)
    BU = modularity_matrix_apply(g, U)
    q = float(np.sum(U * BU) / g.a1_norm)
    mass = cluster_mass(U, cfg.reg_mode)
    dev = mass - 1.0 / cfg.clusters
    scale = 1.0 / len(U) if cfg.reg_mode == "normalized" else 1.0
    s = _sign(cfg.mode)
    value = s * q + cfg.lam * float((dev**2).sum())
    grad = s * 2.0 * BU / g.a1_norm + cfg.lam * np.broadcast_to(2.0 * dev * scale, U.shape)
    return value, grad
