"""Unsupervised community detection on symmetric stochastic block model graphs."""

from .encoder import EncoderConfig
from .estimators import BetheHessianClustering, LouvainClustering, ModularityEncoderClustering
from .graph import PRESETS, Graph, SsbmParams, modularity_matrix_apply, snr, ssbm_generate
from .metrics import hard_modularity, nmi, overlap
from .objective import LossConfig, balance_regularizer, loss, soft_modularity
from .trainer import TrainConfig, train_on_graph

__all__ = [
    "PRESETS",
    "BetheHessianClustering",
    "EncoderConfig",
    "Graph",
    "LossConfig",
    "LouvainClustering",
    "ModularityEncoderClustering",
    "SsbmParams",
    "TrainConfig",
    "balance_regularizer",
    "hard_modularity",
    "loss",
    "modularity_matrix_apply",
    "nmi",
    "overlap",
    "snr",
    "soft_modularity",
    "ssbm_generate",
    "train_on_graph",
]
