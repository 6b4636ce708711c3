"""scikit-learn compatible wrappers.

Each estimator is transductive: ``fit`` takes one graph (a :class:`Graph`, a square
adjacency matrix or a networkx graph) and stores ``labels_`` for its nodes.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_is_fitted

from .encoder import EncoderConfig
from .graph import Graph
from .louvain import louvain
from .objective import LossConfig, soft_modularity
from .spectral import bethe_hessian_cluster, bethe_hessian_embedding
from .trainer import TrainConfig, train_on_graph

_MODE_ALIASES = {
    "associative": "associative",
    "assoc": "associative",
    "disassociative": "disassociative",
    "disassoc": "disassociative",
}


def check_graph(X, require_edges=True) -> Graph:
    """Coerce ``X`` to a :class:`Graph` and check it is usable."""
    if isinstance(X, Graph):
        g = X
    elif hasattr(X, "nodes") and hasattr(X, "edges"):
        nodes = list(X.nodes)
        index = {u: i for i, u in enumerate(nodes)}
        g = Graph.from_edges(len(nodes), [(index[u], index[v]) for u, v in X.edges if u != v])
    else:
        A = X if sp.issparse(X) else np.asarray(X)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError(f"expected a square adjacency matrix, got shape {A.shape}")
        if (abs(A - A.T) > 0).sum() if sp.issparse(A) else np.any(A != A.T):
            raise ValueError("adjacency matrix must be symmetric")
        g = Graph.from_adjacency(A)
    if g.n == 0:
        raise ValueError("graph has no nodes")
    if require_edges and g.m == 0:
        raise ValueError("graph has no edges")
    return g


def check_mode(mode) -> str:
    try:
        return _MODE_ALIASES[mode]
    except KeyError:
        raise ValueError(f"mode must be 'associative' or 'disassociative', got {mode!r}") from None


def _seed(random_state) -> int:
    if random_state is None:
        return 0
    if isinstance(random_state, (int, np.integer)):
        return int(random_state)
    raise ValueError("random_state must be an int or None")


class BetheHessianClustering(ClusterMixin, BaseEstimator):
    """k-means on the lowest eigenvectors of the Bethe Hessian.

    Attributes after fit: ``labels_``, ``embedding_`` (a SpectralEmbedding), ``r_``.
    """

    def __init__(self, n_clusters=5, mode="associative", r_mode="standard", random_state=0):
        self.n_clusters = n_clusters
        self.mode = mode
        self.r_mode = r_mode
        self.random_state = random_state

    def fit(self, X, y=None):
        g = check_graph(X)
        labels, emb = bethe_hessian_cluster(
            g, self.n_clusters, check_mode(self.mode), seed=_seed(self.random_state), r_mode=self.r_mode
        )
        self.labels_ = labels
        self.embedding_ = emb
        self.r_ = emb.r
        return self

    def transform(self, X=None):
        """Eigenvector embedding of the fitted graph."""
        check_is_fitted(self, "embedding_")
        return self.embedding_.vectors


class LouvainClustering(ClusterMixin, BaseEstimator):
    def __init__(self, random_state=0):
        self.random_state = random_state

    def fit(self, X, y=None):
        g = check_graph(X)
        self.labels_, self.modularity_ = louvain(g, seed=_seed(self.random_state))
        self.n_clusters_ = int(self.labels_.max()) + 1
        return self


class ModularityEncoderClustering(ClusterMixin, BaseEstimator):
    """Neural encoder trained on one graph to minimise the soft modularity loss.

    ``encoder`` picks neighbour attention or graph convolution layers, ``init``
    picks Bethe Hessian eigenvectors or Gaussian noise as input features.

    Attributes after fit: ``labels_``, ``soft_assignment_`` (N x C), ``history_``,
    ``soft_modularity_``, and ``embedding_`` when ``init="bethe-hessian"``.
    """

    def __init__(
        self,
        n_clusters=5,
        mode="associative",
        encoder="attention",
        init="bethe-hessian",
        layers=2,
        heads=3,
        hidden=48,
        lam=0.5,
        reg_mode="normalized",
        r_mode="standard",
        learning_rate=1e-3,
        max_steps=300,
        patience=30,
        restarts=3,
        random_state=0,
    ):
        self.n_clusters = n_clusters
        self.mode = mode
        self.encoder = encoder
        self.init = init
        self.layers = layers
        self.heads = heads
        self.hidden = hidden
        self.lam = lam
        self.reg_mode = reg_mode
        self.r_mode = r_mode
        self.learning_rate = learning_rate
        self.max_steps = max_steps
        self.patience = patience
        self.restarts = restarts
        self.random_state = random_state

    def train_config(self) -> TrainConfig:
        mode = check_mode(self.mode)
        return TrainConfig(
            encoder=EncoderConfig(
                layers=self.layers,
                heads=self.heads,
                hidden=self.hidden,
                clusters=self.n_clusters,
                encoder_kind=self.encoder,
                init_kind=self.init,
            ),
            loss=LossConfig(mode=mode, lam=self.lam, clusters=self.n_clusters, reg_mode=self.reg_mode),
            learning_rate=self.learning_rate,
            max_steps=self.max_steps,
            patience=self.patience,
            restarts=self.restarts,
            seed=_seed(self.random_state),
        )

    def fit(self, X, y=None):
        # y is accepted for API symmetry and never read: training is unsupervised
        g = check_graph(X)
        cfg = self.train_config()
        spectral = None
        if self.init == "bethe-hessian":
            spectral = bethe_hessian_embedding(g, self.n_clusters, cfg.loss.mode, self.r_mode)
            self.embedding_ = spectral
        U, labels, history = train_on_graph(g, spectral, cfg)
        self.soft_assignment_ = U
        self.labels_ = labels
        self.history_ = history
        self.soft_modularity_ = soft_modularity(g, U)
        return self

    def predict_proba(self, X=None):
        check_is_fitted(self, "soft_assignment_")
        return self.soft_assignment_
