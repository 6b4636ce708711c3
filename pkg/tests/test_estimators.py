import networkx as nx
import numpy as np
import pytest
import scipy.sparse as sp
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from sbmcommunity import (
    BetheHessianClustering,
    LouvainClustering,
    ModularityEncoderClustering,
)
from sbmcommunity.estimators import check_graph, check_mode
from sbmcommunity.graph import Graph, SsbmParams, ssbm_generate
from sbmcommunity.metrics import overlap

from .conftest import two_cliques


def test_check_graph_accepts_common_inputs():
    g, _ = two_cliques()
    A = g.adjacency
    assert check_graph(A) == g
    assert check_graph(A.toarray()) == g
    G = nx.Graph(list(map(tuple, g.edges)))
    assert check_graph(G).m == g.m
    with pytest.raises(ValueError):
        check_graph(np.ones((2, 3)))
    with pytest.raises(ValueError):
        check_graph(np.triu(np.ones((3, 3)), 1))
    with pytest.raises(ValueError):
        check_graph(sp.csr_matrix((4, 4)))


def test_check_mode_aliases():
    assert check_mode("assoc") == "associative"
    assert check_mode("disassociative") == "disassociative"
    with pytest.raises(ValueError):
        check_mode("mixed")


def test_get_params_and_clone():
    est = ModularityEncoderClustering(n_clusters=4, encoder="gcn", lam=0.2)
    params = est.get_params()
    assert params["n_clusters"] == 4 and params["lam"] == 0.2 and params["heads"] == 3
    other = clone(est).set_params(hidden=12)
    assert other.hidden == 12 and est.hidden == 48


def test_bethe_hessian_estimator_two_cliques():
    g, truth = two_cliques()
    est = BetheHessianClustering(n_clusters=2)
    labels = est.fit_predict(g.adjacency)
    assert overlap(truth, labels, 2) == 1.0
    assert est.transform().shape == (10, 2)
    with pytest.raises(NotFittedError):
        BetheHessianClustering().transform()


def test_louvain_estimator():
    g, truth = two_cliques()
    est = LouvainClustering().fit(g)
    assert est.n_clusters_ == 2 and est.modularity_ == pytest.approx(0.5)


def test_encoder_estimator_small():
    g, truth = ssbm_generate(SsbmParams(60, 3, 20, 2), seed=0)
    est = ModularityEncoderClustering(n_clusters=3, layers=1, heads=2, hidden=8, max_steps=20, restarts=1)
    labels = est.fit_predict(g)
    assert labels.shape == (60,)
    assert est.predict_proba().shape == (60, 3)
    assert est.embedding_.vectors.shape == (60, 3)
    assert np.isfinite(est.soft_modularity_)
