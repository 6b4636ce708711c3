import numpy as np
import pytest

from sbmcommunity.graph import PRESETS, Graph, ssbm_generate
from sbmcommunity.metrics import hard_modularity
from sbmcommunity.objective import (
    LossConfig,
    balance_regularizer,
    loss,
    loss_and_grad,
    loss_grad_U,
    soft_modularity,
)

from .conftest import numeric_grad, random_graph, rel_err


def onehot(y, C):
    return np.eye(C)[y]


def random_soft(rng, n, C):
    z = rng.standard_normal((n, C))
    e = np.exp(z)
    return e / e.sum(1, keepdims=True)


def test_soft_modularity_examples():
    g = Graph.from_edges(4, [(0, 1), (2, 3)])
    assert soft_modularity(g, np.full((4, 3), 1 / 3)) == pytest.approx(0.0, abs=1e-15)
    assert soft_modularity(g, onehot([0, 0, 1, 1], 2)) == pytest.approx(0.5)


def test_soft_modularity_rejects_non_stochastic_rows():
    g = Graph.from_edges(4, [(0, 1), (2, 3)])
    with pytest.raises(ValueError):
        soft_modularity(g, np.full((4, 2), 0.6))


def test_ground_truth_modularity_associative():
    vals = [soft_modularity(g, onehot(y, 5)) for g, y in (ssbm_generate(PRESETS["assoc"], s) for s in range(20))]
    assert np.mean(vals) == pytest.approx(0.52, abs=0.02)


def test_hard_soft_consistency(rng):
    for _ in range(100):
        n = int(rng.integers(4, 30))
        g = random_graph(rng, n, float(rng.uniform(0.1, 0.6)))
        C = int(rng.integers(1, 6))
        y = rng.integers(0, C, n)
        assert soft_modularity(g, onehot(y, C)) == pytest.approx(hard_modularity(g, y), abs=1e-10)


def test_column_permutation_invariance_and_bound(rng):
    for _ in range(20):
        g = random_graph(rng, 12, 0.3)
        U = random_soft(rng, 12, 4)
        P = np.eye(4)[rng.permutation(4)]
        assert soft_modularity(g, U @ P) == pytest.approx(soft_modularity(g, U), abs=1e-14)
        assert balance_regularizer(U @ P) == pytest.approx(balance_regularizer(U), abs=1e-14)
        assert abs(soft_modularity(g, U)) <= 1


def test_balance_regularizer_examples():
    assert balance_regularizer(np.full((10, 5), 0.2), 5) == pytest.approx(0.0, abs=1e-15)
    assert balance_regularizer(onehot(np.zeros(6, int), 2), 2) == pytest.approx(0.5)
    masses = np.array([0.3, 0.2, 0.2, 0.2, 0.1])
    U = np.tile(masses, (7, 1))
    assert balance_regularizer(U, 5) == pytest.approx(0.02)
    # raw column sums compared with 1/C
    assert balance_regularizer(U, 5, reg_mode="literal") == pytest.approx(((7 * masses - 0.2) ** 2).sum())


def test_loss_examples():
    g = Graph.from_edges(4, [(0, 1), (2, 3)])
    assert loss(g, np.full((4, 2), 0.5), LossConfig(lam=0, clusters=2)) == pytest.approx(0.0, abs=1e-15)
    vals_a, vals_d = [], []
    for s in range(20):
        g, y = ssbm_generate(PRESETS["assoc"], s)
        vals_a.append(loss(g, onehot(y, 5), LossConfig("associative", 0.5, 5)))
        g, y = ssbm_generate(PRESETS["disassoc"], s)
        vals_d.append(loss(g, onehot(y, 5), LossConfig("disassociative", 0.5, 5)))
    assert np.mean(vals_a) == pytest.approx(-0.52, abs=0.02)
    assert np.mean(vals_d) == pytest.approx(-0.20, abs=0.02)


def test_loss_sign_convention(rng):
    g = random_graph(rng, 10)
    U = random_soft(rng, 10, 3)
    q, r = soft_modularity(g, U), balance_regularizer(U)
    assert loss(g, U, LossConfig("associative", 0.7, 3)) == pytest.approx(-q + 0.7 * r)
    assert loss(g, U, LossConfig("disassociative", 0.7, 3)) == pytest.approx(q + 0.7 * r)


def test_grad_zero_cases(rng):
    g = random_graph(rng, 9)
    uniform = np.full((9, 3), 1 / 3)
    cfg = LossConfig(lam=0.0, clusters=3)
    np.testing.assert_allclose(loss_grad_U(g, uniform, cfg), 0, atol=1e-15)
    # balanced columns: regularizer gradient vanishes, only the modularity part is left
    U = random_soft(rng, 9, 3)
    U = U / U.sum(0) * 3
    U = U / U.sum(1, keepdims=True)
    cfg_r = LossConfig(lam=1.0, clusters=3)
    g_mod = loss_grad_U(g, U, LossConfig(lam=0.0, clusters=3))
    dev = U.mean(0) - 1 / 3
    np.testing.assert_allclose(loss_grad_U(g, U, cfg_r) - g_mod, np.broadcast_to(2 * dev / 9, U.shape), atol=1e-15)


@pytest.mark.parametrize("mode", ["associative", "disassociative"])
@pytest.mark.parametrize("reg_mode", ["normalized", "literal"])
def test_grad_matches_finite_differences(rng, mode, reg_mode):
    for _ in range(10):
        g = random_graph(rng, 8, 0.4)
        U = random_soft(rng, 8, 3)
        cfg = LossConfig(mode, 0.5, 3, reg_mode)
        # the loss is a polynomial in U, so finite differences ignore the simplex
        f = lambda: -(1 if mode == "associative" else -1) * np.sum(U * _B(g, U)) / g.a1_norm + 0.5 * _R(U, reg_mode)
        num = numeric_grad(f, U, h=1e-6)
        assert rel_err(loss_grad_U(g, U, cfg), num) < 1e-6
        value, grad = loss_and_grad(g, U, cfg)
        assert value == pytest.approx(loss(g, U, cfg), abs=1e-14)
        np.testing.assert_allclose(grad, loss_grad_U(g, U, cfg), atol=1e-15)


def _B(g, U):
    A = g.adjacency.toarray()
    d = A.sum(1)
    return (A - np.outer(d, d) / A.sum()) @ U


def _R(U, reg_mode):
    mass = U.sum(0) / (len(U) if reg_mode == "normalized" else 1)
    return ((mass - 1 / U.shape[1]) ** 2).sum()
