import inspect

import numpy as np
import pytest

from sbmcommunity.encoder import EncoderConfig
from sbmcommunity.graph import Graph, SsbmParams, ssbm_generate
from sbmcommunity.objective import LossConfig, balance_regularizer, soft_modularity
from sbmcommunity.spectral import bethe_hessian_embedding
from sbmcommunity.trainer import (
    AdamState,
    TrainConfig,
    TrainingDiverged,
    adam_step,
    hard_labels,
    train_on_graph,
)


def small_config(**kw):
    enc_kw = {k: kw.pop(k) for k in ("encoder_kind", "init_kind") if k in kw}
    lam = kw.pop("lam", 0.5)
    mode = kw.pop("mode", "associative")
    return TrainConfig(
        encoder=EncoderConfig(layers=1, heads=2, hidden=8, clusters=3, **enc_kw),
        loss=LossConfig(mode=mode, lam=lam, clusters=3),
        **{"max_steps": 40, "restarts": 2, "learning_rate": 1e-2, **kw},
    )


@pytest.fixture(scope="module")
def small_graph():
    return ssbm_generate(SsbmParams(60, 3, 20, 2), seed=4)


def test_adam_zero_gradient_keeps_params():
    p = {"w": np.array([1.0, -2.0])}
    new, state = adam_step(p, {"w": np.zeros(2)}, AdamState.zeros_like(p))
    assert np.array_equal(new["w"], p["w"]) and state.t == 1


def test_adam_first_step_moves_by_lr():
    p = {"theta": np.array(0.0)}
    new, _ = adam_step(p, {"theta": np.array(1.0)}, AdamState.zeros_like(p), lr=1e-3)
    assert float(new["theta"]) == pytest.approx(-1e-3, rel=1e-7)


def test_adam_constant_gradient_step_tends_to_lr():
    p = {"w": np.zeros(3)}
    g = {"w": np.array([2.0, -0.5, 1e-3])}
    state = AdamState.zeros_like(p)
    for _ in range(5000):
        prev = p["w"]
        p, state = adam_step(p, g, state, lr=0.01)
    np.testing.assert_allclose(p["w"] - prev, -np.sign(g["w"]) * 0.01, rtol=1e-4)


def test_adam_rejects_non_finite():
    p = {"w": np.zeros(2)}
    with pytest.raises(FloatingPointError):
        adam_step(p, {"w": np.array([np.nan, 0.0])}, AdamState.zeros_like(p))


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(learning_rate=0)
    with pytest.raises(ValueError):
        TrainConfig(encoder=EncoderConfig(clusters=4), loss=LossConfig(clusters=5))


@pytest.mark.parametrize("kind", ["attention", "gcn"])
@pytest.mark.parametrize("init", ["bethe-hessian", "random"])
def test_training_contract(small_graph, kind, init):
    g, _ = small_graph
    spectral = bethe_hessian_embedding(g, 3) if init == "bethe-hessian" else None
    cfg = small_config(encoder_kind=kind, init_kind=init)
    U, labels, hist = train_on_graph(g, spectral, cfg)
    assert U.shape == (60, 3) and np.abs(U.sum(1) - 1).max() < 1e-6
    assert np.array_equal(labels, hard_labels(U))
    assert hist.best_loss == min(hist.losses)
    assert len(hist.restart_losses) == 2
    best_so_far = np.minimum.accumulate(hist.losses)
    assert np.all(np.diff(best_so_far) <= 0)
    # returned U is the one that scored the recorded best loss
    value = -soft_modularity(g, U) + 0.5 * balance_regularizer(U)
    assert value == pytest.approx(hist.best_loss, abs=1e-12)
    assert hist.losses[hist.best_step] < hist.losses[0]


def test_training_is_deterministic(small_graph):
    g, _ = small_graph
    spectral = bethe_hessian_embedding(g, 3)
    a = train_on_graph(g, spectral, small_config())
    b = train_on_graph(g, spectral, small_config())
    assert np.array_equal(a[0], b[0]) and a[2].losses == b[2].losses
    c = train_on_graph(g, spectral, small_config(seed=1))
    assert not np.array_equal(a[0], c[0])


def test_lambda_only_shifts_the_first_loss(small_graph):
    g, _ = small_graph
    spectral = bethe_hessian_embedding(g, 3)
    _, _, h0 = train_on_graph(g, spectral, small_config(lam=0.0, restarts=1, max_steps=1))
    U1, _, h1 = train_on_graph(g, spectral, small_config(lam=0.5, restarts=1, max_steps=1))
    # one step = one forward at the initial parameters, identical for both runs
    assert h1.losses[0] - h0.losses[0] == pytest.approx(0.5 * balance_regularizer(U1), abs=1e-14)


def test_patience_stops_early(small_graph):
    g, _ = small_graph
    cfg = small_config(learning_rate=1e-9, patience=3, max_steps=100, restarts=1)
    _, _, hist = train_on_graph(g, bethe_hessian_embedding(g, 3), cfg)
    assert len(hist.losses) == 4


def test_training_never_sees_labels():
    assert list(inspect.signature(train_on_graph).parameters) == ["g", "spectral", "cfg"]


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_training_errors(small_graph):
    with pytest.raises(ValueError):
        train_on_graph(Graph.from_edges(4, []), None, small_config(init_kind="random"))
    g, _ = small_graph
    with pytest.raises(TrainingDiverged) as exc:
        train_on_graph(g, None, small_config(init_kind="random", learning_rate=1e300))
    assert len(exc.value.history.restart_losses) == 2


def test_hard_labels_tie_break():
    assert list(hard_labels(np.array([[0.5, 0.5], [0.2, 0.8]]))) == [0, 1]
