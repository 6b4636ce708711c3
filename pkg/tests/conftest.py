import numpy as np
import pytest

from sbmcommunity.graph import Graph


def random_graph(rng, n, p=0.4, ensure_edge=True):
    edges = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p]
    if ensure_edge and not edges:
        edges = [(0, 1)]
    return Graph.from_edges(n, edges)


def numeric_grad(f, x, h=1e-5):
    """Central differences of scalar ``f()`` w.r.t. array ``x`` (perturbed in place)."""
    out = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        old = x[idx]
        x[idx] = old + h
        fp = f()
        x[idx] = old - h
        fm = f()
        x[idx] = old
        out[idx] = (fp - fm) / (2 * h)
    return out


def rel_err(a, b, floor=1e-6):
    """Norm-wise relative error; ``floor`` keeps identically-zero gradients
    (biases feeding a batch norm) from dividing by rounding noise."""
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(a), np.linalg.norm(b), floor))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def two_cliques(size=5):
    edges = [(i, j) for i in range(size) for j in range(i + 1, size)]
    edges += [(i + size, j + size) for i, j in edges]
    return Graph.from_edges(2 * size, edges), np.repeat([0, 1], size)
