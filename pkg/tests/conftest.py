import numpy as np
import pytest

from rwanomaly.graph import BipartiteGraph, DenseGraph


def random_weighted_graph(n, seed, density=0.5, directed=False, dangling=False):
    """Random [0,1]-weighted graph; optionally leaves some rows edgeless."""
    rng = np.random.default_rng(seed)
    w = rng.random((n, n)) * rng.random((n, n))
    w[w < 1 - density] = 0.0
    if directed:
        np.fill_diagonal(w, 0.0)
    else:
        w = np.triu(w, k=1)
        w = w + w.T
    if dangling:
        drop = rng.choice(n, size=max(1, n // 10), replace=False)
        w[drop, :] = 0.0
        if not directed:
            w[:, drop] = 0.0
    return DenseGraph(w, directed=directed)


def random_bipartite(k, n, seed, p=0.4):
    rng = np.random.default_rng(seed)
    return BipartiteGraph((rng.random((k, n)) < p).astype(float))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
