import numpy as np
import pytest

from rwanomaly.detectors import (
    BiGraphRW,
    ProxGraphRW,
    bigraph_anomaly_scores,
    bigraph_source_similarity,
    mean_neighbor_similarity,
    prox_anomaly_scores,
    source_similarities,
)
from rwanomaly.graph import BipartiteGraph, DenseGraph, bipartite_adjacency

from conftest import random_bipartite


def eq2_reference(bg, sources, v):
    """Literal double loop over ordered neighbor pairs."""
    m = bg.edges
    num = den = 0.0
    for i in range(bg.k):
        for j in range(bg.k):
            if i != j:
                num += m[i, v] * m[j, v] * sources[i][j]
                den += m[i, v] * m[j, v]
    return num / den if den else 0.0


class TestSourceSimilarity:
    def test_edgeless_is_scaled_restart(self):
        g = bipartite_adjacency(BipartiteGraph(np.zeros((2, 2))))
        s = bigraph_source_similarity(g, 0, alpha=0.4)
        expected = np.zeros(4)
        expected[0] = 0.4
        assert np.allclose(s, expected)

    def test_single_edge_pair(self):
        g = bipartite_adjacency(BipartiteGraph(np.array([[1.0]])))
        s = bigraph_source_similarity(g, 0, alpha=0.5)
        assert s[0] == pytest.approx(2 / 3)
        assert s[1] == pytest.approx(1 / 3)

    def test_alpha_one_is_indicator(self):
        g = bipartite_adjacency(random_bipartite(3, 4, seed=0))
        s = bigraph_source_similarity(g, 2, alpha=1.0)
        expected = np.zeros(7)
        expected[2] = 1.0
        assert np.allclose(s, expected)


class TestMeanNeighborSimilarity:
    def test_two_neighbor_average(self):
        bg = BipartiteGraph(np.array([[1.0], [1.0]]))
        sources = {0: np.array([0.0, 0.7, 0.0]), 1: np.array([0.3, 0.0, 0.0])}
        # ordered pairs (0,1) and (1,0): (s_0(1) + s_1(0)) / 2
        assert mean_neighbor_similarity(bg, sources, 0) == pytest.approx(0.5)

    def test_single_neighbor_is_zero(self):
        bg = BipartiteGraph(np.array([[1.0], [0.0]]))
        sources = {0: np.ones(3)}
        assert mean_neighbor_similarity(bg, sources, 0) == 0.0

    def test_matches_double_loop_reference(self):
        bg = random_bipartite(3, 3, seed=7, p=0.9)
        g = bipartite_adjacency(bg)
        sources = source_similarities(g, range(3), alpha=0.2)
        for v in range(3):
            assert mean_neighbor_similarity(bg, sources, v) == pytest.approx(
                eq2_reference(bg, sources, v), abs=1e-12
            )


class TestBigraphScores:
    def test_low_degree_nodes_score_one(self):
        bg = BipartiteGraph(np.array([[1.0, 0.0], [0.0, 0.0]]))
        scores = bigraph_anomaly_scores(bg)
        assert scores.tolist() == [1.0, 1.0]

    def test_complete_graph_symmetric(self):
        bg = BipartiteGraph(np.ones((3, 4)))
        scores = bigraph_anomaly_scores(bg, alpha=0.3)
        assert np.allclose(scores, scores[0])
        assert scores[0] < 1.0

    def test_order_invariance_of_source_computation(self):
        bg = random_bipartite(6, 8, seed=3)
        g = bipartite_adjacency(bg)
        batch = source_similarities(g, range(6), alpha=0.2)
        shuffled = source_similarities(g, [4, 0, 5, 2, 1, 3], alpha=0.2)
        scores_a = np.array([mean_neighbor_similarity(bg, batch, v) for v in range(8)])
        scores_b = np.array([mean_neighbor_similarity(bg, shuffled, v) for v in range(8)])
        assert np.allclose(scores_a, scores_b, atol=1e-14)


class TestProxScores:
    def test_regular_graph_equal_scores(self):
        w = np.zeros((5, 5))  # 5-cycle: vertex-transitive
        for i in range(5):
            w[i, (i + 1) % 5] = w[(i + 1) % 5, i] = 1.0
        scores = prox_anomaly_scores(DenseGraph(w), alpha=0.2)
        assert np.abs(scores - scores[0]).max() < 1e-10

    def test_star_center_least_anomalous(self):
        w = np.zeros((6, 6))
        w[0, 1:] = w[1:, 0] = 1.0
        scores = prox_anomaly_scores(DenseGraph(w), alpha=0.2)
        assert scores[0] == pytest.approx(scores.min())

    def test_alpha_one_uniform(self):
        w = np.zeros((4, 4))
        w[0, 1] = w[1, 0] = 1.0
        scores = prox_anomaly_scores(DenseGraph(w), alpha=1.0)
        assert np.allclose(scores, 1.0 - 1.0 / 4)

    def test_extra_edge_keeps_scores_finite_and_bounded(self, rng):
        from conftest import random_weighted_graph

        g = random_weighted_graph(15, seed=8)
        w = g.weights.copy()
        w[0, 1] = w[1, 0] = 1.0
        scores = prox_anomaly_scores(DenseGraph(w), alpha=0.15)
        assert np.isfinite(scores).all()
        assert scores.max() <= 1.0


class TestEstimators:
    def test_prox_estimator_on_features(self, rng):
        x = rng.normal(size=(30, 4))
        det = ProxGraphRW(epsilon=0.3, contamination=0.1).fit(x)
        assert det.scores_.shape == (30,)
        assert det.labels_.sum() == 3  # ceil(0.1 * 30)
        assert det.fit_predict(x).tolist() == det.labels_.tolist()

    def test_prox_estimator_on_precomputed_graph(self):
        w = np.zeros((4, 4))
        w[0, 1] = w[1, 0] = 1.0
        det = ProxGraphRW().fit(DenseGraph(w))
        assert det.graph_.n == 4

    def test_bigraph_estimator(self):
        det = BiGraphRW(contamination=0.25).fit(random_bipartite(5, 8, seed=1))
        assert det.scores_.shape == (8,)
        assert det.labels_.sum() == 2

    def test_get_params_roundtrip(self):
        det = ProxGraphRW(epsilon=0.7, alpha=0.3)
        params = det.get_params()
        clone = ProxGraphRW(**params)
        assert clone.epsilon == 0.7 and clone.alpha == 0.3
