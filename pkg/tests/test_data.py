import json

import numpy as np
import pytest

from rwanomaly.data import (
    inject_bipartite_anomalies,
    load_bipartite_edges,
    load_feature_csv,
    random_undirected_graph,
    sample_targets,
    synthetic_bipartite,
    synthetic_features,
)
from rwanomaly.detectors import bigraph_anomaly_scores, prox_anomaly_scores
from rwanomaly.errors import ParseError
from rwanomaly.metrics import auc_score
from rwanomaly.proximity import build_proximity_graph


class TestFeatureCsv:
    def test_basic_load(self, tmp_path):
        path = tmp_path / "x.csv"
        path.write_text("a,b\n1,2\n3,4\n5,6\n")
        fm = load_feature_csv(path)
        assert fm.n == 3 and fm.d == 2
        assert fm.values[2, 1] == 6.0

    def test_sidecar_declares_discrete(self, tmp_path):
        path = tmp_path / "x.csv"
        path.write_text("a,b\n1,2.5\n3,4.5\n")
        (tmp_path / "x.csv.schema.json").write_text(json.dumps({"discrete": ["a"]}))
        fm = load_feature_csv(path)
        assert fm.discrete == (True, False)

    def test_non_numeric_cell_names_position(self, tmp_path):
        path = tmp_path / "x.csv"
        path.write_text("a,b\n1,2\n3,oops\n")
        with pytest.raises(ParseError, match="line 3.*'b'"):
            load_feature_csv(path)

    def test_ragged_row_rejected(self, tmp_path):
        path = tmp_path / "x.csv"
        path.write_text("a,b\n1,2\n3\n")
        with pytest.raises(ParseError, match="line 3"):
            load_feature_csv(path)


class TestEdgeCsv:
    def test_basic_load(self, tmp_path):
        path = tmp_path / "e.csv"
        path.write_text("u,v\n0,0\n1,2\n")
        bg = load_bipartite_edges(path)
        assert bg.k == 2 and bg.n == 3
        assert bg.edges[1, 2] == 1.0

    def test_duplicates_dropped_with_warning(self, tmp_path):
        path = tmp_path / "e.csv"
        path.write_text("u,v\n0,1\n0,1\n1,0\n")
        with pytest.warns(UserWarning, match="duplicate"):
            bg = load_bipartite_edges(path)
        assert bg.edges.sum() == 2

    def test_non_integer_rejected(self, tmp_path):
        path = tmp_path / "e.csv"
        path.write_text("u,v\n0,x\n")
        with pytest.raises(ParseError, match="line 2"):
            load_bipartite_edges(path)


class TestSyntheticBipartite:
    def test_shapes_and_determinism(self):
        a = synthetic_bipartite(seed=3)
        b = synthetic_bipartite(seed=3)
        assert np.array_equal(a.edges, b.edges)
        assert a.k == 170 and a.n == 120

    def test_injection_count_and_labels(self):
        base = synthetic_bipartite(seed=0)
        grown, labels = inject_bipartite_anomalies(base, 0.1, seed=1)
        assert grown.n == 132 and labels.sum() == 12
        assert not labels[: base.n].any()

    def test_injection_deterministic(self):
        base = synthetic_bipartite(seed=0)
        a, _ = inject_bipartite_anomalies(base, 0.1, seed=9)
        b, _ = inject_bipartite_anomalies(base, 0.1, seed=9)
        assert np.array_equal(a.edges, b.edges)

    def test_injected_edges_hit_low_degree_quartile(self):
        base = synthetic_bipartite(seed=2)
        degrees = base.u_degrees()
        pool_size = int(np.ceil(base.k / 4))
        quartile = set(np.lexsort((np.arange(base.k), degrees))[:pool_size].tolist())
        grown, _ = inject_bipartite_anomalies(base, 0.05, seed=3)
        new_cols = grown.edges[:, base.n :]
        for col in new_cols.T:
            touched = set(np.flatnonzero(col).tolist())
            assert 3 <= len(touched) <= 6
            assert touched <= quartile

    def test_detector_separates_injected(self):
        base = synthetic_bipartite(seed=1)
        grown, labels = inject_bipartite_anomalies(base, 0.1, seed=2)
        scores = bigraph_anomaly_scores(grown, alpha=0.15)
        assert auc_score(scores, labels) >= 0.9


class TestSyntheticFeatures:
    def test_shapes_and_labels(self):
        fm, labels = synthetic_features(n=200, outlier_clumps=4, seed=0)
        assert fm.n == 200 and labels.sum() == 12

    def test_detector_separates_outliers(self):
        fm, labels = synthetic_features(seed=7)
        graph = build_proximity_graph(fm, "cosine", 0.5)
        scores = prox_anomaly_scores(graph, alpha=0.15)
        assert auc_score(scores, labels) >= 0.9

    def test_deterministic(self):
        a, _ = synthetic_features(seed=4)
        b, _ = synthetic_features(seed=4)
        assert np.array_equal(a.values, b.values)


class TestSampleTargets:
    def test_full_pool(self):
        scores = np.arange(10, dtype=float)
        targets = sample_targets(scores, pool_size=3, count=3, seed=0)
        assert targets.tolist() == [7, 8, 9]

    def test_seeded_determinism(self):
        scores = np.random.default_rng(0).random(50)
        a = sample_targets(scores, 20, 5, seed=11)
        b = sample_targets(scores, 20, 5, seed=11)
        assert np.array_equal(a, b)

    def test_sample_within_pool(self):
        scores = np.arange(30, dtype=float)
        targets = sample_targets(scores, pool_size=10, count=4, seed=2)
        assert np.all(targets >= 20)


def test_random_undirected_graph_odd_cycle():
    g = random_undirected_graph(6, 0.0, seed=0, ensure_odd_cycle=True)
    w = g.weights
    assert np.trace(w @ w @ w) > 0
