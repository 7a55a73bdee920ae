import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.metrics import roc_auc_score

from rwanomaly.errors import SingleClassError
from rwanomaly.graph import BipartiteGraph, DenseGraph
from rwanomaly.metrics import (
    auc_score,
    budget_from_proportion,
    classify,
    evasion_rate,
)


class TestClassify:
    def test_ceiling_count(self):
        flags = classify(np.arange(20, dtype=float), 0.10)
        assert flags.sum() == 2

    def test_tie_break_by_index(self):
        flags = classify(np.zeros(4), 0.5)
        assert flags.tolist() == [True, True, False, False]

    def test_picks_highest(self):
        flags = classify(np.array([0.9, 0.1, 0.5]), 1 / 3)
        assert flags.tolist() == [True, False, False]


class TestEvasionRate:
    def test_all_caught(self):
        scores = np.array([0.9, 0.8, 0.1, 0.2])
        assert evasion_rate(scores, [0, 1], 0.5) == 0.0

    def test_fraction(self):
        scores = -np.arange(50, dtype=float)  # node 0 highest
        targets = list(range(25))  # flagged set at 44% = first 22
        assert evasion_rate(scores, targets, 0.44) == pytest.approx(3 / 25)

    def test_top_q_one_never_evades(self):
        assert evasion_rate(np.random.rand(10), [3], 1.0) == 0.0

    def test_spec_arithmetic(self):
        # 25 targets, 14 of them outside the flagged set
        scores = np.zeros(100)
        targets = np.arange(25)
        scores[targets[:11]] = 1.0  # 11 targets inside the top-11 flags
        assert evasion_rate(scores, targets, 0.11) == pytest.approx(14 / 25)


class TestAuc:
    def test_perfect_separation(self):
        assert auc_score([0.9, 0.8, 0.1, 0.2], [1, 1, 0, 0]) == 1.0

    def test_identical_scores_half(self):
        assert auc_score(np.ones(6), [1, 0, 1, 0, 1, 0]) == 0.5

    def test_single_class_raises(self):
        with pytest.raises(SingleClassError):
            auc_score([0.1, 0.2], [1, 1])

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10_000), st.integers(5, 40))
    def test_matches_sklearn(self, seed, n):
        rng = np.random.default_rng(seed)
        scores = rng.choice([0.1, 0.4, 0.4, 0.9], size=n)  # force ties
        labels = rng.random(n) < 0.4
        if labels.all() or not labels.any():
            labels[0] = ~labels[0]
        assert auc_score(scores, labels) == pytest.approx(
            roc_auc_score(labels, scores), abs=1e-12
        )


class TestBudget:
    def test_round_half_up(self):
        w = np.zeros((8, 8))
        # node 0 with degree 7
        w[0, 1:] = w[1:, 0] = 1.0
        g = DenseGraph(w)
        assert budget_from_proportion(g, [0], 0.1) == 1

    def test_proportion_of_degree_sum(self):
        m = np.ones((4, 3))
        bg = BipartiteGraph(m)  # every V node has degree 4
        assert budget_from_proportion(bg, [0, 1, 2], 10.0) == 120

    def test_zero_proportion(self):
        bg = BipartiteGraph(np.ones((4, 3)))
        assert budget_from_proportion(bg, [0], 0.0) == 0


@settings(max_examples=200, deadline=None)
@given(st.integers(5, 60), st.integers(0, 100000), st.integers(1, 5))
def test_nested_flag_sets(n, seed, n_targets):
    rng = np.random.default_rng(seed)
    scores = rng.random(n).round(1)  # coarse scores force ties
    targets = rng.choice(n, size=n_targets, replace=False)
    flags5 = classify(scores, 0.05)
    flags10 = classify(scores, 0.10)
    assert np.all(flags5 <= flags10)  # 5% flags are a subset of 10% flags
    assert evasion_rate(scores, targets, 0.05) >= evasion_rate(scores, targets, 0.10)
