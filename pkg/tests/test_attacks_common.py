import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rwanomaly.attacks.common import (
    AdamRule,
    apply_perturbation,
    bipartite_support_pairs,
    check_perturbation,
    discretize_topk,
    full_support_pairs,
    matrix_to_vector,
    pgd_step,
    support_mask,
    vector_to_matrix,
)


class TestApplyPerturbation:
    def test_zero_is_identity(self, rng):
        w = rng.random((5, 5))
        w = np.triu(w, 1) + np.triu(w, 1).T
        assert np.array_equal(apply_perturbation(w, np.zeros((5, 5))), w)

    def test_flip_semantics(self):
        w = np.array([[0.0, 1.0], [1.0, 0.0]])
        b = np.array([[0.0, 1.0], [1.0, 0.0]])
        assert apply_perturbation(w, b)[0, 1] == 0.0  # deletion
        w0 = np.zeros((2, 2))
        assert apply_perturbation(w0, b)[0, 1] == 1.0  # addition

    def test_partial_weight(self):
        w = np.array([[0.0, 0.3], [0.3, 0.0]])
        b = np.array([[0.0, 0.8], [0.8, 0.0]])
        assert apply_perturbation(w, b)[0, 1] == pytest.approx(0.5)


class TestPgdStep:
    def test_clips_high(self):
        b = np.array([[0.0, 0.5], [0.5, 0.0]])
        out = pgd_step(b, np.ones((2, 2)), eta=1.0)
        assert out[0, 1] == 0.0

    def test_clips_low(self):
        b = np.array([[0.0, 0.5], [0.5, 0.0]])
        out = pgd_step(b, -np.ones((2, 2)), eta=1.0)
        assert out[0, 1] == 1.0

    def test_zero_gradient_noop(self):
        b = np.array([[0.0, 0.5], [0.5, 0.0]])
        assert np.array_equal(pgd_step(b, np.zeros((2, 2)), eta=2.0), b)

    def test_mask_enforced(self):
        mask = support_mask(3, (np.array([0]), np.array([1])))
        b = np.zeros((3, 3))
        grad = -np.ones((3, 3))
        out = pgd_step(b, grad, eta=1.0, mask=mask)
        assert out[0, 1] == 1.0 and out[1, 0] == 1.0
        assert out[0, 2] == 0.0 and out[1, 2] == 0.0
        check_perturbation(out, mask)


class TestDiscretizeTopk:
    def test_k_zero(self, rng):
        b = rng.random((4, 4))
        b = np.triu(b, 1) + np.triu(b, 1).T
        assert not discretize_topk(b, 0).any()

    def test_largest_survives(self):
        b = np.zeros((3, 3))
        b[0, 1] = b[1, 0] = 0.9
        b[0, 2] = b[2, 0] = 0.5
        b[1, 2] = b[2, 1] = 0.1
        out = discretize_topk(b, 1)
        assert out[0, 1] == pytest.approx(0.9)
        assert out[0, 2] == 0.0 and out[1, 2] == 0.0

    def test_tie_break_lexicographic(self):
        b = np.zeros((3, 3))
        b[0, 2] = b[2, 0] = 0.5
        b[1, 2] = b[2, 1] = 0.5
        out = discretize_topk(b, 1)
        assert out[0, 2] == pytest.approx(0.5)
        assert out[1, 2] == 0.0

    def test_binary_rounds_to_one(self):
        b = np.zeros((3, 3))
        b[0, 1] = b[1, 0] = 0.6
        out = discretize_topk(b, 2, binary=True)
        assert out[0, 1] == 1.0
        assert (np.triu(out, 1) > 0).sum() == 1  # zeros are never "kept"

    def test_bipartite_support(self):
        pairs = bipartite_support_pairs(2, 2)
        b = np.zeros((4, 4))
        b[0, 2] = b[2, 0] = 0.4
        b[1, 3] = b[3, 1] = 0.9
        out = discretize_topk(b, 1, binary=True, pairs=pairs)
        assert out[1, 3] == 1.0 and out[0, 2] == 0.0


class TestVectorRoundtrip:
    def test_roundtrip(self, rng):
        pairs = full_support_pairs(6)
        vec = rng.random(pairs[0].size)
        full = vector_to_matrix(vec, pairs, 6)
        check_perturbation(full, support_mask(6, pairs))
        assert np.array_equal(matrix_to_vector(full, pairs), vec)


def test_adam_moves_toward_negative_gradient():
    rule = AdamRule(eta=0.5)
    b = np.full(3, 0.5)
    out = rule.step(b, np.array([1.0, -1.0, 0.0]))
    assert out[0] < 0.5 and out[1] > 0.5 and out[2] == 0.5


@settings(max_examples=300, deadline=None)
@given(
    st.integers(2, 8),
    st.integers(0, 10_000),
    st.floats(0.01, 10.0),
    st.integers(0, 12),
)
def test_pgd_and_topk_invariants(n, seed, eta, k):
    rng = np.random.default_rng(seed)
    pairs = full_support_pairs(n)
    mask = support_mask(n, pairs)
    b = vector_to_matrix(rng.random(pairs[0].size), pairs, n)
    grad = rng.normal(size=(n, n))
    stepped = pgd_step(b, grad, eta, mask=mask)
    check_perturbation(stepped, mask)
    kept = discretize_topk(stepped, k, binary=seed % 2 == 0, pairs=pairs)
    check_perturbation(kept, mask)
    assert (np.triu(kept, 1) > 0).sum() <= k
