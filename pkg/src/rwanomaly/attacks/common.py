"""Shared machinery for poisoning attacks: perturbation supports, projected
steps, and top-K discretization.

A perturbation is a symmetric matrix B in [0, 1] with zero diagonal whose
free entries live on an explicit support (all off-diagonal pairs for a
plain graph, the U x V block for a bipartite one). The attacked graph is
``|W - B|`` entrywise: B flips edge mass toward deletion where an edge
exists and toward addition where it does not.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..graph import BipartiteGraph, DenseGraph


def full_support_pairs(n: int) -> tuple[np.ndarray, np.ndarray]:
    """All off-diagonal upper-triangle pairs (u < v), lexicographic order."""
    iu, iv = np.triu_indices(n, k=1)
    return iu, iv


def bipartite_support_pairs(k: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    """All U x V pairs of the (k+n)-node block graph, lexicographic order."""
    iu, iv = np.meshgrid(np.arange(k), np.arange(k, k + n), indexing="ij")
    return iu.ravel(), iv.ravel()


def support_mask(n_total: int, pairs: tuple[np.ndarray, np.ndarray]) -> np.ndarray:
    mask = np.zeros((n_total, n_total), dtype=bool)
    mask[pairs] = True
    return mask


def vector_to_matrix(b: np.ndarray, pairs: tuple[np.ndarray, np.ndarray], n_total: int) -> np.ndarray:
    """Scatter a support vector into the full symmetric perturbation matrix."""
    full = np.zeros((n_total, n_total))
    full[pairs] = b
    return full + full.T


def matrix_to_vector(b_full: np.ndarray, pairs: tuple[np.ndarray, np.ndarray]) -> np.ndarray:
    return np.asarray(b_full)[pairs].copy()


def apply_perturbation(weights: np.ndarray, b_full: np.ndarray) -> np.ndarray:
    """Attacked weights ``|W - B|``; symmetry and the zero diagonal survive."""
    weights = np.asarray(weights, dtype=np.float64)
    b_full = np.asarray(b_full, dtype=np.float64)
    if weights.shape != b_full.shape:
        raise ValueError("weight and perturbation shapes must agree")
    return np.abs(weights - b_full)


def pgd_step(
    b_full: np.ndarray,
    grad_full: np.ndarray,
    eta: float,
    mask: np.ndarray | None = None,
) -> np.ndarray:
    """Plain projected step ``clip(b - eta * grad, 0, 1)`` on the support.

    Entries outside ``mask`` (when given) are forced back to exactly zero;
    the result is symmetrized from its upper triangle.
    """
    b_full = np.asarray(b_full, dtype=np.float64)
    stepped = np.clip(b_full - eta * np.asarray(grad_full, dtype=np.float64), 0.0, 1.0)
    if mask is not None:
        stepped = np.where(mask | mask.T, stepped, 0.0)
    upper = np.triu(stepped, k=1)
    return upper + upper.T


class SgdRule:
    """Constant-step descent rule; the caller projects onto its feasible box."""

    def __init__(self, eta: float):
        self.eta = eta

    def step(self, b: np.ndarray, grad: np.ndarray) -> np.ndarray:
        return b - self.eta * grad


class AdamRule:
    """First/second-moment adaptive rule with the usual bias correction."""

    def __init__(self, eta: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.eta = eta
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self._m = None
        self._v = None
        self._t = 0

    def step(self, b: np.ndarray, grad: np.ndarray) -> np.ndarray:
        if self._m is None:
            self._m = np.zeros_like(b)
            self._v = np.zeros_like(b)
        self._t += 1
        self._m = self.beta1 * self._m + (1 - self.beta1) * grad
        self._v = self.beta2 * self._v + (1 - self.beta2) * grad**2
        m_hat = self._m / (1 - self.beta1**self._t)
        v_hat = self._v / (1 - self.beta2**self._t)
        return b - self.eta * m_hat / (np.sqrt(v_hat) + self.eps)


def make_step_rule(name: str, eta: float):
    if name == "sgd":
        return SgdRule(eta)
    if name == "adam":
        return AdamRule(eta)
    raise ValueError(f"unknown step rule {name!r}")


def discretize_topk(
    b_full: np.ndarray,
    k: int,
    binary: bool = False,
    pairs: tuple[np.ndarray, np.ndarray] | None = None,
) -> np.ndarray:
    """Keep the K largest positive entries of the perturbation, zero the rest.

    Retained entries keep their relaxed value; for binary graphs they are
    rounded up to 1 so the attacked graph stays binary. Ties are broken by
    lexicographic (u, v) order on the upper triangle.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    b_full = np.asarray(b_full, dtype=np.float64)
    n_total = b_full.shape[0]
    if pairs is None:
        pairs = full_support_pairs(n_total)
    iu, iv = pairs
    vals = b_full[iu, iv]
    positive = vals > 0
    order = np.lexsort((iv, iu, -vals))
    order = order[positive[order]][:k]
    kept = np.zeros((n_total, n_total))
    kept[iu[order], iv[order]] = 1.0 if binary else vals[order]
    return kept + kept.T


def check_perturbation(
    b_full: np.ndarray, mask: np.ndarray | None = None, atol: float = 0.0
) -> None:
    """Assert box/symmetry/diagonal/support invariants; raises AssertionError."""
    b_full = np.asarray(b_full)
    assert np.all(b_full >= -atol) and np.all(b_full <= 1 + atol), "entries left [0, 1]"
    assert np.array_equal(b_full, b_full.T), "perturbation not symmetric"
    assert not np.diagonal(b_full).any(), "diagonal not zero"
    if mask is not None:
        off = ~(mask | mask.T)
        assert not b_full[off].any(), "mass outside the support"


@dataclass
class GraphAttackOutcome:
    """Result record of one graph-space attack run."""

    attacked_graph: DenseGraph
    perturbation: np.ndarray  # discrete B, full symmetric matrix
    relaxed: np.ndarray  # final continuous B, full symmetric matrix
    modified_edges: tuple[tuple[int, int], ...]  # upper-triangle pairs with b > 0
    attack_nodes: tuple[int, ...]  # endpoints of the modified edges
    loss_trace: np.ndarray
    budget: int
    seed: int
    shortfall: int = 0
    attacked_bipartite: BipartiteGraph | None = None

    @property
    def n_modified(self) -> int:
        return len(self.modified_edges)


def outcome_from_perturbation(
    weights: np.ndarray,
    b_bar: np.ndarray,
    relaxed: np.ndarray,
    loss_trace,
    budget: int,
    seed: int,
    shortfall: int = 0,
    bipartite_k: int | None = None,
) -> GraphAttackOutcome:
    """Assemble the outcome record from the discrete perturbation."""
    attacked = apply_perturbation(weights, b_bar)
    iu, iv = np.nonzero(np.triu(b_bar, k=1))
    edges = tuple((int(u), int(v)) for u, v in zip(iu, iv))
    nodes = tuple(sorted({node for edge in edges for node in edge}))
    bg = None
    if bipartite_k is not None:
        bg = BipartiteGraph(attacked[:bipartite_k, bipartite_k:])
    return GraphAttackOutcome(
        attacked_graph=DenseGraph(attacked, directed=False),
        perturbation=b_bar,
        relaxed=relaxed,
        modified_edges=edges,
        attack_nodes=nodes,
        loss_trace=np.asarray(loss_trace, dtype=np.float64),
        budget=budget,
        seed=seed,
        shortfall=shortfall,
        attacked_bipartite=bg,
    )
