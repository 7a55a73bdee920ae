"""Graph-space poisoning attacks: relaxed PGD attacks plus the two
addition-only baselines.

``GraphSpaceAttack`` optimizes a continuous perturbation of edge mass under
either refresh strategy ("alterI": one walk step per epoch against a carried
similarity state; "cf": a closed-form solve per epoch) and finally keeps the
top-K entries. The attacked graph is ``|W - B|``, so the same matrix encodes
additions and deletions; on weighted graphs the kept entries retain their
relaxed values, on bipartite (binary) graphs they are rounded up to full
edges.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from ..detectors import DEFAULT_ALPHA, bigraph_anomaly_scores, prox_anomaly_scores
from ..errors import BudgetError, ShortfallWarning
from ..graph import BipartiteGraph, DenseGraph, bipartite_adjacency, stationary_closed_form, transition_matrix
from .autograd import GraphLoss
from .common import (
    GraphAttackOutcome,
    bipartite_support_pairs,
    discretize_topk,
    full_support_pairs,
    make_step_rule,
    matrix_to_vector,
    outcome_from_perturbation,
    vector_to_matrix,
)

import warnings


def attack_loss(scores: np.ndarray, targets, lam: float = 0.0, b_full: np.ndarray | None = None) -> float:
    """Sum of target anomaly scores, plus ``lam`` times the upper-triangle
    perturbation mass when a relaxed perturbation is supplied."""
    targets = np.asarray(list(targets), dtype=np.int64)
    if targets.size == 0:
        raise ValueError("targets must be nonempty")
    value = float(np.asarray(scores)[targets].sum())
    if lam > 0.0 and b_full is not None:
        value += lam * float(np.triu(b_full, k=1).sum())
    return value


def _setup(graph: DenseGraph | BipartiteGraph):
    """Weights, support pairs and model tag for either input kind."""
    if isinstance(graph, BipartiteGraph):
        dense = bipartite_adjacency(graph)
        pairs = bipartite_support_pairs(graph.k, graph.n)
        return dense.weights, pairs, "bigraph", graph.k
    if graph.directed:
        raise ValueError("graph-space attacks expect an undirected graph")
    return graph.weights, full_support_pairs(graph.n), "prox", None


def _clean_carry(weights: np.ndarray, model: str, alpha: float, k: int | None) -> np.ndarray:
    """Converged similarity state of the clean graph, the alterI start point."""
    dense = DenseGraph(weights, directed=False)
    p = transition_matrix(dense)
    if model == "prox":
        return stationary_closed_form(p, np.full(dense.n, 1.0 / dense.n), alpha)
    r = np.zeros((dense.n, k))
    r[np.arange(k), np.arange(k)] = 1.0
    return stationary_closed_form(p, r, alpha)


def loss_gradient(
    graph: DenseGraph | BipartiteGraph,
    b_full: np.ndarray,
    targets,
    alpha: float,
    variant: str,
    lam: float = 0.0,
    carry: np.ndarray | None = None,
) -> np.ndarray:
    """Gradient of the surrogate attack loss w.r.t. the perturbation.

    Returned as a full matrix: the derivative of the shared upper-triangle
    parameter is mirrored onto both orientations, and every entry outside
    the support is exactly zero. For ``variant="alterI"`` the similarity
    state ``carry`` is frozen (defaults to the clean converged state).
    """
    weights, pairs, model, k = _setup(graph)
    if carry is None and variant == "alterI":
        carry = _clean_carry(weights, model, alpha, k)
    loss = GraphLoss(weights, pairs, targets, alpha, model, variant, lam, carry, k)
    _, grad_vec, _ = loss.loss_and_grad(matrix_to_vector(b_full, pairs))
    full = np.zeros_like(np.asarray(b_full, dtype=np.float64))
    full[pairs] = grad_vec
    iu, iv = pairs
    full[iv, iu] = grad_vec
    return full


class GraphSpaceAttack(BaseEstimator):
    """PGD attack on edge mass with top-K discretization.

    Parameters
    ----------
    budget : number of edges (weight slots) that may end up modified.
    variant : "alterI" or "cf" refresh of the walk inside each epoch.
    epochs, lr, lam : optimizer schedule and sparsity regularization.
    step_rule : "sgd", "adam", or None to pick the customary rule per model
        (plain steps on bipartite graphs, adaptive moments on proximity
        graphs).
    init_scale : scale of the tiny random positive initialization of the
        relaxed perturbation (exact zeros have no usable subgradient).
    """

    def __init__(
        self,
        budget: int = 1,
        variant: str = "cf",
        epochs: int = 35,
        lr: float = 1.0,
        lam: float = 1e-4,
        alpha: float = DEFAULT_ALPHA,
        step_rule: str | None = None,
        init_scale: float = 1e-6,
        seed: int = 0,
    ):
        self.budget = budget
        self.variant = variant
        self.epochs = epochs
        self.lr = lr
        self.lam = lam
        self.alpha = alpha
        self.step_rule = step_rule
        self.init_scale = init_scale
        self.seed = seed

    def run(self, graph: DenseGraph | BipartiteGraph, targets) -> GraphAttackOutcome:
        weights, pairs, model, k = _setup(graph)
        n_free = pairs[0].size
        if self.budget > n_free:
            raise BudgetError(f"budget {self.budget} exceeds the {n_free}-entry support")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.budget == 0:
            b_bar = np.zeros_like(weights)
            return outcome_from_perturbation(
                weights, b_bar, b_bar.copy(), [], 0, self.seed, bipartite_k=k
            )

        rng = np.random.default_rng(self.seed)
        b = rng.uniform(0.0, self.init_scale, size=n_free)
        carry = _clean_carry(weights, model, self.alpha, k) if self.variant == "alterI" else None
        loss_fn = GraphLoss(
            weights, pairs, targets, self.alpha, model, self.variant, self.lam, carry, k
        )
        rule_name = self.step_rule or ("sgd" if model == "bigraph" else "adam")
        rule = make_step_rule(rule_name, self.lr)
        trace = []
        for _ in range(self.epochs):
            value, grad, sim = loss_fn.loss_and_grad(b)
            trace.append(value)
            b = np.clip(rule.step(b, grad), 0.0, 1.0)
            if self.variant == "alterI":
                loss_fn.advance(sim)
        relaxed = vector_to_matrix(b, pairs, weights.shape[0])
        b_bar = discretize_topk(relaxed, self.budget, binary=(model == "bigraph"), pairs=pairs)
        return outcome_from_perturbation(
            weights, b_bar, relaxed, trace, self.budget, self.seed, bipartite_k=k
        )


def _candidate_additions(graph: DenseGraph | BipartiteGraph, targets) -> list[tuple[int, int]]:
    """Zero-weight support pairs incident to at least one target, lex order."""
    weights, pairs, model, k = _setup(graph)
    targets = set(int(t) + (k if model == "bigraph" else 0) for t in targets)
    iu, iv = pairs
    out = []
    for u, v in zip(iu.tolist(), iv.tolist()):
        if weights[u, v] == 0 and (u in targets or v in targets):
            out.append((u, v))
    return out


def _baseline_outcome(graph, added: list[tuple[int, int]], budget: int, seed: int, shortfall: int):
    weights, pairs, model, k = _setup(graph)
    n_total = weights.shape[0]
    b_bar = np.zeros((n_total, n_total))
    for u, v in added:
        b_bar[u, v] = b_bar[v, u] = 1.0
    return outcome_from_perturbation(
        weights, b_bar, b_bar.copy(), [], budget, seed, shortfall=shortfall, bipartite_k=k
    )


class RandomAddAttack(BaseEstimator):
    """Adds ``budget`` uniformly sampled non-edges incident to the targets."""

    def __init__(self, budget: int = 1, seed: int = 0):
        self.budget = budget
        self.seed = seed

    def run(self, graph: DenseGraph | BipartiteGraph, targets) -> GraphAttackOutcome:
        candidates = _candidate_additions(graph, targets)
        shortfall = max(0, self.budget - len(candidates))
        if shortfall:
            warnings.warn(
                f"only {len(candidates)} candidate edges for budget {self.budget}",
                ShortfallWarning,
                stacklevel=2,
            )
        rng = np.random.default_rng(self.seed)
        take = min(self.budget, len(candidates))
        chosen = [candidates[i] for i in rng.permutation(len(candidates))[:take]]
        return _baseline_outcome(graph, chosen, self.budget, self.seed, shortfall)


class DegreeAddAttack(BaseEstimator):
    """Connects targets to the highest-degree non-target endpoints.

    Each endpoint is used at most once, paired with its lowest-index target
    candidate; endpoint ties are broken by smaller node index.
    """

    def __init__(self, budget: int = 1):
        self.budget = budget

    def run(self, graph: DenseGraph | BipartiteGraph, targets) -> GraphAttackOutcome:
        weights, pairs, model, k = _setup(graph)
        offset = k if model == "bigraph" else 0
        target_nodes = sorted(int(t) + offset for t in targets)
        target_set = set(target_nodes)
        candidates = _candidate_additions(graph, targets)
        degrees = (weights > 0).sum(axis=1)
        by_endpoint: dict[int, list[int]] = {}
        for u, v in candidates:
            if u in target_set and v not in target_set:
                by_endpoint.setdefault(v, []).append(u)
            elif v in target_set and u not in target_set:
                by_endpoint.setdefault(u, []).append(v)
        ranked = sorted(by_endpoint, key=lambda node: (-degrees[node], node))
        added = []
        for endpoint in ranked:
            if len(added) == self.budget:
                break
            tgt = min(by_endpoint[endpoint])
            added.append((min(endpoint, tgt), max(endpoint, tgt)))
        shortfall = max(0, self.budget - len(added))
        if shortfall:
            warnings.warn(
                f"only {len(added)} distinct endpoints for budget {self.budget}",
                ShortfallWarning,
                stacklevel=2,
            )
        return _baseline_outcome(graph, added, self.budget, 0, shortfall)


def rescore(obj, alpha: float = DEFAULT_ALPHA) -> np.ndarray:
    """Exact (converged) anomaly scores of a clean or attacked graph."""
    if isinstance(obj, GraphAttackOutcome):
        obj = obj.attacked_bipartite if obj.attacked_bipartite is not None else obj.attacked_graph
    if isinstance(obj, BipartiteGraph):
        return bigraph_anomaly_scores(obj, alpha)
    return prox_anomaly_scores(obj, alpha)
