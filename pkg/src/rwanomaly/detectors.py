"""The two random-walk anomaly detectors, wrapped as sklearn-style estimators.

``BiGraphRW`` scores part-V nodes of a bipartite graph by how similar their
part-U neighbors look to each other under per-source personalized walks.
``ProxGraphRW`` scores rows of a feature matrix (or nodes of a precomputed
graph) by their stationary visiting mass under a uniform-restart walk.

Both expose ``fit`` / ``fit_predict`` with ``scores_`` and ``labels_``
attributes; scores are anomaly scores (higher = more anomalous).
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array

from .graph import (
    BipartiteGraph,
    DenseGraph,
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    bipartite_adjacency,
    stationary_closed_form,
    stationary_iterative,
    transition_matrix,
)
from .metrics import classify
from .proximity import FeatureMatrix, build_proximity_graph

DEFAULT_ALPHA = 0.15  # convention only; nothing in the model pins it


def _solve(p, r, alpha, solver, tol, max_iter):
    if solver == "closed-form":
        return stationary_closed_form(p, r, alpha)
    if solver == "iterative":
        return stationary_iterative(p, r, alpha, tol=tol, max_iter=max_iter)
    raise ValueError(f"unknown solver {solver!r}")


def bigraph_source_similarity(
    graph: DenseGraph,
    source: int,
    alpha: float = DEFAULT_ALPHA,
    solver: str = "closed-form",
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> np.ndarray:
    """Stationary similarity vector of a walk restarting at one node."""
    p = transition_matrix(graph)
    r = np.zeros(graph.n)
    r[source] = 1.0
    return _solve(p, r, alpha, solver, tol, max_iter)


def source_similarities(
    graph: DenseGraph,
    sources,
    alpha: float = DEFAULT_ALPHA,
    solver: str = "closed-form",
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> dict[int, np.ndarray]:
    """Batch of per-source stationary vectors, one linear solve for all."""
    sources = [int(u) for u in sources]
    p = transition_matrix(graph)
    r = np.zeros((graph.n, len(sources)))
    for col, u in enumerate(sources):
        r[u, col] = 1.0
    if not sources:
        return {}
    s = _solve(p, r, alpha, solver, tol, max_iter)
    return {u: s[:, col] for col, u in enumerate(sources)}


def mean_neighbor_similarity(bg: BipartiteGraph, sources: dict[int, np.ndarray], v: int) -> float:
    """Average similarity over ordered pairs of v's neighbors in part U.

    A node with fewer than two neighbors has no peer evidence; its mean is
    defined as 0 (hence anomaly score 1).
    """
    m = bg.edges
    neighbors = np.flatnonzero(m[:, v] > 0)
    if neighbors.size < 2:
        return 0.0
    total = 0.0
    for i in neighbors:
        s_i = sources[int(i)]
        for j in neighbors:
            if i != j:
                total += s_i[int(j)]
    pairs = neighbors.size * (neighbors.size - 1)
    return total / pairs


def bigraph_anomaly_scores(
    bg: BipartiteGraph,
    alpha: float = DEFAULT_ALPHA,
    solver: str = "closed-form",
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> np.ndarray:
    """Anomaly score ``1 - mean neighbor similarity`` for every node of part V.

    Source walks are computed once for every U node that neighbors a scored
    V node and reused across all of its co-reviewed nodes.
    """
    needed = np.flatnonzero(bg.edges.sum(axis=1) > 0)
    graph = bipartite_adjacency(bg)
    sources = source_similarities(graph, needed, alpha, solver, tol, max_iter)
    scores = np.empty(bg.n)
    for v in range(bg.n):
        scores[v] = 1.0 - mean_neighbor_similarity(bg, sources, v)
    return scores


def prox_anomaly_scores(
    graph: DenseGraph,
    alpha: float = DEFAULT_ALPHA,
    solver: str = "closed-form",
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> np.ndarray:
    """Anomaly score ``1 - s(v)`` under a uniform-restart walk."""
    if graph.directed:
        raise ValueError("proximity scoring expects an undirected graph")
    p = transition_matrix(graph)
    r = np.full(graph.n, 1.0 / graph.n)
    s = _solve(p, r, alpha, solver, tol, max_iter)
    return 1.0 - s


class BiGraphRW(BaseEstimator):
    """Bipartite-graph anomaly detector via per-source restart walks.

    Parameters
    ----------
    alpha : restart rate of the walk.
    contamination : fraction of part-V nodes flagged as anomalous.
    solver : "closed-form" (dense linear solve) or "iterative".
    """

    def __init__(
        self,
        alpha: float = DEFAULT_ALPHA,
        contamination: float = 0.05,
        solver: str = "closed-form",
        tol: float = DEFAULT_TOL,
        max_iter: int = DEFAULT_MAX_ITER,
    ):
        self.alpha = alpha
        self.contamination = contamination
        self.solver = solver
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y=None):
        """Score the graph. ``X`` is a :class:`BipartiteGraph` or a binary k x n array."""
        if isinstance(X, BipartiteGraph):
            bg = X
        else:
            bg = BipartiteGraph(check_array(X))
        self.bipartite_ = bg
        self.graph_ = bipartite_adjacency(bg)
        self.scores_ = bigraph_anomaly_scores(
            bg, self.alpha, self.solver, self.tol, self.max_iter
        )
        self.labels_ = classify(self.scores_, self.contamination)
        return self

    def fit_predict(self, X, y=None) -> np.ndarray:
        return self.fit(X).labels_


class ProxGraphRW(BaseEstimator):
    """Proximity-graph anomaly detector via a uniform-restart walk.

    Accepts raw features (an array or :class:`FeatureMatrix`), in which case
    the epsilon graph is built first, or a precomputed :class:`DenseGraph`.
    """

    def __init__(
        self,
        metric: str = "cosine",
        epsilon: float = 0.5,
        alpha: float = DEFAULT_ALPHA,
        contamination: float = 0.05,
        solver: str = "closed-form",
        tol: float = DEFAULT_TOL,
        max_iter: int = DEFAULT_MAX_ITER,
    ):
        self.metric = metric
        self.epsilon = epsilon
        self.alpha = alpha
        self.contamination = contamination
        self.solver = solver
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y=None):
        if isinstance(X, DenseGraph):
            graph = X
        elif isinstance(X, FeatureMatrix):
            graph = build_proximity_graph(X, self.metric, self.epsilon)
        else:
            graph = build_proximity_graph(check_array(X), self.metric, self.epsilon)
        self.graph_ = graph
        self.scores_ = prox_anomaly_scores(
            graph, self.alpha, self.solver, self.tol, self.max_iter
        )
        self.labels_ = classify(self.scores_, self.contamination)
        return self

    def fit_predict(self, X, y=None) -> np.ndarray:
        return self.fit(X).labels_
