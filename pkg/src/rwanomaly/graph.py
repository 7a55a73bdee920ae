"""Graph containers and the random-walk-with-restart solver.

The walk operator is built by normalizing each row of the weight matrix;
rows of isolated (dangling) nodes are left at zero, so walk mass leaks
there instead of being teleported. Propagation runs through the transpose
of the row-normalized matrix: a node collects mass from its predecessors,
each predecessor handing over ``1 / out_degree`` of its own mass.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionMismatchError, NonConvergenceWarning, SingularSystemError

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 1000


def _frozen_float_array(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=np.float64, order="C")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} must be finite")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class DenseGraph:
    """Weighted adjacency on ``n`` nodes, weights in [0, 1], zero diagonal.

    Instances are immutable; all operations below are pure functions of the
    graph, so graphs can be shared freely across threads.
    """

    weights: np.ndarray
    directed: bool = False

    def __post_init__(self):
        w = _frozen_float_array(self.weights, "weights")
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError("weights must be a square matrix")
        if (w < 0).any() or (w > 1).any():
            raise ValueError("weights must lie in [0, 1]")
        if np.diagonal(w).any():
            raise ValueError("diagonal must be exactly zero")
        if not self.directed and not np.array_equal(w, w.T):
            raise ValueError("undirected graph requires exactly symmetric weights")
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    def degrees(self) -> np.ndarray:
        """Unit-weight degree: number of incident edges with weight > 0."""
        counts = (self.weights > 0).sum(axis=1)
        if self.directed:
            counts = counts + (self.weights > 0).sum(axis=0)
        return counts.astype(np.int64)

    def weighted_degrees(self) -> np.ndarray:
        return self.weights.sum(axis=1)

    def edge_count(self) -> int:
        nnz = int((self.weights > 0).sum())
        return nnz if self.directed else nnz // 2


@dataclass(frozen=True)
class BipartiteGraph:
    """Binary edge matrix between part U (rows, size k) and part V (cols, size n)."""

    edges: np.ndarray

    def __post_init__(self):
        m = _frozen_float_array(self.edges, "edges")
        if m.ndim != 2:
            raise ValueError("edges must be a k x n matrix")
        if not np.isin(m, (0.0, 1.0)).all():
            raise ValueError("edges must contain only 0 and 1")
        object.__setattr__(self, "edges", m)

    @property
    def k(self) -> int:
        return self.edges.shape[0]

    @property
    def n(self) -> int:
        return self.edges.shape[1]

    def u_degrees(self) -> np.ndarray:
        return self.edges.sum(axis=1).astype(np.int64)

    def v_degrees(self) -> np.ndarray:
        return self.edges.sum(axis=0).astype(np.int64)


def bipartite_adjacency(bg: BipartiteGraph) -> DenseGraph:
    """Block adjacency [[0, M], [M^T, 0]]; nodes ordered U (0..k-1) then V (k..k+n-1)."""
    k, n = bg.k, bg.n
    w = np.zeros((k + n, k + n))
    w[:k, k:] = bg.edges
    w[k:, :k] = bg.edges.T
    return DenseGraph(w, directed=False)


def transition_matrix(graph: DenseGraph | np.ndarray) -> np.ndarray:
    """Row-normalize the weights; rows of dangling nodes stay all-zero."""
    w = graph.weights if isinstance(graph, DenseGraph) else np.asarray(graph, dtype=np.float64)
    row_sums = w.sum(axis=1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        p = np.where(row_sums > 0, w / row_sums, 0.0)
    return p


def restart_uniform(n: int) -> np.ndarray:
    return np.full(n, 1.0 / n)


def restart_single(n: int, node: int) -> np.ndarray:
    r = np.zeros(n)
    r[node] = 1.0
    return r


def _check_restart(r: np.ndarray) -> np.ndarray:
    r = np.asarray(r, dtype=np.float64)
    sums = r.sum(axis=0)
    if (r < 0).any() or np.max(np.abs(sums - 1.0)) > 1e-12:
        raise ValueError("restart vector must be non-negative and sum to 1")
    return r


def _check_shapes(p: np.ndarray, vec: np.ndarray):
    if p.ndim != 2 or p.shape[0] != p.shape[1] or vec.shape[0] != p.shape[0]:
        raise DimensionMismatchError(
            f"transition matrix {p.shape} does not match vector {vec.shape}"
        )


def propagate(p: np.ndarray, s: np.ndarray, r: np.ndarray, alpha: float) -> np.ndarray:
    """One walk step: ``alpha * r + (1 - alpha) * P^T s``.

    ``s`` and ``r`` may be matrices whose columns are independent walks
    (one restart vector per column).
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    s = np.asarray(s, dtype=np.float64)
    _check_shapes(p, s)
    return alpha * r + (1.0 - alpha) * (p.T @ s)


def stationary_iterative(
    p: np.ndarray,
    r: np.ndarray,
    alpha: float,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> np.ndarray:
    """Iterate :func:`propagate` from ``s0 = r`` until the L1 step shrinks below ``tol``.

    For ``alpha > 0`` the map is a contraction and always converges; for
    ``alpha = 0`` the iteration may stall, in which case a
    :class:`NonConvergenceWarning` is emitted and the last iterate returned.
    """
    r = _check_restart(r)
    _check_shapes(p, r)
    s = r.copy()
    for _ in range(max_iter):
        s_next = propagate(p, s, r, alpha)
        step = np.abs(s_next - s).sum(axis=0)
        s = s_next
        if np.max(step) < tol:
            return s
    warnings.warn(
        f"stationary iteration hit max_iter={max_iter} with residual {np.max(step):.3e}",
        NonConvergenceWarning,
        stacklevel=2,
    )
    return s


def stationary_closed_form(p: np.ndarray, r: np.ndarray, alpha: float) -> np.ndarray:
    """Solve ``(I - (1 - alpha) P^T) s = alpha r`` directly.

    ``r`` may carry several restart vectors as columns; one factorization
    serves them all. Raises :class:`SingularSystemError` when the system is
    singular (``alpha = 0`` on a stochastic matrix has no unique solution
    of this form and is refused outright).
    """
    if not 0.0 < alpha <= 1.0:
        raise SingularSystemError("closed form requires alpha in (0, 1]")
    r = _check_restart(r)
    _check_shapes(p, r)
    a = np.eye(p.shape[0]) - (1.0 - alpha) * p.T
    try:
        return scipy.linalg.solve(a, alpha * r)
    except scipy.linalg.LinAlgError as exc:  # pragma: no cover - defensive
        raise SingularSystemError(str(exc)) from exc


def fixed_point_residual(p: np.ndarray, s: np.ndarray, r: np.ndarray, alpha: float) -> float:
    """L1 distance between ``s`` and one propagation step applied to it."""
    return float(np.abs(s - propagate(p, s, r, alpha)).sum(axis=0).max())
