"""Feature containers and similarity-threshold (epsilon) graph construction."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateVectorWarning
from .graph import DenseGraph

METRICS = ("cosine", "correlation")


@dataclass(frozen=True)
class FeatureMatrix:
    """n entities x d raw features, plus per-column kind and observed bounds.

    ``discrete`` marks columns that hold integer-valued measurements; attacks
    round those columns back to integers after optimizing. ``col_min`` /
    ``col_max`` are the per-column bounds observed in the data and act as the
    projection box for feature perturbations.
    """

    values: np.ndarray
    discrete: tuple[bool, ...]
    col_min: np.ndarray
    col_max: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.float64, order="C")
        if vals.ndim != 2:
            raise ValueError("values must be an n x d matrix")
        if not np.isfinite(vals).all():
            raise ValueError("features must be finite")
        if len(self.discrete) != vals.shape[1]:
            raise ValueError("discrete mask length must match the column count")
        for j, disc in enumerate(self.discrete):
            if disc and not np.array_equal(vals[:, j], np.round(vals[:, j])):
                raise ValueError(f"column {j} is marked discrete but holds non-integers")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "col_min", np.asarray(self.col_min, dtype=np.float64))
        object.__setattr__(self, "col_max", np.asarray(self.col_max, dtype=np.float64))

    @classmethod
    def from_array(cls, values, discrete=None) -> "FeatureMatrix":
        """Wrap a raw array, observing bounds from the data itself."""
        vals = np.asarray(values, dtype=np.float64)
        if vals.ndim != 2:
            raise ValueError("values must be an n x d matrix")
        if discrete is None:
            discrete = (False,) * vals.shape[1]
        return cls(vals, tuple(bool(b) for b in discrete), vals.min(axis=0), vals.max(axis=0))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def with_values(self, values: np.ndarray) -> "FeatureMatrix":
        """Same schema and bounds, new values (used for attacked copies)."""
        return FeatureMatrix(values, self.discrete, self.col_min, self.col_max)


def _check_metric(metric: str):
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}")


def similarity(x: np.ndarray, y: np.ndarray, metric: str = "cosine") -> float:
    """Similarity of two feature rows; zero-norm (or constant, for correlation)
    vectors yield 0."""
    _check_metric(metric)
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("similarity expects two vectors of equal length")
    if metric == "correlation":
        x = x - x.mean()
        y = y - y.mean()
    nx, ny = np.linalg.norm(x), np.linalg.norm(y)
    if nx == 0.0 or ny == 0.0:
        if metric == "correlation":
            warnings.warn(
                "correlation of a constant vector is undefined; using 0",
                DegenerateVectorWarning,
                stacklevel=2,
            )
        return 0.0
    return float(x @ y / (nx * ny))


def similarity_matrix(values: np.ndarray, metric: str = "cosine") -> np.ndarray:
    """Pairwise similarities of all rows. Degenerate rows get similarity 0."""
    _check_metric(metric)
    x = np.asarray(values, dtype=np.float64)
    if metric == "correlation":
        x = x - x.mean(axis=1, keepdims=True)
    norms = np.linalg.norm(x, axis=1)
    safe = np.where(norms > 0, norms, 1.0)
    unit = x / safe[:, None]
    sims = unit @ unit.T
    sims[norms == 0, :] = 0.0
    sims[:, norms == 0] = 0.0
    return sims


def build_proximity_graph(
    features: FeatureMatrix | np.ndarray, metric: str = "cosine", epsilon: float = 0.5
) -> DenseGraph:
    """Undirected graph with ``w_ij = sim(x_i, x_j)`` wherever the similarity
    strictly exceeds ``epsilon``.

    Self-loops are excluded, and weights are clamped into [0, 1] so that a
    negative epsilon cannot introduce negative weights.
    """
    if not -1.0 <= epsilon <= 1.0:
        raise ValueError("epsilon must lie in [-1, 1]")
    values = features.values if isinstance(features, FeatureMatrix) else np.asarray(features)
    if values.shape[0] < 2:
        raise ValueError("need at least two rows to build a graph")
    sims = similarity_matrix(values, metric)
    w = np.where(sims > epsilon, sims, 0.0)
    np.fill_diagonal(w, 0.0)
    w = np.clip(w, 0.0, 1.0)
    w = (w + w.T) / 2.0  # exact symmetry against float noise
    return DenseGraph(w, directed=False)
