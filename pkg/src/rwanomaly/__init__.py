"""Random-walk anomaly detection on bipartite and proximity graphs, together
with coupled graph-space and feature-space poisoning attacks, exact reduction
gadget oracles, and an evaluation harness."""

from . import attacks, data, errors, gadgets, metrics
from .detectors import (
    BiGraphRW,
    ProxGraphRW,
    bigraph_anomaly_scores,
    bigraph_source_similarity,
    mean_neighbor_similarity,
    prox_anomaly_scores,
)
from .graph import (
    BipartiteGraph,
    DenseGraph,
    bipartite_adjacency,
    propagate,
    stationary_closed_form,
    stationary_iterative,
    transition_matrix,
)
from .metrics import auc_score, budget_from_proportion, classify, evasion_rate
from .proximity import FeatureMatrix, build_proximity_graph, similarity

__version__ = "0.1.0"

__all__ = [
    "BiGraphRW",
    "BipartiteGraph",
    "DenseGraph",
    "FeatureMatrix",
    "ProxGraphRW",
    "attacks",
    "auc_score",
    "bigraph_anomaly_scores",
    "bigraph_source_similarity",
    "bipartite_adjacency",
    "budget_from_proportion",
    "build_proximity_graph",
    "classify",
    "data",
    "errors",
    "evasion_rate",
    "gadgets",
    "mean_neighbor_similarity",
    "metrics",
    "propagate",
    "prox_anomaly_scores",
    "similarity",
    "stationary_closed_form",
    "stationary_iterative",
    "transition_matrix",
]
