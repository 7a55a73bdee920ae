"""Flagging, evasion-rate and ranking metrics used by the evaluation harness."""

from __future__ import annotations

import math

import numpy as np
import scipy.stats

from .errors import SingleClassError
from .graph import BipartiteGraph, DenseGraph


def top_quantile_order(scores: np.ndarray) -> np.ndarray:
    """Node indices sorted by descending score, ties broken by smaller index."""
    scores = np.asarray(scores, dtype=np.float64)
    return np.lexsort((np.arange(scores.shape[0]), -scores))


def classify(scores: np.ndarray, top_q: float) -> np.ndarray:
    """Flag the ``ceil(top_q * n)`` highest-scoring nodes as anomalous.

    Ties are resolved in favor of the smaller node index, which makes the
    flagged set at a smaller ``top_q`` a subset of the set at a larger one.
    """
    if not 0.0 < top_q < 1.0:
        raise ValueError("top_q must lie in (0, 1)")
    scores = np.asarray(scores, dtype=np.float64)
    n = scores.shape[0]
    m = math.ceil(top_q * n)
    flags = np.zeros(n, dtype=bool)
    flags[top_quantile_order(scores)[:m]] = True
    return flags


def evasion_rate(scores: np.ndarray, targets, top_q: float) -> float:
    """Fraction of targets absent from the flagged top-``top_q`` set.

    ``top_q = 1`` flags everything, so nothing can evade and the rate is 0.
    """
    targets = np.asarray(list(targets), dtype=np.int64)
    if targets.size == 0:
        raise ValueError("targets must be nonempty")
    if top_q >= 1.0:
        return 0.0
    flags = classify(scores, top_q)
    return float((~flags[targets]).sum() / targets.size)


def auc_score(scores: np.ndarray, labels) -> float:
    """Rank-based AUC with half credit for ties (Mann-Whitney)."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClassError("AUC needs both classes present")
    ranks = scipy.stats.rankdata(scores)  # average rank on ties = half credit
    return float((ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def budget_from_proportion(graph: DenseGraph | BipartiteGraph, targets, prop: float) -> int:
    """Edge budget ``K = round(prop * sum of target degrees)``, rounding half up.

    Degrees count unit-weight incident edges (weight > 0); for a bipartite
    graph the targets index part V.
    """
    if prop < 0:
        raise ValueError("proportion must be non-negative")
    targets = np.asarray(list(targets), dtype=np.int64)
    if isinstance(graph, BipartiteGraph):
        degrees = graph.v_degrees()
    else:
        degrees = graph.degrees()
    total = float(degrees[targets].sum())
    return int(math.floor(prop * total + 0.5))
