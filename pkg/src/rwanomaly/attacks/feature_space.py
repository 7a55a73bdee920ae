"""Feature-space attacks on the proximity-graph detector, optionally guided
by a prior (virtual) graph-space attack.

The guidance is used twice. First, the attack-node set is read off the
graph attack's modified edges: their non-target endpoints, ranked by how
much perturbation mass they carry. Second, the "graph" objective asks the
features to realize the attacked graph directly, matching each guided
pair's similarity to its prescribed attacked weight; this objective is
single-level and needs no walk solve at all.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from ..detectors import DEFAULT_ALPHA, prox_anomaly_scores
from ..errors import EmptyGuidanceError, NoProgressWarning
from ..graph import DenseGraph, stationary_closed_form, transition_matrix
from ..proximity import FeatureMatrix, build_proximity_graph, similarity
from .autograd import FeatureLoss
from .common import GraphAttackOutcome, make_step_rule


@dataclass(frozen=True)
class AttackNodeSet:
    """Controlled rows of the feature matrix, disjoint from the targets."""

    nodes: tuple[int, ...]
    origin: str  # "graph-guided" or "random"

    def __len__(self) -> int:
        return len(self.nodes)


def select_attack_nodes_guided(
    outcome: GraphAttackOutcome, targets, k_prime: int
) -> AttackNodeSet:
    """Non-target endpoints of the guiding attack's modified edges, keeping
    the ``k_prime`` heaviest by incident perturbation mass (ties by index)."""
    target_set = {int(t) for t in targets}
    endpoints = {node for edge in outcome.modified_edges for node in edge} - target_set
    if not endpoints:
        raise EmptyGuidanceError("the guiding attack touched no non-target node")
    mass = outcome.perturbation.sum(axis=1)
    ranked = sorted(endpoints, key=lambda node: (-mass[node], node))
    return AttackNodeSet(tuple(sorted(ranked[:k_prime])), "graph-guided")


def select_attack_nodes_random(candidates, targets, k_prime: int, seed: int) -> AttackNodeSet:
    """Uniform sample of ``k_prime`` non-target candidates."""
    target_set = {int(t) for t in targets}
    pool = sorted({int(c) for c in candidates} - target_set)
    if not pool:
        warnings.warn("no non-target candidates to attack", stacklevel=2)
        return AttackNodeSet((), "random")
    rng = np.random.default_rng(seed)
    take = min(k_prime, len(pool))
    chosen = (np.asarray(pool)[rng.permutation(len(pool))[:take]]).tolist()
    return AttackNodeSet(tuple(sorted(int(c) for c in chosen)), "random")


def guided_pairs(
    outcome: GraphAttackOutcome, nodes, targets=()
) -> tuple[np.ndarray, np.ndarray]:
    """Pairs with discrete perturbation mass incident to the attack nodes,
    with the attacked weights they should be pushed toward."""
    node_set = {int(z) for z in nodes}
    pairs = [
        (u, v)
        for u, v in outcome.modified_edges
        if u in node_set or v in node_set
    ]
    if not pairs:
        warnings.warn("no guided pairs touch the attack nodes; alignment loss is 0", stacklevel=2)
        return np.zeros((0, 2), dtype=np.int64), np.zeros(0)
    arr = np.asarray(pairs, dtype=np.int64)
    wanted = outcome.attacked_graph.weights[arr[:, 0], arr[:, 1]]
    return arr, wanted


def graph_alignment_loss(
    values: np.ndarray, outcome: GraphAttackOutcome, nodes, metric: str = "cosine"
) -> float:
    """Sum of |sim(x_i, x_j) - attacked weight| over the guided pairs."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        pairs, wanted = guided_pairs(outcome, nodes)
    total = 0.0
    for (i, j), w in zip(pairs, wanted):
        total += abs(similarity(values[i], values[j], metric) - w)
    return total


def anomaly_loss(
    features: FeatureMatrix | np.ndarray,
    targets,
    metric: str = "cosine",
    epsilon: float = 0.5,
    alpha: float = DEFAULT_ALPHA,
) -> float:
    """Exact (converged) sum of target anomaly scores for a feature matrix."""
    graph = build_proximity_graph(features, metric, epsilon)
    scores = prox_anomaly_scores(graph, alpha)
    targets = np.asarray(list(targets), dtype=np.int64)
    return float(scores[targets].sum())


def round_features(values: np.ndarray, schema: FeatureMatrix) -> np.ndarray:
    """Round discrete columns to integers, then clip back into the column box."""
    out = np.array(values, dtype=np.float64)
    for j, disc in enumerate(schema.discrete):
        if disc:
            out[:, j] = np.floor(out[:, j] + 0.5)
    return np.clip(out, schema.col_min, schema.col_max)


@dataclass
class FeatureAttackOutcome:
    """Result record of one feature-space attack run."""

    features: FeatureMatrix
    attack_nodes: AttackNodeSet
    targets: tuple[int, ...]
    loss_trace: np.ndarray
    graph_after: DenseGraph
    scores_before: np.ndarray
    scores_after: np.ndarray


class FeatureSpaceAttack(BaseEstimator):
    """PGD over the features of the attack nodes.

    Parameters
    ----------
    objective : "anomaly" minimizes the targets' scores through the detector
        ("alterI" or "cf" refresh, see ``variant``); "graph" minimizes the
        alignment loss against a guiding graph attack.
    band : width of the straight-through window below the similarity
        threshold that lets the optimizer create edges.
    """

    def __init__(
        self,
        objective: str = "anomaly",
        variant: str = "alterI",
        epochs: int = 500,
        lr: float = 1.0,
        metric: str = "cosine",
        epsilon: float = 0.5,
        alpha: float = DEFAULT_ALPHA,
        band: float = 0.05,
        step_rule: str = "adam",
        seed: int = 0,
    ):
        self.objective = objective
        self.variant = variant
        self.epochs = epochs
        self.lr = lr
        self.metric = metric
        self.epsilon = epsilon
        self.alpha = alpha
        self.band = band
        self.step_rule = step_rule
        self.seed = seed

    def _finish(self, features: FeatureMatrix, values, nodes, targets, trace) -> FeatureAttackOutcome:
        attacked = features.with_values(round_features(values, features))
        graph_before = build_proximity_graph(features, self.metric, self.epsilon)
        graph_after = build_proximity_graph(attacked, self.metric, self.epsilon)
        return FeatureAttackOutcome(
            features=attacked,
            attack_nodes=nodes,
            targets=tuple(int(t) for t in targets),
            loss_trace=np.asarray(trace, dtype=np.float64),
            graph_after=graph_after,
            scores_before=prox_anomaly_scores(graph_before, self.alpha),
            scores_after=prox_anomaly_scores(graph_after, self.alpha),
        )

    def run(
        self,
        features: FeatureMatrix,
        attack_nodes: AttackNodeSet,
        targets,
        guidance: GraphAttackOutcome | None = None,
    ) -> FeatureAttackOutcome:
        targets = [int(t) for t in targets]
        if set(attack_nodes.nodes) & set(targets):
            raise ValueError("attack nodes must be disjoint from the targets")
        if len(attack_nodes) == 0:
            return self._finish(features, features.values, attack_nodes, targets, [])

        pair_arr = wanted = None
        if self.objective == "graph":
            if guidance is None:
                raise ValueError("the graph objective needs a guiding attack outcome")
            pair_arr, wanted = guided_pairs(guidance, attack_nodes.nodes)
            if pair_arr.shape[0] == 0:
                return self._finish(features, features.values, attack_nodes, targets, [0.0])

        carry = None
        if self.objective == "anomaly" and self.variant == "alterI":
            clean = build_proximity_graph(features, self.metric, self.epsilon)
            carry = stationary_closed_form(
                transition_matrix(clean), np.full(clean.n, 1.0 / clean.n), self.alpha
            )
        loss_fn = FeatureLoss(
            features.values,
            attack_nodes.nodes,
            targets,
            self.metric,
            self.epsilon,
            self.alpha,
            objective=self.objective,
            variant=self.variant,
            band=self.band,
            carry=carry,
            guided_pairs=pair_arr,
            guided_weights=wanted,
        )
        rows = np.asarray(attack_nodes.nodes, dtype=np.int64)
        lo = features.col_min
        hi = features.col_max
        x_free = features.values[rows].copy()
        rule = make_step_rule(self.step_rule, self.lr)
        trace = []
        for _ in range(self.epochs):
            value, grad, sim = loss_fn.loss_and_grad(x_free)
            trace.append(value)
            x_free = np.clip(rule.step(x_free, grad), lo, hi)
            if self.objective == "anomaly" and self.variant == "alterI":
                loss_fn.advance(sim)
        if len(trace) >= 10:
            tail = max(1, len(trace) // 10)
            if min(trace[-tail:]) >= min(trace[:-tail]):
                warnings.warn(
                    "attack loss did not improve over the final epochs",
                    NoProgressWarning,
                    stacklevel=2,
                )
        values = features.values.copy()
        values[rows] = x_free
        return self._finish(features, values, attack_nodes, targets, trace)
