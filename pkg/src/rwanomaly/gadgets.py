"""Reduction gadgets used as exact numeric oracles, plus a brute-force solver.

The covering gadget (directed, built from a 3-set-cover instance) has
hand-derivable stationary values for every node under a uniform-restart walk
with ``alpha = 1/|subsets|``; :func:`expected_stationary` returns them in
closed form, which makes the gadget a ground-truth fixture for the solver.
The clique gadget (undirected, built from a k-clique instance) pins every
core node's degree at ``n' + k - 2`` so that, at ``alpha = 0``, stationary
mass is exactly degree-proportional.

:func:`brute_force_attack` exhaustively enumerates bounded edge
modifications and rescans the exact model, serving as the optimality oracle
for the gradient-based attacks on tiny instances.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import GadgetInstanceError, SearchSpaceError
from .graph import DenseGraph, stationary_closed_form, stationary_iterative, transition_matrix


@dataclass(frozen=True)
class SetCoverInstance:
    """A 3-set-cover instance: triples over the universe plus a budget."""

    n_elements: int
    subsets: tuple[tuple[int, int, int], ...]
    budget: int

    def __post_init__(self):
        covered = set()
        for triple in self.subsets:
            if len(triple) != 3 or len(set(triple)) != 3:
                raise GadgetInstanceError("every subset must hold exactly 3 distinct elements")
            if any(not 0 <= e < self.n_elements for e in triple):
                raise GadgetInstanceError("subset element out of range")
            covered.update(triple)
        if covered != set(range(self.n_elements)):
            raise GadgetInstanceError("subsets must cover the whole universe")
        if self.budget < 0:
            raise GadgetInstanceError("budget must be non-negative")

    @property
    def n_subsets(self) -> int:
        return len(self.subsets)

    def containing(self, element: int) -> tuple[int, ...]:
        """Indices of the subsets that contain ``element``."""
        return tuple(j for j, triple in enumerate(self.subsets) if element in triple)


def random_cover_instance(
    n_elements: int, n_subsets: int, budget: int, seed: int
) -> SetCoverInstance:
    """Random triples, patched so the universe is fully covered."""
    if n_elements < 3:
        raise GadgetInstanceError("need at least 3 elements to form triples")
    rng = np.random.default_rng(seed)
    triples = []
    uncovered = list(range(n_elements))
    rng.shuffle(uncovered)
    while uncovered:  # greedy cover first, so any n_subsets >= ceil(n/3) works
        head = uncovered[:3]
        while len(head) < 3:
            extra = int(rng.integers(n_elements))
            if extra not in head:
                head.append(extra)
        triples.append(tuple(sorted(head)))
        uncovered = uncovered[3:]
    if len(triples) > n_subsets:
        raise GadgetInstanceError(f"need at least {len(triples)} subsets to cover")
    while len(triples) < n_subsets:
        triples.append(tuple(sorted(rng.choice(n_elements, size=3, replace=False).tolist())))
    return SetCoverInstance(n_elements, tuple(triples), budget)


@dataclass(frozen=True)
class CoveringGadget:
    """Directed gadget; node layout is role-major and frozen:

    elements | subsets | triggers | boosters | hubs (3) | fillers | leaves-a | leaves-b

    Each subset node points at its 3 elements; each booster points at all 3
    hubs; each filler points at its element and its private pair of leaves.
    The only addable edges run from a trigger to its subset node.
    """

    graph: DenseGraph
    instance: SetCoverInstance
    alpha: float
    targets: tuple[int, ...]
    theta: int
    budget: int
    element_nodes: np.ndarray
    subset_nodes: np.ndarray
    trigger_nodes: np.ndarray
    booster_nodes: np.ndarray
    hub_nodes: np.ndarray
    filler_nodes: np.ndarray
    leaf_a_nodes: np.ndarray
    leaf_b_nodes: np.ndarray
    filler_owner: np.ndarray
    addable: tuple[tuple[int, int], ...]

    @property
    def n(self) -> int:
        return self.graph.n


def covering_gadget(instance: SetCoverInstance, allow_small: bool = False) -> CoveringGadget:
    """Build the directed gadget for a 3-set-cover instance.

    Instances with fewer than 4 subsets break the separation guarantees of
    the construction; they are refused unless ``allow_small`` (useful for
    shape-only checks).
    """
    m = instance.n_subsets
    if m < 4 and not allow_small:
        raise GadgetInstanceError("construction assumes at least 4 subsets")
    nu = instance.n_elements
    fan = [m - len(instance.containing(e)) for e in range(nu)]
    if any(f < 0 for f in fan):
        raise GadgetInstanceError("an element appears in more subsets than exist")
    n_fill = sum(fan)

    elements = np.arange(nu)
    subsets = nu + np.arange(m)
    triggers = nu + m + np.arange(m)
    boosters = nu + 2 * m + np.arange(m)
    hubs = nu + 3 * m + np.arange(3)
    fill_base = nu + 3 * m + 3
    fillers = fill_base + np.arange(n_fill)
    leaves_a = fill_base + n_fill + np.arange(n_fill)
    leaves_b = fill_base + 2 * n_fill + np.arange(n_fill)
    n = nu + 3 * m + 3 + 3 * n_fill

    w = np.zeros((n, n))
    for j, triple in enumerate(instance.subsets):
        for e in triple:
            w[subsets[j], elements[e]] = 1.0
    for b in boosters:
        for h in hubs:
            w[b, h] = 1.0
    owner = []
    pos = 0
    for e in range(nu):
        for _ in range(fan[e]):
            w[fillers[pos], elements[e]] = 1.0
            w[fillers[pos], leaves_a[pos]] = 1.0
            w[fillers[pos], leaves_b[pos]] = 1.0
            owner.append(e)
            pos += 1

    return CoveringGadget(
        graph=DenseGraph(w, directed=True),
        instance=instance,
        alpha=1.0 / m,
        targets=tuple(int(e) for e in elements),
        theta=n - nu,
        budget=instance.budget,
        element_nodes=elements,
        subset_nodes=subsets,
        trigger_nodes=triggers,
        booster_nodes=boosters,
        hub_nodes=hubs,
        filler_nodes=fillers,
        leaf_a_nodes=leaves_a,
        leaf_b_nodes=leaves_b,
        filler_owner=np.asarray(owner, dtype=np.int64),
        addable=tuple((int(triggers[j]), int(subsets[j])) for j in range(m)),
    )


def expected_stationary(gadget: CoveringGadget, added_subsets) -> np.ndarray:
    """Closed-form stationary values for the gadget with some trigger edges added.

    ``added_subsets`` lists subset indices whose trigger edge is present.
    Derivation: a node with no predecessors sits at ``alpha / n``; every
    other node adds ``(1 - alpha) / 3`` of each predecessor's value (all
    feeding nodes have out-degree 3, except a connected trigger with
    out-degree 1).
    """
    m = gadget.instance.n_subsets
    if m < 4:
        raise GadgetInstanceError("closed-form verification assumes at least 4 subsets")
    added = sorted({int(j) for j in added_subsets})
    if any(not 0 <= j < m for j in added):
        raise GadgetInstanceError("added subset index out of range")
    n = gadget.n
    base = 1.0 / (m * n)
    expected = np.empty(n)
    expected[gadget.trigger_nodes] = base
    expected[gadget.booster_nodes] = base
    expected[gadget.filler_nodes] = base
    expected[gadget.leaf_a_nodes] = (4.0 - 1.0 / m) / (3.0 * m * n)
    expected[gadget.leaf_b_nodes] = (4.0 - 1.0 / m) / (3.0 * m * n)
    expected[gadget.hub_nodes] = (m + 2.0) / (3.0 * m * n)
    expected[gadget.subset_nodes] = base
    expected[gadget.subset_nodes[added]] = (2.0 * m - 1.0) / (m**2 * n)
    for e in range(gadget.instance.n_elements):
        hits = sum(1 for j in added if e in gadget.instance.subsets[j])
        expected[gadget.element_nodes[e]] = (m + 2.0 + hits * (1.0 - 1.0 / m) ** 2) / (
            3.0 * m * n
        )
    return expected


def with_added_edges(gadget: CoveringGadget, added_subsets) -> DenseGraph:
    """The gadget graph with the trigger edges of ``added_subsets`` present."""
    w = gadget.graph.weights.copy()
    for j in added_subsets:
        trig, sub = gadget.addable[int(j)]
        w[trig, sub] = 1.0
    return DenseGraph(w, directed=True)


def separation_holds(stationary: np.ndarray, gadget: CoveringGadget, tol: float = 1e-12) -> bool:
    """True when every element node strictly out-scores every other node.

    An uncovered element ties the hub value exactly, so solver rounding
    noise (~1e-16 relative) must not decide the comparison; ``tol`` sits far
    below the smallest genuine margin ``(1 - 1/m)^2 / (3 m n)``.
    """
    elements = np.asarray(gadget.element_nodes)
    others = np.setdiff1d(np.arange(gadget.n), elements)
    return float(stationary[elements].min()) > float(stationary[others].max()) + tol


@dataclass(frozen=True)
class CliqueGadget:
    """Undirected gadget; node layout is role-major and frozen:

    core (the input graph's nodes) | hub | leaves (grouped by core node)

    The hub joins every core node; each core node gets a private leaf fan
    sized to pin its total degree at ``n' + k - 2``. Only original core
    edges are removable.
    """

    graph: DenseGraph
    k: int
    alpha: float
    targets: tuple[int, ...]
    theta: int
    budget: int
    core_nodes: np.ndarray
    hub_node: int
    leaf_nodes: np.ndarray
    leaf_owner: np.ndarray
    removable: tuple[tuple[int, int], ...]

    @property
    def n(self) -> int:
        return self.graph.n


def clique_gadget(core: DenseGraph, k: int) -> CliqueGadget:
    """Build the undirected gadget for a k-clique instance.

    Raises :class:`GadgetInstanceError` when some core degree exceeds
    ``n' + k - 3`` (negative leaf fan: the instance is not representable).
    """
    if core.directed:
        raise GadgetInstanceError("the clique construction expects an undirected graph")
    if not np.isin(core.weights, (0.0, 1.0)).all():
        raise GadgetInstanceError("the core graph must be unweighted")
    n_core = core.n
    deg = core.degrees()
    fan = n_core + k - deg - 3
    if (fan < 0).any():
        raise GadgetInstanceError(
            f"negative leaf fan for nodes {np.flatnonzero(fan < 0).tolist()}"
        )
    n = n_core + 1 + int(fan.sum())
    w = np.zeros((n, n))
    w[:n_core, :n_core] = core.weights
    hub = n_core
    w[hub, :n_core] = 1.0
    w[:n_core, hub] = 1.0
    owner = []
    pos = n_core + 1
    for i in range(n_core):
        for _ in range(int(fan[i])):
            w[i, pos] = w[pos, i] = 1.0
            owner.append(i)
            pos += 1
    iu, iv = np.nonzero(np.triu(core.weights, k=1))
    return CliqueGadget(
        graph=DenseGraph(w, directed=False),
        k=k,
        alpha=0.0,
        targets=(hub,),
        theta=n - (n_core - k + 1),
        budget=k * (k - 1) // 2,
        core_nodes=np.arange(n_core),
        hub_node=hub,
        leaf_nodes=np.arange(n_core + 1, n),
        leaf_owner=np.asarray(owner, dtype=np.int64),
        removable=tuple((int(u), int(v)) for u, v in zip(iu, iv)),
    )


def uniform_walk_scorer(alpha: float, solver: str = "closed-form", max_iter: int = 20000):
    """Anomaly scorer ``1 - stationary`` under a uniform restart, as a callable."""

    def score(graph: DenseGraph) -> np.ndarray:
        p = transition_matrix(graph)
        r = np.full(graph.n, 1.0 / graph.n)
        if solver == "closed-form":
            s = stationary_closed_form(p, r, alpha)
        else:
            s = stationary_iterative(p, r, alpha, tol=1e-13, max_iter=max_iter)
        return 1.0 - s

    return score


@dataclass
class BruteForceResult:
    best_modifications: tuple
    best_score: float
    threshold_achievable: bool | None
    threshold_modifications: tuple | None
    evaluated: int


def _apply_modifications(graph: DenseGraph, mods) -> DenseGraph:
    w = graph.weights.copy()
    for kind, (u, v) in mods:
        value = 1.0 if kind == "add" else 0.0
        w[u, v] = value
        if not graph.directed:
            w[v, u] = value
    return DenseGraph(w, directed=graph.directed)


def brute_force_attack(
    graph: DenseGraph,
    targets,
    budget: int,
    addable,
    removable,
    score_fn,
    theta: int | None = None,
    max_combinations: int = 2_000_000,
) -> BruteForceResult:
    """Exhaustively search all modification sets of size <= budget.

    Enumeration is lexicographic over the candidate list (additions first),
    by ascending set size, with no pruning beyond the budget, so the
    returned minimizer is exact; score ties keep the earlier set. When
    ``theta`` is given, the result also reports whether some set pushes at
    least ``theta`` nodes strictly above every target, and the best such set.
    """
    targets = np.asarray(list(targets), dtype=np.int64)
    candidates = [("add", (int(u), int(v))) for u, v in sorted(addable)]
    candidates += [("remove", (int(u), int(v))) for u, v in sorted(removable)]
    total = sum(math.comb(len(candidates), j) for j in range(min(budget, len(candidates)) + 1))
    if total > max_combinations:
        raise SearchSpaceError(f"{total} combinations exceed the {max_combinations} guard")

    best_mods, best_score = (), math.inf
    thr_mods, thr_score = None, math.inf
    evaluated = 0
    for size in range(min(budget, len(candidates)) + 1):
        for combo in itertools.combinations(candidates, size):
            scores = score_fn(_apply_modifications(graph, combo))
            objective = float(scores[targets].sum())
            evaluated += 1
            if objective < best_score:
                best_mods, best_score = combo, objective
            if theta is not None:
                above = int((scores > scores[targets].max()).sum())
                if above >= theta and objective < thr_score:
                    thr_mods, thr_score = combo, objective
    return BruteForceResult(
        best_modifications=best_mods,
        best_score=best_score,
        threshold_achievable=None if theta is None else thr_mods is not None,
        threshold_modifications=thr_mods,
        evaluated=evaluated,
    )
