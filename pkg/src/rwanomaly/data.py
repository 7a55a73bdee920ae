"""Data loading and synthetic benchmark generation.

File formats
------------
Feature CSV: a header row naming the columns, one row per entity, numeric
cells. An optional sidecar ``<path>.schema.json`` may declare
``{"discrete": [...]}`` with column names or zero-based indices.

Bipartite edge CSV: a header row, then two integer columns ``u,v`` with
zero-based part-U and part-V indices. Duplicate edges are dropped with a
warning.
"""

from __future__ import annotations

import csv
import json
import warnings
from pathlib import Path

import numpy as np

from .errors import ParseError
from .graph import BipartiteGraph, DenseGraph
from .metrics import top_quantile_order
from .proximity import FeatureMatrix


def load_feature_csv(path: str | Path) -> FeatureMatrix:
    path = Path(path)
    rows = []
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        width = len(header)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != width:
                raise ParseError(f"{path}: line {lineno}: expected {width} cells, got {len(row)}")
            parsed = []
            for name, cell in zip(header, row):
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise ParseError(
                        f"{path}: line {lineno}: column {name!r}: {cell!r} is not numeric"
                    ) from None
            rows.append(parsed)
    if not rows:
        raise ParseError(f"{path}: no data rows")
    values = np.asarray(rows, dtype=np.float64)

    discrete = [False] * width
    sidecar = path.with_name(path.name + ".schema.json")
    if sidecar.exists():
        spec = json.loads(sidecar.read_text())
        for col in spec.get("discrete", []):
            idx = header.index(col) if isinstance(col, str) else int(col)
            if not 0 <= idx < width:
                raise ParseError(f"{sidecar}: discrete column {col!r} out of range")
            discrete[idx] = True
    return FeatureMatrix.from_array(values, discrete)


def load_bipartite_edges(path: str | Path) -> BipartiteGraph:
    path = Path(path)
    seen = set()
    edges = []
    duplicates = 0
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        try:
            next(reader)  # header
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise ParseError(f"{path}: line {lineno}: expected 2 cells, got {len(row)}")
            try:
                u, v = int(row[0]), int(row[1])
            except ValueError:
                raise ParseError(f"{path}: line {lineno}: {row!r} is not an integer pair") from None
            if u < 0 or v < 0:
                raise ParseError(f"{path}: line {lineno}: indices must be non-negative")
            if (u, v) in seen:
                duplicates += 1
                continue
            seen.add((u, v))
            edges.append((u, v))
    if duplicates:
        warnings.warn(f"{path}: dropped {duplicates} duplicate edge rows", stacklevel=2)
    if not edges:
        raise ParseError(f"{path}: no edges")
    arr = np.asarray(edges, dtype=np.int64)
    m = np.zeros((arr[:, 0].max() + 1, arr[:, 1].max() + 1))
    m[arr[:, 0], arr[:, 1]] = 1.0
    return BipartiteGraph(m)


def random_undirected_graph(
    n: int, p: float, seed: int, ensure_odd_cycle: bool = False
) -> DenseGraph:
    """Erdos-Renyi 0/1 graph; optionally forces a triangle so the walk at
    alpha = 0 is aperiodic."""
    rng = np.random.default_rng(seed)
    w = (rng.random((n, n)) < p).astype(float)
    w = np.triu(w, k=1)
    w = w + w.T
    if ensure_odd_cycle and n >= 3 and np.trace(w @ w @ w) == 0:
        for u, v in ((0, 1), (1, 2), (0, 2)):
            w[u, v] = w[v, u] = 1.0
    return DenseGraph(w, directed=False)


def synthetic_bipartite(
    k: int = 100,
    n: int = 190,
    n_communities: int = 8,
    p_in: float = 0.5,
    p_out: float = 0.002,
    seed: int = 0,
) -> BipartiteGraph:
    """Community-structured reviewer/product graph.

    Both parts are split across communities; a reviewer rates products of
    its own community with probability ``p_in`` and others with ``p_out``,
    so co-reviewers of an organic product look alike to a restart walk.
    Every product is topped up to at least two community edges.
    """
    rng = np.random.default_rng(seed)
    u_comm = rng.integers(n_communities, size=k)
    v_comm = rng.integers(n_communities, size=n)
    same = u_comm[:, None] == v_comm[None, :]
    prob = np.where(same, p_in, p_out)
    m = (rng.random((k, n)) < prob).astype(float)
    for v in range(n):
        peers = np.flatnonzero(u_comm == v_comm[v])
        if peers.size == 0:
            continue
        missing = 2 - int(m[peers, v].sum())
        if missing > 0:
            off = peers[m[peers, v] == 0]
            pick = off[rng.permutation(off.size)[:missing]]
            m[pick, v] = 1.0
    return BipartiteGraph(m)


def inject_bipartite_anomalies(
    bg: BipartiteGraph,
    fraction: float = 0.1,
    seed: int = 0,
    edge_range: tuple[int, int] = (3, 6),
) -> tuple[BipartiteGraph, np.ndarray]:
    """Append fringe anomaly nodes to part V.

    Each injected node picks a uniform number of edges in ``edge_range``
    toward reviewers sampled from the bottom degree quartile of part U, so
    its neighborhood shares no community and looks mutually dissimilar.
    Returns the grown graph and boolean labels over the new part V.
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError("fraction must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    n_new = int(np.ceil(fraction * bg.n))
    degrees = bg.u_degrees()
    pool_size = max(int(np.ceil(bg.k / 4)), edge_range[1])
    pool = np.lexsort((np.arange(bg.k), degrees))[:pool_size]
    m = np.zeros((bg.k, bg.n + n_new))
    m[:, : bg.n] = bg.edges
    for j in range(n_new):
        count = int(rng.integers(edge_range[0], edge_range[1] + 1))
        chosen = pool[rng.permutation(pool.size)[:count]]
        m[chosen, bg.n + j] = 1.0
    labels = np.zeros(bg.n + n_new, dtype=bool)
    labels[bg.n :] = True
    return BipartiteGraph(m), labels


def synthetic_features(
    n: int = 500,
    d: int = 10,
    n_clusters: int = 5,
    outlier_clumps: int = 8,
    clump_size: int = 3,
    noise: float = 0.03,
    tail_fraction: float = 0.12,
    seed: int = 0,
) -> tuple[FeatureMatrix, np.ndarray]:
    """Clustered feature data with small clumps of outliers appended.

    Normal rows are placed at a controlled angle to one of ``n_clusters``
    directions spanned by the first ``d - 3`` coordinates: most are tightly
    aligned, while a ``tail_fraction`` sits at wider angles and forms the
    moderately-connected tail that fills the flagged set once targets evade.
    Every normal row keeps a real connectivity floor, so none of them drops
    to the restart-mass floor where the injected outliers live.

    Outlier rows come in tight clumps around directions in the remaining 3
    coordinates (cube corners, so clumps never cross-link); one bridge row
    per clump ties it weakly to the main component, since a fully isolated
    clump would retain its restart mass and not look anomalous at all.
    Returns the features and boolean outlier labels.
    """
    if d < 5:
        raise ValueError("need at least 5 feature dimensions")
    rng = np.random.default_rng(seed)
    n_out = outlier_clumps * clump_size
    n_norm = n - n_out
    if n_norm <= outlier_clumps:
        raise ValueError("too many outliers for the requested size")
    d_norm = d - 3
    centers = np.zeros((n_clusters, d))
    centers[:, :d_norm] = rng.normal(size=(n_clusters, d_norm))
    centers /= np.linalg.norm(centers, axis=1, keepdims=True)

    assign = rng.integers(n_clusters, size=n_norm)
    align = rng.uniform(0.80, 0.98, size=n_norm)
    tail = rng.random(n_norm) < tail_fraction
    align[tail] = rng.uniform(0.60, 0.80, size=int(tail.sum()))
    perp = np.zeros((n_norm, d))
    perp[:, :d_norm] = rng.normal(size=(n_norm, d_norm))
    perp -= (perp * centers[assign]).sum(axis=1, keepdims=True) * centers[assign]
    perp /= np.linalg.norm(perp, axis=1, keepdims=True)
    rows = align[:, None] * centers[assign] + np.sqrt(1 - align[:, None] ** 2) * perp
    rows += rng.normal(size=(n_norm, d)) * noise

    corners = np.array(
        [[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)], dtype=float
    ) / np.sqrt(3.0)  # pairwise |cos| <= 1/3, so clumps never cross-link
    rng.shuffle(corners)
    out_centers = np.zeros((outlier_clumps, d))
    for c in range(outlier_clumps):
        out_centers[c, d_norm:] = corners[c % 8]
        if c >= 8:  # more clumps than corners: jitter repeats apart
            out_centers[c, d_norm:] += rng.normal(size=3) * 0.2
            out_centers[c] /= np.linalg.norm(out_centers[c])
    out_rows = np.repeat(out_centers, clump_size, axis=0)
    out_rows = out_rows + rng.normal(size=(n_out, d)) * 0.05

    # cluster and clump directions live in orthogonal coordinate blocks, so
    # the mixing weights below are the bridge's cosines to either side
    for c in range(outlier_clumps):
        bridge = 0.62 * centers[c % n_clusters] + 0.62 * out_centers[c]
        rows[c] = bridge + rng.normal(size=d) * 0.02

    values = np.vstack([rows, out_rows])
    labels = np.zeros(n, dtype=bool)
    labels[n_norm:] = True
    return FeatureMatrix.from_array(values), labels


def sample_targets(scores: np.ndarray, pool_size: int, count: int, seed: int) -> np.ndarray:
    """Uniform sample of ``count`` nodes from the ``pool_size`` top scorers."""
    scores = np.asarray(scores)
    if not 0 < count <= pool_size <= scores.shape[0]:
        raise ValueError("need count <= pool_size <= n")
    pool = top_quantile_order(scores)[:pool_size]
    rng = np.random.default_rng(seed)
    return np.sort(pool[rng.permutation(pool_size)[:count]])
