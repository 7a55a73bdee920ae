"""Experiment orchestration: budget sweeps over attack methods with
reproducible per-row seeding and a JSON-lines + CSV report.

Every report row is a pure function of (config, seed, trial): all randomness
is drawn from streams keyed by the trial, the budget position, and a fixed
per-method id, so any single row can be regenerated in isolation and
byte-compared (wall-clock time is carried along but excluded from the
canonical row serialization).
"""

from __future__ import annotations

import configparser
import csv
import dataclasses
import hashlib
import json
import time
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .attacks.feature_space import (
    FeatureSpaceAttack,
    select_attack_nodes_guided,
    select_attack_nodes_random,
)
from .attacks.graph_space import (
    DegreeAddAttack,
    GraphSpaceAttack,
    RandomAddAttack,
    rescore,
)
from .data import (
    inject_bipartite_anomalies,
    load_bipartite_edges,
    load_feature_csv,
    sample_targets,
    synthetic_bipartite,
    synthetic_features,
)
from .detectors import bigraph_anomaly_scores, prox_anomaly_scores
from .metrics import budget_from_proportion, evasion_rate
from .proximity import build_proximity_graph

GRAPH_METHODS = ("alterI", "cf", "rnd-add", "deg-add")
FEATURE_METHODS = ("vanilla", "g-guided-alterI", "g-guided-cf", "g-guided-plus")

# frozen ids keep per-row seeding independent of the configured method list
_METHOD_IDS = {
    "alterI": 1,
    "cf": 2,
    "rnd-add": 3,
    "deg-add": 4,
    "vanilla": 5,
    "g-guided-alterI": 6,
    "g-guided-cf": 7,
    "g-guided-plus": 8,
}
_STREAM_DATA = 101
_STREAM_INJECT = 102
_STREAM_TARGETS = 103
_STREAM_GUIDE = 104

VOLATILE_FIELDS = ("runtime_s",)


@dataclass(frozen=True)
class ExperimentConfig:
    model: str = "prox"
    trials: int = 1
    seed: int = 0
    output: str = "report"
    pool_size: int = 100
    n_targets: int = 20
    budgets: tuple[float, ...] = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)
    methods: tuple[str, ...] = GRAPH_METHODS
    # data source: "synthetic", or a CSV path via features_path / edges_path
    source: str = "synthetic"
    features_path: str = ""
    edges_path: str = ""
    # synthetic proximity data
    syn_n: int = 500
    syn_d: int = 8
    syn_clusters: int = 5
    syn_outlier_clumps: int = 8
    syn_clump_size: int = 3
    syn_noise: float = 0.03
    syn_tail: float = 0.12
    # synthetic bipartite data
    syn_k: int = 100
    syn_v: int = 190
    syn_communities: int = 8
    syn_p_in: float = 0.5
    syn_p_out: float = 0.002
    inject_fraction: float = 0.1
    # detector
    alpha: float = 0.15
    metric: str = "cosine"
    epsilon: float = 0.5
    # graph attack
    epochs: int = 35
    lr: float = 1.0
    lam: float = 1e-4
    step_rule: str = ""
    init_scale: float = 1e-6
    # feature attack
    feature_epochs: int = 500
    feature_lr: float = 1.0
    band: float = 0.05

    def __post_init__(self):
        if self.model not in ("prox", "bigraph"):
            raise ValueError("model must be 'prox' or 'bigraph'")
        unknown = set(self.methods) - set(GRAPH_METHODS) - set(FEATURE_METHODS)
        if unknown:
            raise ValueError(f"unknown methods: {sorted(unknown)}")
        if self.model == "bigraph" and set(self.methods) & set(FEATURE_METHODS):
            raise ValueError("feature-space methods apply to the prox model only")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if any(not 0 <= b for b in self.budgets):
            raise ValueError("budget proportions must be non-negative")


def config_hash(cfg: ExperimentConfig) -> str:
    payload = json.dumps(dataclasses.asdict(cfg), sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:12]


def _derive_seed(*key) -> int:
    return int(np.random.SeedSequence(key).generate_state(1)[0])


def load_config(path: str | Path) -> ExperimentConfig:
    """Read a flat key=value config with [experiment]/[data]/[model]/[attack]
    sections; unknown keys are rejected."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise FileNotFoundError(path)
    fields = {f.name: f for f in dataclasses.fields(ExperimentConfig)}
    sections = {
        "experiment": ("model", "trials", "seed", "output", "pool_size", "n_targets",
                       "budgets", "methods"),
        "data": ("source", "features_path", "edges_path", "syn_n", "syn_d", "syn_clusters",
                 "syn_outlier_clumps", "syn_clump_size", "syn_noise", "syn_tail", "syn_k",
                 "syn_v", "syn_communities", "syn_p_in", "syn_p_out", "inject_fraction"),
        "model": ("alpha", "metric", "epsilon"),
        "attack": ("epochs", "lr", "lam", "step_rule", "init_scale", "feature_epochs",
                   "feature_lr", "band"),
    }
    kwargs = {}
    for section in parser.sections():
        if section not in sections:
            raise ValueError(f"unknown config section [{section}]")
        for key, raw in parser.items(section):
            if key not in sections[section]:
                raise ValueError(f"unknown key {key!r} in section [{section}]")
            f = fields[key]
            if f.name in ("budgets", "methods"):
                parts = [p.strip() for p in raw.split(",") if p.strip()]
                value = tuple(float(p) for p in parts) if f.name == "budgets" else tuple(parts)
            elif f.type in ("int", int):
                value = int(raw)
            elif f.type in ("float", float):
                value = float(raw)
            else:
                value = raw
            kwargs[key] = value
    return ExperimentConfig(**kwargs)


class _TrialData:
    """Clean data, scores and targets of one trial."""

    def __init__(self, cfg: ExperimentConfig, trial: int):
        self.cfg = cfg
        self.trial = trial
        if cfg.model == "bigraph":
            if cfg.source == "synthetic":
                base = synthetic_bipartite(
                    cfg.syn_k, cfg.syn_v, cfg.syn_communities, cfg.syn_p_in, cfg.syn_p_out,
                    seed=_derive_seed(cfg.seed, trial, _STREAM_DATA),
                )
                self.bipartite, self.labels = inject_bipartite_anomalies(
                    base, cfg.inject_fraction, seed=_derive_seed(cfg.seed, trial, _STREAM_INJECT)
                )
            else:
                self.bipartite = load_bipartite_edges(cfg.edges_path)
                self.labels = None
            self.features = None
            self.attack_input = self.bipartite
            self.clean_scores = bigraph_anomaly_scores(self.bipartite, cfg.alpha)
        else:
            if cfg.source == "synthetic":
                self.features, self.labels = synthetic_features(
                    cfg.syn_n, cfg.syn_d, cfg.syn_clusters, cfg.syn_outlier_clumps,
                    cfg.syn_clump_size, cfg.syn_noise, cfg.syn_tail,
                    seed=_derive_seed(cfg.seed, trial, _STREAM_DATA),
                )
            else:
                self.features = load_feature_csv(cfg.features_path)
                self.labels = None
            self.bipartite = None
            self.graph = build_proximity_graph(self.features, cfg.metric, cfg.epsilon)
            self.attack_input = self.graph
            self.clean_scores = prox_anomaly_scores(self.graph, cfg.alpha)
        self.targets = sample_targets(
            self.clean_scores,
            min(cfg.pool_size, self.clean_scores.shape[0]),
            cfg.n_targets,
            seed=_derive_seed(cfg.seed, trial, _STREAM_TARGETS),
        )

    def budget(self, prop: float) -> int:
        source = self.bipartite if self.cfg.model == "bigraph" else self.graph
        return budget_from_proportion(source, self.targets, prop)


def _graph_attacker(cfg: ExperimentConfig, method: str, budget: int, seed: int):
    if method == "rnd-add":
        return RandomAddAttack(budget=budget, seed=seed)
    if method == "deg-add":
        return DegreeAddAttack(budget=budget)
    return GraphSpaceAttack(
        budget=budget,
        variant=method,
        epochs=cfg.epochs,
        lr=cfg.lr,
        lam=cfg.lam,
        alpha=cfg.alpha,
        step_rule=cfg.step_rule or None,
        init_scale=cfg.init_scale,
        seed=seed,
    )


def _run_guidance(cfg: ExperimentConfig, data: _TrialData, budget: int, budget_idx: int):
    seed = _derive_seed(cfg.seed, data.trial, budget_idx, _STREAM_GUIDE)
    return _graph_attacker(cfg, "alterI", budget, seed).run(data.attack_input, data.targets)


def _feature_attack_row(cfg, data, method, budget, budget_idx, seed):
    guidance = _run_guidance(cfg, data, budget, budget_idx)
    involved = {n for e in guidance.modified_edges for n in e} - {int(t) for t in data.targets}
    k_prime = len(involved)
    if method == "vanilla":
        nodes = select_attack_nodes_random(
            range(data.features.n), data.targets, k_prime, seed
        )
    else:
        nodes = select_attack_nodes_guided(guidance, data.targets, k_prime)
    objective = "graph" if method == "g-guided-plus" else "anomaly"
    variant = "cf" if method == "g-guided-cf" else "alterI"
    attack = FeatureSpaceAttack(
        objective=objective,
        variant=variant,
        epochs=cfg.feature_epochs,
        lr=cfg.feature_lr,
        metric=cfg.metric,
        epsilon=cfg.epsilon,
        alpha=cfg.alpha,
        band=cfg.band,
        seed=seed,
    )
    outcome = attack.run(data.features, nodes, data.targets, guidance=guidance)
    changed = int(
        (np.triu(outcome.graph_after.weights != data.graph.weights, k=1)).sum()
    )
    return outcome.scores_after, {
        "k_prime": k_prime,
        "n_attack_nodes": len(nodes),
        "n_modified_edges": changed,
        "shortfall": 0,
    }


def run_row(cfg: ExperimentConfig, trial: int, budget_idx: int, method: str,
            data: _TrialData | None = None) -> dict:
    """One (trial, budget, method) report row; recomputes everything it needs."""
    if data is None:
        data = _TrialData(cfg, trial)
    prop = cfg.budgets[budget_idx]
    budget = data.budget(prop)
    seed = _derive_seed(cfg.seed, trial, budget_idx, _METHOD_IDS[method])
    started = time.perf_counter()
    row = {
        "config_hash": config_hash(cfg),
        "seed": cfg.seed,
        "trial": trial,
        "model": cfg.model,
        "method": method,
        "budget_prop": prop,
        "budget_edges": budget,
        "error": None,
    }
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            if method in GRAPH_METHODS:
                outcome = _graph_attacker(cfg, method, budget, seed).run(
                    data.attack_input, data.targets
                )
                after = rescore(outcome, cfg.alpha)
                extra = {
                    "n_modified_edges": outcome.n_modified,
                    "n_attack_nodes": len(outcome.attack_nodes),
                    "k_prime": None,
                    "shortfall": outcome.shortfall,
                }
            else:
                after, extra = _feature_attack_row(cfg, data, method, budget, budget_idx, seed)
        row.update(extra)
        row["er5_before"] = evasion_rate(data.clean_scores, data.targets, 0.05)
        row["er10_before"] = evasion_rate(data.clean_scores, data.targets, 0.10)
        row["er5_after"] = evasion_rate(after, data.targets, 0.05)
        row["er10_after"] = evasion_rate(after, data.targets, 0.10)
        row["mean_target_before"] = float(data.clean_scores[data.targets].mean())
        row["mean_target_after"] = float(after[data.targets].mean())
    except Exception as exc:  # a failed method must not abort the sweep
        row["error"] = f"{type(exc).__name__}: {exc}"
    row["runtime_s"] = time.perf_counter() - started
    return row


def canonical_row_bytes(row: dict) -> bytes:
    """Deterministic serialization of a row, volatile fields stripped."""
    stable = {k: v for k, v in row.items() if k not in VOLATILE_FIELDS}
    return json.dumps(stable, sort_keys=True, separators=(",", ":")).encode()


def run_experiment(cfg: ExperimentConfig, write: bool = True) -> list[dict]:
    """Full sweep: trials x budgets x methods. A failed method leaves an
    error row behind and the sweep continues."""
    rows = []
    for trial in range(cfg.trials):
        data = _TrialData(cfg, trial)
        for budget_idx in range(len(cfg.budgets)):
            for method in cfg.methods:
                rows.append(run_row(cfg, trial, budget_idx, method, data=data))
    rows.sort(key=lambda r: (r["trial"], r["budget_prop"], _METHOD_IDS[r["method"]]))
    if write:
        write_report(rows, cfg.output)
    return rows


def write_report(rows: list[dict], output: str | Path) -> tuple[Path, Path]:
    """Write ``<output>.jsonl`` (one row per line, runtime included) and a
    flat ``<output>.csv`` mirror."""
    output = Path(output)
    output.parent.mkdir(parents=True, exist_ok=True)
    jsonl = output.with_suffix(".jsonl")
    with open(jsonl, "w") as handle:
        for row in rows:
            handle.write(json.dumps(row, sort_keys=True) + "\n")
    csv_path = output.with_suffix(".csv")
    field_names = sorted({k for row in rows for k in row})
    with open(csv_path, "w", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=field_names)
        writer.writeheader()
        writer.writerows(rows)
    return jsonl, csv_path
