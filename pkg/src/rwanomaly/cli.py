"""Command-line interface.

Subcommands: ``detect``, ``attack-graph``, ``attack-feature``, ``gadget``,
``eval``. Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric
failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from . import gadgets
from .attacks.feature_space import (
    FeatureSpaceAttack,
    select_attack_nodes_guided,
    select_attack_nodes_random,
)
from .attacks.graph_space import DegreeAddAttack, GraphSpaceAttack, RandomAddAttack, rescore
from .data import (
    load_bipartite_edges,
    load_feature_csv,
    random_undirected_graph,
    sample_targets,
)
from .detectors import BiGraphRW, ProxGraphRW
from .errors import (
    DimensionMismatchError,
    GadgetInstanceError,
    ParseError,
    RwanomalyError,
    SearchSpaceError,
    SingularSystemError,
)
from .experiment import load_config, run_experiment
from .graph import stationary_iterative, transition_matrix
from .metrics import budget_from_proportion, evasion_rate

USAGE_ERROR, DATA_ERROR, NUMERIC_ERROR = 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_ERROR)


def _fit_detector(args):
    if args.model == "bigraph":
        data = load_bipartite_edges(args.input)
        det = BiGraphRW(alpha=args.alpha, contamination=args.top_q)
    else:
        data = load_feature_csv(args.input)
        det = ProxGraphRW(
            metric=args.metric, epsilon=args.epsilon, alpha=args.alpha,
            contamination=args.top_q,
        )
    return det.fit(data), data


def _write_scores(path, scores, flags):
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["node", "score", "flagged"])
        for i, (s, f) in enumerate(zip(scores, flags)):
            writer.writerow([i, repr(float(s)), int(f)])


def cmd_detect(args) -> int:
    det, _ = _fit_detector(args)
    _write_scores(args.out, det.scores_, det.labels_)
    print(f"scored {det.scores_.shape[0]} nodes; flagged {int(det.labels_.sum())} "
          f"at top {args.top_q:.0%}; wrote {args.out}")
    return 0


def _resolve_targets(args, scores) -> np.ndarray:
    if args.targets:
        return np.asarray(sorted({int(t) for t in args.targets.split(",")}), dtype=np.int64)
    pool = min(args.pool, scores.shape[0])
    return sample_targets(scores, pool, args.auto_targets, args.seed)


def cmd_attack_graph(args) -> int:
    det, data = _fit_detector(args)
    targets = _resolve_targets(args, det.scores_)
    attack_input = data if args.model == "bigraph" else det.graph_
    budget = args.budget
    if budget is None:
        budget = budget_from_proportion(
            data if args.model == "bigraph" else det.graph_, targets, args.budget_prop
        )
    if args.method == "rnd-add":
        attack = RandomAddAttack(budget=budget, seed=args.seed)
    elif args.method == "deg-add":
        attack = DegreeAddAttack(budget=budget)
    else:
        attack = GraphSpaceAttack(
            budget=budget, variant=args.method, epochs=args.epochs, lr=args.lr,
            lam=getattr(args, "lambda"), alpha=args.alpha, seed=args.seed,
        )
    outcome = attack.run(attack_input, targets)
    after = rescore(outcome, args.alpha)
    report = {
        "method": args.method,
        "budget": budget,
        "targets": targets.tolist(),
        "modified_edges": [list(e) for e in outcome.modified_edges],
        "attack_nodes": list(outcome.attack_nodes),
        "shortfall": outcome.shortfall,
        "er5_before": evasion_rate(det.scores_, targets, 0.05),
        "er10_before": evasion_rate(det.scores_, targets, 0.10),
        "er5_after": evasion_rate(after, targets, 0.05),
        "er10_after": evasion_rate(after, targets, 0.10),
        "mean_target_before": float(det.scores_[targets].mean()),
        "mean_target_after": float(after[targets].mean()),
        "loss_trace": outcome.loss_trace.tolist(),
        "seed": args.seed,
    }
    Path(args.out).write_text(json.dumps(report, indent=2) + "\n")
    print(f"{args.method}: budget {budget}, modified {outcome.n_modified} edges, "
          f"ER@5% {report['er5_before']:.3f} -> {report['er5_after']:.3f}; wrote {args.out}")
    return 0


def cmd_attack_feature(args) -> int:
    features = load_feature_csv(args.input)
    det = ProxGraphRW(metric=args.metric, epsilon=args.epsilon, alpha=args.alpha,
                      contamination=args.top_q).fit(features)
    targets = _resolve_targets(args, det.scores_)
    budget = budget_from_proportion(det.graph_, targets, args.budget_prop)
    guidance = GraphSpaceAttack(
        budget=budget, variant="alterI", epochs=args.guide_epochs, lr=args.guide_lr,
        lam=getattr(args, "lambda"), alpha=args.alpha, seed=args.seed,
    ).run(det.graph_, targets)
    involved = {n for e in guidance.modified_edges for n in e} - {int(t) for t in targets}
    k_prime = args.k_prime if args.k_prime else len(involved)
    if args.method == "vanilla":
        nodes = select_attack_nodes_random(range(features.n), targets, k_prime, args.seed)
    else:
        nodes = select_attack_nodes_guided(guidance, targets, k_prime)
    attack = FeatureSpaceAttack(
        objective="graph" if args.method == "g-guided-plus" else "anomaly",
        variant="cf" if args.method == "g-guided-cf" else "alterI",
        epochs=args.epochs, lr=args.lr, metric=args.metric, epsilon=args.epsilon,
        alpha=args.alpha, seed=args.seed,
    )
    outcome = attack.run(features, nodes, targets, guidance=guidance)
    report = {
        "method": args.method,
        "k_prime": k_prime,
        "attack_nodes": list(outcome.attack_nodes.nodes),
        "targets": targets.tolist(),
        "er5_before": evasion_rate(outcome.scores_before, targets, 0.05),
        "er10_before": evasion_rate(outcome.scores_before, targets, 0.10),
        "er5_after": evasion_rate(outcome.scores_after, targets, 0.05),
        "er10_after": evasion_rate(outcome.scores_after, targets, 0.10),
        "mean_target_before": float(outcome.scores_before[targets].mean()),
        "mean_target_after": float(outcome.scores_after[targets].mean()),
        "seed": args.seed,
    }
    Path(args.out).write_text(json.dumps(report, indent=2) + "\n")
    if args.out_features:
        with open(args.out_features, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow([f"f{j}" for j in range(features.d)])
            writer.writerows(outcome.features.values.tolist())
    print(f"{args.method}: |Z| {len(nodes)}, mean target score "
          f"{report['mean_target_before']:.4f} -> {report['mean_target_after']:.4f}; "
          f"wrote {args.out}")
    return 0


def _gadget_build(args):
    if args.kind in ("set-cover", "thm1"):
        inst = gadgets.random_cover_instance(args.elements, args.subsets, args.budget, args.seed)
        gadget = gadgets.covering_gadget(inst)
        directed = True
    else:
        core = random_undirected_graph(args.nodes, args.p, args.seed, ensure_odd_cycle=True)
        gadget = gadgets.clique_gadget(core, args.k)
        directed = False
    return gadget, directed


def cmd_gadget(args) -> int:
    gadget, directed = _gadget_build(args)
    if args.action == "build":
        iu, iv = np.nonzero(gadget.graph.weights if directed
                            else np.triu(gadget.graph.weights, k=1))
        with open(args.out, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["u", "v"])
            writer.writerows(zip(iu.tolist(), iv.tolist()))
        print(f"built {args.kind} gadget: {gadget.n} nodes, {iu.size} edges, "
              f"alpha={gadget.alpha:g}, theta={gadget.theta}, budget={gadget.budget}; "
              f"wrote {args.out}")
        return 0
    # verify
    if args.kind in ("set-cover", "thm1"):
        rng = np.random.default_rng(args.seed)
        m = gadget.instance.n_subsets
        added = [j for j in range(m) if rng.random() < 0.5]
        graph = gadgets.with_added_edges(gadget, added)
        p = transition_matrix(graph)
        s = stationary_iterative(p, np.full(gadget.n, 1 / gadget.n), gadget.alpha,
                                 tol=1e-13, max_iter=10000)
        expected = gadgets.expected_stationary(gadget, added)
        dev = float(np.abs(s - expected).max())
        print(f"max |solver - closed form| = {dev:.3e} with {len(added)} edges added")
        return 0 if dev < 1e-10 else NUMERIC_ERROR
    p = transition_matrix(gadget.graph)
    s = stationary_iterative(p, np.full(gadget.n, 1 / gadget.n), 0.0,
                             tol=1e-13, max_iter=200000)
    deg = gadget.graph.weighted_degrees()
    dev = float(np.abs(s / (deg / deg.sum()) - 1.0).max())
    print(f"max relative deviation from degree proportionality = {dev:.3e}")
    return 0 if dev < 1e-8 else NUMERIC_ERROR


def cmd_eval(args) -> int:
    cfg = load_config(args.config)
    if args.out:
        cfg = dataclasses.replace(cfg, output=args.out)
    rows = run_experiment(cfg)
    failed = [r for r in rows if r["error"]]
    print(f"wrote {len(rows)} rows to {cfg.output}.jsonl / .csv "
          f"({len(failed)} rows recorded errors)")
    for method in cfg.methods:
        ers = [r["er10_after"] for r in rows if r["method"] == method and not r["error"]]
        if ers:
            print(f"  {method:16s} mean ER@10% = {np.mean(ers):.3f} over {len(ers)} rows")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="rwanomaly", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_model_opts(p, with_model=True):
        if with_model:
            p.add_argument("--model", choices=["bigraph", "prox"], required=True)
        p.add_argument("--input", required=True, help="feature CSV (prox) or edge CSV (bigraph)")
        p.add_argument("--metric", choices=["cosine", "correlation"], default="cosine")
        p.add_argument("--epsilon", type=float, default=0.5)
        p.add_argument("--alpha", type=float, default=0.15)
        p.add_argument("--top-q", type=float, default=0.05, dest="top_q")

    p = sub.add_parser("detect", help="score a dataset and flag the top quantile")
    add_model_opts(p)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_detect)

    def add_target_opts(p):
        p.add_argument("--targets", default="", help="comma-separated node ids")
        p.add_argument("--auto-targets", type=int, default=5, dest="auto_targets",
                       help="sample this many targets from the top pool")
        p.add_argument("--pool", type=int, default=100)
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("attack-graph", help="graph-space poisoning attack")
    add_model_opts(p)
    add_target_opts(p)
    p.add_argument("--method", choices=["alterI", "cf", "rnd-add", "deg-add"], required=True)
    p.add_argument("--budget", type=int, default=None, help="edge budget (overrides --budget-prop)")
    p.add_argument("--budget-prop", type=float, default=0.4, dest="budget_prop")
    p.add_argument("--epochs", type=int, default=35)
    p.add_argument("--lr", type=float, default=1.0)
    p.add_argument("--lambda", type=float, default=1e-4)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_attack_graph)

    p = sub.add_parser("attack-feature", help="graph-guided feature-space attack")
    add_model_opts(p, with_model=False)
    add_target_opts(p)
    p.add_argument("--method", required=True,
                   choices=["vanilla", "g-guided-alterI", "g-guided-cf", "g-guided-plus"])
    p.add_argument("--k-prime", type=int, default=0, dest="k_prime",
                   help="attack-node cap (0 = size of the guiding attack's node set)")
    p.add_argument("--budget-prop", type=float, default=0.4, dest="budget_prop")
    p.add_argument("--epochs", type=int, default=500)
    p.add_argument("--lr", type=float, default=1.0)
    p.add_argument("--guide-epochs", type=int, default=35, dest="guide_epochs")
    p.add_argument("--guide-lr", type=float, default=1.0, dest="guide_lr")
    p.add_argument("--lambda", type=float, default=1e-4)
    p.add_argument("--out", required=True)
    p.add_argument("--out-features", default="", dest="out_features")
    p.set_defaults(handler=cmd_attack_feature)

    p = sub.add_parser("gadget", help="build or verify a reduction gadget")
    p.add_argument("--kind", choices=["set-cover", "clique", "thm1", "thm2"], required=True)
    p.add_argument("action", choices=["build", "verify"])
    p.add_argument("--elements", type=int, default=9)
    p.add_argument("--subsets", type=int, default=5)
    p.add_argument("--budget", type=int, default=3)
    p.add_argument("--nodes", type=int, default=8)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="gadget_edges.csv")
    p.set_defaults(handler=cmd_gadget)

    p = sub.add_parser("eval", help="run a full sweep from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default="")
    p.set_defaults(handler=cmd_eval)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return args.handler(args)
    except (ParseError, FileNotFoundError, DimensionMismatchError, GadgetInstanceError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return DATA_ERROR
    except (SingularSystemError, SearchSpaceError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return NUMERIC_ERROR
    except (RwanomalyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
