from .common import (
    GraphAttackOutcome,
    apply_perturbation,
    bipartite_support_pairs,
    check_perturbation,
    discretize_topk,
    full_support_pairs,
    pgd_step,
)
from .feature_space import (
    AttackNodeSet,
    FeatureAttackOutcome,
    FeatureSpaceAttack,
    anomaly_loss,
    graph_alignment_loss,
    round_features,
    select_attack_nodes_guided,
    select_attack_nodes_random,
)
from .graph_space import (
    DegreeAddAttack,
    GraphSpaceAttack,
    RandomAddAttack,
    attack_loss,
    loss_gradient,
    rescore,
)

__all__ = [
    "AttackNodeSet",
    "DegreeAddAttack",
    "FeatureAttackOutcome",
    "FeatureSpaceAttack",
    "GraphAttackOutcome",
    "GraphSpaceAttack",
    "RandomAddAttack",
    "anomaly_loss",
    "apply_perturbation",
    "attack_loss",
    "bipartite_support_pairs",
    "check_perturbation",
    "discretize_topk",
    "full_support_pairs",
    "graph_alignment_loss",
    "loss_gradient",
    "pgd_step",
    "rescore",
    "round_features",
    "select_attack_nodes_guided",
    "select_attack_nodes_random",
]
