"""Solvers for finite-horizon probing programs on ordered value levels.

The exact Bellman recursion handles small instances outright; the
signature pipeline (grid signatures, block-tree topologies, configuration
dynamic program) trades accuracy for polynomial work.  Application
builders compile max-tracking, committed-selection, target, and knapsack
problems onto the shared kernel, and the harness drives generation,
simulation, and the invariant suites from one command line.
"""

from .exceptions import (
    CapacityError,
    ClampError,
    HintError,
    ParameterError,
    ParseError,
    StochprobeError,
    StructuralError,
    UnknownActionError,
    UsageError,
)
from .model import (
    ActionSpec,
    ComplianceReport,
    Instance,
    PathStats,
    Pmf,
    PolicyNode,
    TransitionRow,
    ValueSpace,
    evaluate_policy,
    leaf_node,
    node_sum_profit,
    path_stats,
    subtree_values,
    truncate_policy,
    truncation_cut_set,
    validate_instance,
    validate_policy_tree,
    walk_reach,
)
from .exact import GROUP_CAP, max_over_starts, optimal_policy, optimal_value
from .block import (
    BlockNode,
    BlockReport,
    batch_masses_approx,
    batch_masses_exact,
    block_leaf,
    block_profit_approx,
    block_profit_exact,
    block_risk_mass,
    blockify,
    check_block_properties,
    iter_blocks,
)
from .ptas import (
    Candidate,
    ConfigDpResult,
    PtasDiagnostics,
    PtasKnobs,
    PtasResult,
    Signature,
    Topology,
    action_signature,
    block_signature,
    config_dp,
    enumerate_topologies,
    estimate_max,
    faithful_knobs,
    materialize,
    reconstruct_and_score,
    solve_ptas,
)
from .problems import (
    DiscretizationMap,
    ProblemSpec,
    build_committed,
    build_probemax,
    build_probetopk,
    build_sbk,
    build_target,
    discretize_size_li,
    discretize_value,
    expected_max,
    fair_cap,
    greedy_probemax,
    pandora_uncommitted_kernel,
    replay_probemax_canonical,
    sbk_from_skp,
    sbk_opt_exact,
    sbk_value_of,
    skp_kernel,
    target_opt_exact,
    truncate_by_profit,
    weitzman,
)

__all__ = [
    "ActionSpec",
    "BlockNode",
    "BlockReport",
    "Candidate",
    "CapacityError",
    "ClampError",
    "ComplianceReport",
    "ConfigDpResult",
    "DiscretizationMap",
    "GROUP_CAP",
    "HintError",
    "Instance",
    "ParameterError",
    "ParseError",
    "PathStats",
    "Pmf",
    "PolicyNode",
    "ProblemSpec",
    "PtasDiagnostics",
    "PtasKnobs",
    "PtasResult",
    "Signature",
    "StochprobeError",
    "StructuralError",
    "Topology",
    "TransitionRow",
    "UnknownActionError",
    "UsageError",
    "ValueSpace",
    "action_signature",
    "batch_masses_approx",
    "batch_masses_exact",
    "block_leaf",
    "block_profit_approx",
    "block_profit_exact",
    "block_risk_mass",
    "block_signature",
    "blockify",
    "build_committed",
    "build_probemax",
    "build_probetopk",
    "build_sbk",
    "build_target",
    "check_block_properties",
    "config_dp",
    "discretize_size_li",
    "discretize_value",
    "enumerate_topologies",
    "estimate_max",
    "evaluate_policy",
    "expected_max",
    "fair_cap",
    "faithful_knobs",
    "greedy_probemax",
    "iter_blocks",
    "leaf_node",
    "materialize",
    "max_over_starts",
    "node_sum_profit",
    "optimal_policy",
    "optimal_value",
    "pandora_uncommitted_kernel",
    "path_stats",
    "reconstruct_and_score",
    "replay_probemax_canonical",
    "sbk_from_skp",
    "sbk_opt_exact",
    "sbk_value_of",
    "skp_kernel",
    "solve_ptas",
    "subtree_values",
    "target_opt_exact",
    "truncate_by_profit",
    "truncate_policy",
    "truncation_cut_set",
    "validate_instance",
    "validate_policy_tree",
    "walk_reach",
    "weitzman",
]
