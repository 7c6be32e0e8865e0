"""Kernel instances and adaptive policy trees.

An instance is a finite-horizon stochastic program over an ordered set of
value levels: probing an action moves the current level according to a
per-level transition row, pays that row's expected profit, and after the
last step the terminal payoff of the final level is collected.  Policies
are decision trees whose nodes name the action probed and whose edges are
the realized levels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence

from .exceptions import ParameterError, StructuralError, UnknownActionError

#: Tolerance for probability-mass accounting.
PROB_TOL = 1e-9


@dataclass(frozen=True)
class ValueSpace:
    """Ordered value levels 0..level_count-1 with optional raw payoffs per level."""

    level_count: int
    rep: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.level_count < 1:
            raise ParameterError("level_count must be at least 1")
        if self.rep is not None:
            if len(self.rep) != self.level_count:
                raise ParameterError("rep length must equal level_count")
            for lo, hi in zip(self.rep, self.rep[1:]):
                if hi < lo:
                    raise ParameterError("rep must be nondecreasing in level")

    def value_of(self, level: int) -> float:
        """Raw value the level stands for (the index itself when rep is absent)."""
        return float(level) if self.rep is None else self.rep[level]


@dataclass(frozen=True)
class Pmf:
    """Finite distribution over raw nonnegative-probability outcomes."""

    entries: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        seen = set()
        total = 0.0
        for outcome, prob in self.entries:
            if outcome in seen:
                raise ParameterError(f"duplicate outcome {outcome!r} in pmf")
            seen.add(outcome)
            if prob < 0.0:
                raise ParameterError(f"negative probability {prob!r} for outcome {outcome!r}")
            total += prob
        if abs(total - 1.0) > PROB_TOL:
            raise ParameterError(f"pmf mass sums to {total!r}, not 1")

    def support(self) -> tuple[tuple[float, float], ...]:
        return tuple((o, p) for o, p in self.entries if p > 0.0)

    def mean(self) -> float:
        return sum(o * p for o, p in self.entries)

    def max_outcome(self) -> float:
        return max((o for o, p in self.entries if p > 0.0), default=0.0)

    def tail_prob(self, threshold: float) -> float:
        """Mass at or above ``threshold``."""
        return sum(p for o, p in self.entries if o >= threshold)

    def tail_partial_mean(self, threshold: float) -> float:
        """Unconditional mean restricted to outcomes at or above ``threshold``."""
        return sum(o * p for o, p in self.entries if o >= threshold)


@dataclass(frozen=True)
class TransitionRow:
    """Behavior of one action from one level: transition masses and expected profit."""

    probs: tuple[tuple[int, float], ...]
    profit: float

    def flat_mass(self, level: int) -> float:
        """Probability of staying at ``level``."""
        return sum(p for j, p in self.probs if j == level)

    def risk_mass(self, level: int) -> float:
        """Probability of leaving ``level``; the per-node risk budget unit."""
        return 1.0 - self.flat_mass(level)


@dataclass(frozen=True)
class ActionSpec:
    """One probeable action; actions sharing a group are mutually exclusive."""

    id: str
    group: str
    rows: Mapping[int, TransitionRow]
    meta: Mapping[str, object] = field(default_factory=dict)


@dataclass(frozen=True)
class Instance:
    """A complete finite-horizon probing program.

    ``compliance_flag`` records whether the instance satisfies the standing
    assumptions (levels never decrease, profits and terminal payoffs are
    nonnegative).  It is computed at construction when not supplied; the
    exact solver ignores it while the approximation pipeline requires it.
    """

    values: ValueSpace
    horizon: int
    actions: tuple[ActionSpec, ...]
    terminal: tuple[float, ...]
    start_level: int = 0
    compliance_flag: bool | None = None
    meta: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self) -> None:
        K = self.values.level_count
        if self.horizon < 0:
            raise ParameterError("horizon must be nonnegative")
        if len(self.terminal) != K:
            raise ParameterError("terminal payoff vector length must equal level_count")
        if not (0 <= self.start_level < K):
            raise ParameterError("start_level out of range")
        by_id: dict[str, ActionSpec] = {}
        for spec in self.actions:
            if spec.id in by_id:
                raise ParameterError(f"duplicate action id {spec.id!r}")
            by_id[spec.id] = spec
            for level, row in spec.rows.items():
                if not (0 <= level < K):
                    raise ParameterError(f"action {spec.id!r} has a row at level {level}, out of range")
                seen = set()
                for j, p in row.probs:
                    if not (0 <= j < K):
                        raise ParameterError(f"action {spec.id!r} row {level} targets level {j}, out of range")
                    if j in seen:
                        raise ParameterError(f"action {spec.id!r} row {level} repeats target level {j}")
                    seen.add(j)
                    if p < 0.0:
                        raise ParameterError(f"action {spec.id!r} row {level} has negative mass at {j}")
        object.__setattr__(self, "_by_id", by_id)
        if self.compliance_flag is None:
            object.__setattr__(self, "compliance_flag", not _violations(self))

    def action(self, action_id: str) -> ActionSpec:
        spec = self._by_id.get(action_id)  # type: ignore[attr-defined]
        if spec is None:
            raise UnknownActionError(f"unknown action id {action_id!r}")
        return spec

    def has_action(self, action_id: str) -> bool:
        return action_id in self._by_id  # type: ignore[attr-defined]

    def groups(self) -> tuple[str, ...]:
        """Group tokens in order of their first appearance in the action list."""
        out: list[str] = []
        for spec in self.actions:
            if spec.group not in out:
                out.append(spec.group)
        return tuple(out)


@dataclass(frozen=True)
class PolicyNode:
    """One decision-tree node; ``action is None`` marks a terminal dummy leaf."""

    action: str | None
    level: int
    t: int
    children: Mapping[int, "PolicyNode"] = field(default_factory=dict)

    @property
    def is_leaf(self) -> bool:
        return self.action is None


def leaf_node(level: int, t: int) -> PolicyNode:
    """A dummy leaf collecting the terminal payoff of ``level``."""
    return PolicyNode(None, level, t, {})


@dataclass(frozen=True)
class PathStats:
    """Reach probability, accumulated risk mass, and accumulated expected profit
    of the actions taken strictly before the path's endpoint."""

    reach_probability: float
    mu: float
    expected_profit: float


@dataclass(frozen=True)
class ComplianceReport:
    violations: tuple[str, ...]
    compliant: bool


def _violations(instance: Instance) -> list[str]:
    out: list[str] = []
    for spec in instance.actions:
        for level in sorted(spec.rows):
            row = spec.rows[level]
            for j, p in row.probs:
                if j < level and p > 0.0:
                    out.append(f"action {spec.id!r} row {level}: value decreases to {j}")
            total = sum(p for _, p in row.probs)
            if abs(total - 1.0) > PROB_TOL:
                out.append(f"action {spec.id!r} row {level}: mass sums to {total!r}")
            if row.profit < 0.0:
                out.append(f"action {spec.id!r} row {level}: negative expected profit")
    for level, h in enumerate(instance.terminal):
        if h < 0.0:
            out.append(f"terminal payoff at level {level} is negative")
    return out


def validate_instance(instance: Instance) -> ComplianceReport:
    """Report standing-assumption violations without rejecting the instance."""
    found = _violations(instance)
    return ComplianceReport(tuple(found), not found)


def _row_for(instance: Instance, node: PolicyNode) -> TransitionRow:
    spec = instance.action(node.action)
    row = spec.rows.get(node.level)
    if row is None:
        raise StructuralError(f"action {node.action!r} has no row at level {node.level}")
    return row


def evaluate_policy(instance: Instance, tree: PolicyNode) -> float:
    """Expected total profit of the policy: profits along the way plus the
    terminal payoff of the level reached when the tree bottoms out."""

    def value(node: PolicyNode) -> float:
        if node.is_leaf:
            if node.t > instance.horizon + 1:
                raise StructuralError("leaf sits past the end of the horizon")
            return instance.terminal[node.level]
        if node.t > instance.horizon:
            raise StructuralError(f"internal node at t={node.t} exceeds horizon {instance.horizon}")
        row = _row_for(instance, node)
        outcomes = dict(row.probs)
        total = row.profit
        for j, p in row.probs:
            if p == 0.0:
                continue
            child = node.children.get(j)
            if child is None:
                raise StructuralError(
                    f"node probing {node.action!r} at level {node.level} lacks a child for level {j}")
            if child.level != j:
                raise StructuralError(f"child keyed {j} carries entry level {child.level}")
            total += p * value(child)
        for j in node.children:
            if j not in outcomes:
                raise StructuralError(
                    f"node probing {node.action!r} at level {node.level} has a stray child at level {j}")
        return total

    return value(tree)


def walk_reach(instance: Instance, tree: PolicyNode) -> Iterator[tuple[PolicyNode, float, float, float]]:
    """Preorder walk yielding (node, reach probability, prefix risk mass,
    prefix expected profit), prefixes excluding the node itself."""
    stack: list[tuple[PolicyNode, float, float, float]] = [(tree, 1.0, 0.0, 0.0)]
    while stack:
        node, phi, mu, acc = stack.pop()
        yield node, phi, mu, acc
        if node.is_leaf:
            continue
        row = _row_for(instance, node)
        mu_v = row.risk_mass(node.level)
        for j, p in sorted(row.probs, reverse=True):
            if p == 0.0:
                continue
            child = node.children.get(j)
            if child is None:
                raise StructuralError(
                    f"node probing {node.action!r} at level {node.level} lacks a child for level {j}")
            stack.append((child, phi * p, mu + mu_v, acc + row.profit))


def node_sum_profit(instance: Instance, tree: PolicyNode) -> float:
    """Policy value as the reach-weighted sum of node profits and leaf payoffs.

    Mathematically identical to evaluate_policy; kept separate so the two
    accounting forms can be checked against each other.
    """
    total = 0.0
    for node, phi, _mu, _acc in walk_reach(instance, tree):
        if node.is_leaf:
            total += phi * instance.terminal[node.level]
        else:
            total += phi * _row_for(instance, node).profit
    return total


def subtree_values(instance: Instance, tree: PolicyNode) -> dict[int, float]:
    """Map id(node) to the expected value of the subtree hanging at that node."""
    out: dict[int, float] = {}

    def value(node: PolicyNode) -> float:
        if node.is_leaf:
            v = instance.terminal[node.level]
        else:
            row = _row_for(instance, node)
            v = row.profit
            for j, p in row.probs:
                if p == 0.0:
                    continue
                child = node.children.get(j)
                if child is None:
                    raise StructuralError(
                        f"node probing {node.action!r} at level {node.level} lacks a child for level {j}")
                v += p * value(child)
        out[id(node)] = v
        return v

    value(tree)
    return out


def path_stats(instance: Instance, tree: PolicyNode, node_path: Sequence[int]) -> PathStats:
    """Statistics of the root-to-node path selected by realized levels.

    The empty path stands at the root with nothing probed yet; each step
    consumes the current node's action and follows the child keyed by the
    realized level.
    """
    node = tree
    phi = 1.0
    mu = 0.0
    acc = 0.0
    for j in node_path:
        if node.is_leaf:
            raise StructuralError("path descends through a leaf")
        row = _row_for(instance, node)
        edge = dict(row.probs).get(j)
        child = node.children.get(j)
        if edge is None or child is None:
            raise StructuralError(f"path step to level {j} is not in the tree")
        mu += row.risk_mass(node.level)
        acc += row.profit
        phi *= edge
        node = child
    return PathStats(phi, mu, acc)


def truncation_cut_set(instance: Instance, tree: PolicyNode, eps: float) -> list[tuple[PolicyNode, float, float]]:
    """Nodes where truncation at risk budget 1/eps first bites, with their
    reach probability and prefix risk mass."""
    if not (0.0 < eps <= 1.0):
        raise ParameterError("eps must lie in (0, 1]")
    budget = 1.0 / eps
    cut: list[tuple[PolicyNode, float, float]] = []

    def walk(node: PolicyNode, phi: float, mu: float) -> None:
        if mu >= budget:
            cut.append((node, phi, mu))
            return
        if node.is_leaf:
            return
        row = _row_for(instance, node)
        mu_v = row.risk_mass(node.level)
        for j, p in row.probs:
            if p == 0.0:
                continue
            child = node.children.get(j)
            if child is None:
                raise StructuralError(
                    f"node probing {node.action!r} at level {node.level} lacks a child for level {j}")
            walk(child, phi * p, mu + mu_v)

    walk(tree, 1.0, 0.0)
    return cut


def truncate_policy(instance: Instance, tree: PolicyNode, eps: float) -> PolicyNode:
    """Stop the policy on every path once its accumulated risk mass reaches
    1/eps, replacing the remaining subtree by a dummy leaf.

    The prefix is measured over the actions already taken, so the root is
    never cut unless the budget is zero-crossing at eps <= 0 (rejected) and
    ties at exactly 1/eps are cut.
    """
    if not (0.0 < eps <= 1.0):
        raise ParameterError("eps must lie in (0, 1]")
    budget = 1.0 / eps

    def rebuild(node: PolicyNode, mu: float) -> PolicyNode:
        if mu >= budget:
            return leaf_node(node.level, node.t)
        if node.is_leaf:
            return node
        row = _row_for(instance, node)
        mu_v = row.risk_mass(node.level)
        children = {}
        for j, p in row.probs:
            if p == 0.0:
                continue
            child = node.children.get(j)
            if child is None:
                raise StructuralError(
                    f"node probing {node.action!r} at level {node.level} lacks a child for level {j}")
            children[j] = rebuild(child, mu + mu_v)
        return PolicyNode(node.action, node.level, node.t, children)

    return rebuild(tree, 0.0)


def validate_policy_tree(instance: Instance, tree: PolicyNode) -> None:
    """Raise if the tree is structurally unsound for the instance.

    Checks child keys against row supports, entry levels, time indexing,
    horizon depth, and the one-action-per-group discipline along paths.
    """
    if tree.level != instance.start_level:
        raise StructuralError(f"root entry level {tree.level} differs from start level {instance.start_level}")
    if tree.t != 1:
        raise StructuralError("root must sit at t=1")

    def walk(node: PolicyNode, used_actions: frozenset[str], used_groups: frozenset[str]) -> None:
        if node.is_leaf:
            if node.children:
                raise StructuralError("leaf carries children")
            if node.t > instance.horizon + 1:
                raise StructuralError("leaf sits past the end of the horizon")
            return
        if node.t > instance.horizon:
            raise StructuralError(f"internal node at t={node.t} exceeds horizon {instance.horizon}")
        if node.action in used_actions:
            raise StructuralError(f"action {node.action!r} repeats along a path")
        spec = instance.action(node.action)
        if spec.group in used_groups:
            raise StructuralError(f"group {spec.group!r} repeats along a path")
        row = spec.rows.get(node.level)
        if row is None:
            raise StructuralError(f"action {node.action!r} has no row at level {node.level}")
        outcomes = dict(row.probs)
        for j, p in row.probs:
            if p == 0.0:
                continue
            if j not in node.children:
                raise StructuralError(f"missing child for realizable level {j}")
        for j, child in node.children.items():
            if j not in outcomes:
                raise StructuralError(f"stray child at level {j}")
            if child.level != j:
                raise StructuralError(f"child keyed {j} carries entry level {child.level}")
            if child.t != node.t + 1:
                raise StructuralError("child time index must increase by one")
            walk(child, used_actions | {node.action}, used_groups | {spec.group})

    walk(tree, frozenset(), frozenset())
