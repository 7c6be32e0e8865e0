"""Exact solver: backward induction over (time, level, remaining groups).

The remaining action set is tracked as a bitmask over groups, so the state
space is horizon x levels x 2^groups and the group count is capped.  A
built-in no-op (stay at the level, profit zero) pads policies that stop
early, which makes the value of an empty action set the terminal payoff of
the current level.  The solver is assumption-free: negative profits and
non-monotone terminal payoffs are handled as-is.
"""

from __future__ import annotations

from .exceptions import CapacityError
from .model import ActionSpec, Instance, PolicyNode, leaf_node

#: Hard default on the number of distinct groups the bitmask may carry.
GROUP_CAP = 24


class _Solver:
    def __init__(self, instance: Instance, group_cap: int):
        groups = instance.groups()
        if len(groups) > group_cap:
            raise CapacityError(
                f"{len(groups)} groups exceed the solver cap of {group_cap}")
        self.instance = instance
        self.bit_of = {g: 1 << i for i, g in enumerate(groups)}
        by_group: dict[str, list[ActionSpec]] = {g: [] for g in groups}
        for spec in instance.actions:
            by_group[spec.group].append(spec)
        for members in by_group.values():
            members.sort(key=lambda s: s.id)
        self.group_actions = [(self.bit_of[g], by_group[g]) for g in groups]
        self.full_mask = (1 << len(groups)) - 1
        self.memo: dict[tuple[int, int, int], float] = {}

    def value(self, t: int, level: int, mask: int) -> float:
        if t == self.instance.horizon + 1:
            return self.instance.terminal[level]
        key = (t, level, mask)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        best = self.value(t + 1, level, mask)  # no-op filler step
        for bit, members in self.group_actions:
            if not (mask & bit):
                continue
            rest = mask & ~bit
            for spec in members:
                row = spec.rows.get(level)
                if row is None:
                    continue
                q = row.profit
                for j, p in row.probs:
                    if p > 0.0:
                        q += p * self.value(t + 1, j, rest)
                if q > best:
                    best = q
        self.memo[key] = best
        return best

    def best_action(self, t: int, level: int, mask: int) -> tuple[ActionSpec | None, float]:
        """Best real action and its value; ties resolved toward the lowest id."""
        best_spec: ActionSpec | None = None
        best_q = float("-inf")
        for bit, members in self.group_actions:
            if not (mask & bit):
                continue
            rest = mask & ~bit
            for spec in members:
                row = spec.rows.get(level)
                if row is None:
                    continue
                q = row.profit
                for j, p in row.probs:
                    if p > 0.0:
                        q += p * self.value(t + 1, j, rest)
                if best_spec is None or q > best_q:
                    best_spec, best_q = spec, q
        return best_spec, best_q


def optimal_value(instance: Instance, start_level: int | None = None, *,
                  group_cap: int = GROUP_CAP) -> float:
    """Optimal expected profit from (start_level, t=1) with all actions available."""
    solver = _Solver(instance, group_cap)
    start = instance.start_level if start_level is None else start_level
    return solver.value(1, start, solver.full_mask)


def max_over_starts(instance: Instance, *, group_cap: int = GROUP_CAP) -> float:
    """Largest optimal value over all possible start levels; the global
    reference scale for loss bounds and signature grids."""
    solver = _Solver(instance, group_cap)
    return max(solver.value(1, level, solver.full_mask)
               for level in range(instance.values.level_count))


def optimal_policy(instance: Instance, *, group_cap: int = GROUP_CAP) -> PolicyNode:
    """An optimal decision tree.

    At each state the best real action is kept when it at least matches the
    value of idling; otherwise the policy stops with a dummy leaf.  Argmax
    ties go to the lowest action id, and zero-probability branches are
    omitted.
    """
    solver = _Solver(instance, group_cap)

    def build(t: int, level: int, mask: int) -> PolicyNode:
        if t == instance.horizon + 1:
            return leaf_node(level, t)
        spec, q = solver.best_action(t, level, mask)
        if spec is None or q < solver.value(t + 1, level, mask):
            return leaf_node(level, t)
        rest = mask & ~solver.bit_of[spec.group]
        row = spec.rows[level]
        children = {j: build(t + 1, j, rest) for j, p in row.probs if p > 0.0}
        return PolicyNode(spec.id, level, t, children)

    return build(1, instance.start_level, solver.full_mask)
