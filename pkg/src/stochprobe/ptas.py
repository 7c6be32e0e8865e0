"""Signature-based approximation pipeline.

Blocks are summarized by signatures: transition masses and expected profit
floored onto a grid and stored in integer grid units, so block signatures
are entrywise sums of action signatures.  The solver enumerates small block
topologies, runs a forward reachability DP over per-node signature sums
under per-path placement caps, then rebuilds the most promising
configurations into concrete block trees and rescores them exactly.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from itertools import product
from typing import Sequence

from .block import BlockNode, block_leaf, block_profit_exact
from .exact import max_over_starts
from .exceptions import CapacityError, HintError, ParameterError, StructuralError
from .model import Instance, validate_instance

#: Environment override for the configuration-DP state cap.
STATE_CAP_ENV = "STOCHPROBE_STATE_CAP"
DEFAULT_STATE_CAP = 5_000_000

#: Absorbs float division noise so on-grid masses land on exact units.
_FLOOR_SLACK = 1e-9


def _floor_units(x: float, grid: float) -> int:
    return int(math.floor(x / grid + _FLOOR_SLACK))


@dataclass(frozen=True)
class Signature:
    """Rounded transition masses (one unit count per level) plus rounded
    expected profit, all in integer grid units."""

    units: tuple[int, ...]
    grid: float
    profit_grid: float

    def __add__(self, other: "Signature") -> "Signature":
        if (self.grid, self.profit_grid) != (other.grid, other.profit_grid):
            raise ParameterError("signatures on different grids cannot be summed")
        return Signature(tuple(a + b for a, b in zip(self.units, other.units)),
                         self.grid, self.profit_grid)

    def mass_units(self) -> tuple[int, ...]:
        return self.units[:-1]

    def profit_value(self) -> float:
        return self.units[-1] * self.profit_grid


def action_signature(instance: Instance, action_id: str, level: int, grid: float,
                     max_ref: float) -> Signature:
    """Signature of a single action probed from ``level``."""
    if grid <= 0.0:
        raise ParameterError("grid must be positive")
    if max_ref <= 0.0:
        raise ParameterError("max_ref must be positive")
    spec = instance.action(action_id)
    row = spec.rows.get(level)
    if row is None:
        raise StructuralError(f"action {action_id!r} has no row at level {level}")
    K = instance.values.level_count
    units = [0] * (K + 1)
    for j, p in row.probs:
        units[j] += _floor_units(p, grid)
    profit_grid = grid * max_ref
    units[K] = _floor_units(row.profit, profit_grid)
    return Signature(tuple(units), grid, profit_grid)


def block_signature(instance: Instance, action_ids: Sequence[str], level: int,
                    grid: float, max_ref: float) -> Signature:
    """Entrywise sum of the batch's action signatures."""
    K = instance.values.level_count
    sig = Signature(tuple([0] * (K + 1)), grid, grid * max_ref)
    for action_id in action_ids:
        sig = sig + action_signature(instance, action_id, level, grid, max_ref)
    return sig


@dataclass(frozen=True)
class Topology:
    """Shape of a block tree: entry levels only, children keyed by realized
    level.  Missing children mean the policy stops there."""

    level: int
    children: tuple[tuple[int, "Topology"], ...] = ()

    def node_count(self) -> int:
        return 1 + sum(c.node_count() for _, c in self.children)

    def depth(self) -> int:
        return 1 + max((c.depth() for _, c in self.children), default=0)


def enumerate_topologies(level_count: int, block_budget: int, depth_limit: int,
                         start_level: int, *, count_cap: int = 200_000) -> tuple[Topology, ...]:
    """All topologies rooted at ``start_level`` with at most ``block_budget``
    nodes and at most ``depth_limit`` blocks on any path, in a fixed order.

    Entry levels never decrease along a path and each node holds at most one
    child per level.  Exceeding ``count_cap`` raises a capacity error whose
    ``partial`` attribute carries everything enumerated so far.
    """
    if block_budget < 1 or depth_limit < 1:
        raise ParameterError("block_budget and depth_limit must be at least 1")
    memo: dict[tuple[int, int, int], tuple[Topology, ...]] = {}
    result: list[Topology] = []

    def exact(level: int, nodes: int, depth: int) -> tuple[Topology, ...]:
        """Topologies rooted at ``level`` with exactly ``nodes`` nodes."""
        key = (level, nodes, depth)
        hit = memo.get(key)
        if hit is not None:
            return hit
        out: list[Topology] = []
        if nodes >= 1 and depth >= 1:
            keys = list(range(level, level_count))

            def assign(i: int, remaining: int, acc: list[tuple[int, Topology]]) -> None:
                if i == len(keys):
                    if remaining == 0:
                        out.append(Topology(level, tuple(acc)))
                    return
                assign(i + 1, remaining, acc)
                if remaining > 0 and depth > 1:
                    for size in range(1, remaining + 1):
                        for sub in exact(keys[i], size, depth - 1):
                            acc.append((keys[i], sub))
                            assign(i + 1, remaining - size, acc)
                            acc.pop()

            assign(0, nodes - 1, [])
        memo[key] = tuple(out)
        return memo[key]

    for n in range(1, block_budget + 1):
        for topo in exact(start_level, n, depth_limit):
            result.append(topo)
            if len(result) > count_cap:
                raise CapacityError(
                    f"topology enumeration exceeded the cap of {count_cap}",
                    states_explored=len(result), partial=tuple(result))
    return tuple(result)


# --- configuration DP -------------------------------------------------------


@dataclass(frozen=True)
class Candidate:
    """One reachable configuration: per-node signature unit vectors and, per
    group, the placement that realized them (None when the group is skipped;
    otherwise (node index, action id) pairs on an antichain)."""

    signatures: tuple[tuple[int, ...], ...]
    placements: tuple[tuple[tuple[int, str], ...] | None, ...]


@dataclass(frozen=True)
class ConfigDpResult:
    candidates: tuple[Candidate, ...]
    states_explored: int
    group_order: tuple[str, ...]


def _topology_nodes(topology: Topology) -> tuple[list[int], list[tuple[int, ...]], list[list[int]]]:
    """Preorder levels, per-node ancestor tuples, and root-to-leaf paths."""
    levels: list[int] = []
    ancestors: list[tuple[int, ...]] = []
    paths: list[list[int]] = []

    def walk(node: Topology, anc: tuple[int, ...]) -> None:
        idx = len(levels)
        levels.append(node.level)
        ancestors.append(anc)
        here = anc + (idx,)
        if not node.children:
            paths.append(list(here))
            return
        for _, child in node.children:
            walk(child, here)

    walk(topology, ())
    return levels, ancestors, paths


def _antichains(n: int, ancestors: list[tuple[int, ...]]) -> list[tuple[int, ...]]:
    comparable = [set(anc) for anc in ancestors]
    for i, anc in enumerate(ancestors):
        for a in anc:
            comparable[a].add(i)
    out: list[tuple[int, ...]] = []

    def grow(start: int, chosen: tuple[int, ...], blocked: frozenset[int]) -> None:
        for i in range(start, n):
            if i in blocked:
                continue
            sel = chosen + (i,)
            out.append(sel)
            grow(i + 1, sel, blocked | comparable[i] | {i})

    grow(0, (), frozenset())
    return out


def config_dp(instance: Instance, topology: Topology, grid: float, max_ref: float,
              caps: Sequence[int] | int | None = None, *,
              state_cap: int | None = None) -> ConfigDpResult:
    """Forward reachability over configurations.

    Groups are folded in one at a time (ordered by their smallest action
    id); each may be skipped or placed on any antichain of topology nodes,
    choosing one member action per placed node.  Every placement consumes
    one cap unit on each root-to-leaf path through the antichain.  States
    are per-node signature sums plus residual caps; each surviving
    configuration keeps its first-found traceback.
    """
    if grid <= 0.0:
        raise ParameterError("grid must be positive")
    cap_limit = state_cap
    if cap_limit is None:
        cap_limit = int(os.environ.get(STATE_CAP_ENV, DEFAULT_STATE_CAP))
    levels, ancestors, paths = _topology_nodes(topology)
    n_nodes = len(levels)
    K = instance.values.level_count
    width = K + 1

    horizon = instance.horizon
    if caps is None:
        caps_vec = tuple(horizon for _ in paths)
    elif isinstance(caps, int):
        caps_vec = tuple(min(caps, horizon) for _ in paths)
    else:
        if len(caps) != len(paths):
            raise ParameterError(
                f"caps vector has {len(caps)} entries for {len(paths)} paths")
        caps_vec = tuple(min(int(c), horizon) for c in caps)
    if any(c < 0 for c in caps_vec):
        raise ParameterError("caps must be nonnegative")

    node_paths = [frozenset(j for j, path in enumerate(paths) if i in path)
                  for i in range(n_nodes)]
    antichains = _antichains(n_nodes, ancestors)

    groups: dict[str, list[str]] = {}
    for spec in sorted(instance.actions, key=lambda s: s.id):
        groups.setdefault(spec.group, []).append(spec.id)
    group_order = tuple(sorted(groups, key=lambda g: groups[g][0]))

    sig_cache: dict[tuple[str, int], tuple[int, ...] | None] = {}

    def units_for(action_id: str, level: int) -> tuple[int, ...] | None:
        key = (action_id, level)
        if key not in sig_cache:
            spec = instance.action(action_id)
            if level not in spec.rows:
                sig_cache[key] = None
            else:
                sig_cache[key] = action_signature(
                    instance, action_id, level, grid, max_ref).units
        return sig_cache[key]

    # Placements per group: (covered path set, ((node, action, units), ...)).
    Placement = tuple[frozenset, tuple[tuple[int, str, tuple[int, ...]], ...]]
    placements_by_group: list[list[Placement]] = []
    for g in group_order:
        members = groups[g]
        opts: list[Placement] = []
        for chain in antichains:
            per_node: list[list[tuple[int, str, tuple[int, ...]]]] = []
            for i in chain:
                cell = []
                for action_id in members:
                    u = units_for(action_id, levels[i])
                    if u is not None:
                        cell.append((i, action_id, u))
                per_node.append(cell)
            if any(not cell for cell in per_node):
                continue
            covered = frozenset().union(*(node_paths[i] for i in chain))
            for combo in product(*per_node):
                opts.append((covered, combo))
        placements_by_group.append(opts)

    # States are packed into single integers: the low bits hold the residual
    # caps (one guarded slot per path, so an underflowing placement is caught
    # by its guard bit), the high bits the per-node unit sums (slots sized so
    # no reachable sum can carry between them).
    max_cap = max(caps_vec, default=0)
    cb = max_cap.bit_length() + 2
    caps_bits = len(caps_vec) * cb
    caps_all = (1 << caps_bits) - 1
    guard = 0
    for j in range(len(caps_vec)):
        guard |= 1 << (j * cb + cb - 1)
    unit_max = max((max(u) for u in sig_cache.values() if u), default=0)
    sb = max(1, (max_cap * unit_max).bit_length())
    slot_mask = (1 << sb) - 1

    init_key = 0
    for j, c in enumerate(caps_vec):
        init_key |= c << (j * cb)

    # Per group: (packed delta, placement tuple).  The delta adds the unit
    # sums and subtracts the covered caps in one integer add.
    deltas_by_group: list[list[tuple[int, tuple[tuple[int, str], ...]]]] = []
    for opts in placements_by_group:
        deltas: list[tuple[int, tuple[tuple[int, str], ...]]] = []
        for covered, combo in opts:
            d = 0
            for i, _action_id, u in combo:
                base = caps_bits + i * width * sb
                for w, uw in enumerate(u):
                    d += uw << (base + w * sb)
            for j in covered:
                d -= 1 << (j * cb)
            deltas.append((d, tuple((i, a) for i, a, _ in combo)))
        deltas_by_group.append(deltas)

    stages: list[dict[int, tuple[int, tuple[tuple[int, str], ...] | None]]]
    stages = [{init_key: (init_key, None)}]
    frozen: dict[int, int] = {}  # key -> last stage index it appears in
    explored = 1
    for g, deltas in enumerate(deltas_by_group):
        prev = stages[-1]
        nxt: dict[int, tuple[int, tuple[tuple[int, str], ...] | None]] = {}
        for key in prev:
            if key & caps_all == 0:
                # No placement can ever fit again; park the state and stop
                # carrying it through the remaining stages.
                if key not in frozen:
                    frozen[key] = g
                continue
            nxt[key] = (key, None)  # skip the group
            for d, placement in deltas:
                new_key = key + d
                if new_key & guard:
                    continue
                if new_key not in nxt:
                    nxt[new_key] = (key, placement)
            if len(nxt) + len(frozen) > cap_limit:
                raise CapacityError(
                    f"configuration DP exceeded the state cap of {cap_limit}",
                    states_explored=explored + len(nxt))
        explored += len(nxt)
        stages.append(nxt)

    def decode(key: int) -> tuple[tuple[int, ...], ...]:
        sums = key >> caps_bits
        out = []
        off = 0
        for _i in range(n_nodes):
            row = []
            for _w in range(width):
                row.append((sums >> off) & slot_mask)
                off += sb
            out.append(tuple(row))
        return tuple(out)

    def traceback(key: int, upto: int) -> tuple[tuple[tuple[int, str], ...] | None, ...]:
        trace: list[tuple[tuple[int, str], ...] | None] = \
            [None] * (len(stages) - 1 - upto)
        cur = key
        for stage in range(upto, 0, -1):
            prev_key, placement = stages[stage][cur]
            trace.append(placement)
            cur = prev_key
        trace.reverse()
        return tuple(trace)

    # Collapse to configurations, first found winning; parked states come
    # first (they cannot be extended), then the final stage in insertion
    # order.
    candidates: list[Candidate] = []
    seen_sums: set[int] = set()
    for key, upto in frozen.items():
        sums = key >> caps_bits
        if sums in seen_sums:
            continue
        seen_sums.add(sums)
        candidates.append(Candidate(decode(key), traceback(key, upto)))
    last = len(stages) - 1
    for key in stages[-1]:
        sums = key >> caps_bits
        if sums in seen_sums:
            continue
        seen_sums.add(sums)
        candidates.append(Candidate(decode(key), traceback(key, last)))
    return ConfigDpResult(tuple(candidates), explored, group_order)


# --- reconstruction and scoring ---------------------------------------------


def _surrogate_value(instance: Instance, topology: Topology,
                     sigs: tuple[tuple[int, ...], ...], grid: float,
                     profit_grid: float) -> float:
    """Rank configurations without materializing them.

    Per node: profit is the rounded sum, upward masses are the rounded sums
    clipped to 1, and the flat mass is whatever is left; transitions without
    a topology child fall to a terminal leaf.  Children are evaluated in
    tuple order so the node counter tracks preorder exactly.
    """
    K = instance.values.level_count
    terminal = instance.terminal
    counter = iter(range(len(sigs)))

    def value(node: Topology) -> float:
        idx = next(counter)
        units = sigs[idx]
        child_vals = {j: value(child) for j, child in node.children}
        total = units[K] * profit_grid
        up_total = 0.0
        for j in range(node.level + 1, K):
            pj = min(1.0, units[j] * grid)
            if pj == 0.0:
                continue
            up_total += pj
            total += pj * child_vals.get(j, terminal[j])
        flat = max(0.0, 1.0 - up_total)
        total += flat * child_vals.get(node.level, terminal[node.level])
        return total

    return value(topology)


def _compile_surrogate(instance: Instance, topology: Topology, grid: float,
                       profit_grid: float):
    """Flatten the topology into a postorder program so many configurations
    can be scored without recursion; agrees with _surrogate_value exactly."""
    K = instance.values.level_count
    terminal = instance.terminal
    prog: list[tuple[int, int, tuple[tuple[int, int | None], ...], int | None]] = []
    counter = iter(range(1 << 30))

    def walk(node: Topology) -> int:
        idx = next(counter)
        child_idx = {j: walk(child) for j, child in node.children}
        ups = tuple((j, child_idx.get(j)) for j in range(node.level + 1, K))
        prog.append((idx, node.level, ups, child_idx.get(node.level)))
        return idx

    walk(topology)
    n = len(prog)

    def score(sigs: tuple[tuple[int, ...], ...]) -> float:
        vals = [0.0] * n
        for idx, level, ups, flat_child in prog:
            u = sigs[idx]
            total = u[K] * profit_grid
            up_total = 0.0
            for j, ci in ups:
                uj = u[j]
                if uj:
                    pj = uj * grid
                    if pj > 1.0:
                        pj = 1.0
                    up_total += pj
                    total += pj * (terminal[j] if ci is None else vals[ci])
            flat = 1.0 - up_total
            if flat > 0.0:
                total += flat * (terminal[level] if flat_child is None
                                 else vals[flat_child])
            vals[idx] = total
        return vals[0]

    return score


def materialize(instance: Instance, topology: Topology, candidate: Candidate,
                group_order: Sequence[str]) -> BlockNode:
    """Build the concrete block tree a traceback describes.

    Items land on their nodes in group-processing order; transitions the
    items can realize but the topology does not cover become terminal
    leaves, and a node that can stay flat keeps a flat child.
    """
    levels, _ancestors, _paths = _topology_nodes(topology)
    items_at: list[list[str]] = [[] for _ in levels]
    for placement in candidate.placements:
        if placement is None:
            continue
        for node_idx, action_id in placement:
            items_at[node_idx].append(action_id)

    counter = iter(range(len(levels)))

    def build(node: Topology) -> BlockNode:
        idx = next(counter)
        items = tuple(items_at[idx])
        children: dict[int, BlockNode] = {}
        for j, child in node.children:
            children[j] = build(child)
        flat = 1.0
        reachable: set[int] = set()
        for action_id in items:
            row = instance.action(action_id).rows.get(node.level)
            if row is None:
                raise StructuralError(
                    f"action {action_id!r} has no row at level {node.level}")
            flat *= row.flat_mass(node.level)
            for j, p in row.probs:
                if j != node.level and p > 0.0:
                    reachable.add(j)
        for j in sorted(reachable):
            if j not in children:
                children[j] = block_leaf(j)
        if (flat > 0.0 or not items) and node.level not in children:
            children[node.level] = block_leaf(node.level)
        return BlockNode(items, node.level, children)

    return build(topology)


def _check_signature_sums(instance: Instance, topology: Topology,
                          candidate: Candidate, grid: float, max_ref: float) -> None:
    """The traceback must reproduce the configuration in exact units."""
    levels, _ancestors, _paths = _topology_nodes(topology)
    width = instance.values.level_count + 1
    sums = [[0] * width for _ in levels]
    for placement in candidate.placements:
        if placement is None:
            continue
        for node_idx, action_id in placement:
            units = action_signature(instance, action_id, levels[node_idx],
                                     grid, max_ref).units
            for w in range(width):
                sums[node_idx][w] += units[w]
    rebuilt = tuple(tuple(s) for s in sums)
    if rebuilt != candidate.signatures:
        raise StructuralError("traceback signature sums do not match the "
                              "configuration")


def reconstruct_and_score(instance: Instance, topology: Topology,
                          result: ConfigDpResult, grid: float, max_ref: float,
                          top_k: int = 32) -> tuple[BlockNode, float]:
    """Materialize the top-k surrogate-ranked configurations and return the
    exactly-rescored best; with no candidates, the do-nothing policy."""
    tree, value, _surrogate = _reconstruct_best(instance, topology, result,
                                                grid, max_ref, top_k)
    return tree, value


def _reconstruct_best(instance: Instance, topology: Topology,
                      result: ConfigDpResult, grid: float, max_ref: float,
                      top_k: int) -> tuple[BlockNode, float, float | None]:
    if top_k < 1:
        raise ParameterError("top_k must be at least 1")
    start = instance.start_level
    if not result.candidates:
        return block_leaf(start), instance.terminal[start], None
    profit_grid = grid * max_ref
    score = _compile_surrogate(instance, topology, grid, profit_grid)
    surrogates = [score(cand.signatures) for cand in result.candidates]
    ranked = sorted(range(len(result.candidates)), key=lambda i: -surrogates[i])
    best_tree: BlockNode | None = None
    best_value = float("-inf")
    best_surrogate: float | None = None
    for i in ranked[:top_k]:
        cand = result.candidates[i]
        _check_signature_sums(instance, topology, cand, grid, max_ref)
        tree = materialize(instance, topology, cand, result.group_order)
        value = block_profit_exact(instance, tree)
        if value > best_value:
            best_tree, best_value = tree, value
            best_surrogate = surrogates[i]
    assert best_tree is not None
    return best_tree, best_value, best_surrogate


def estimate_max(instance: Instance, hint: str) -> float:
    """Reference scale for grids and loss bounds.

    ``exact`` solves the instance from every start level; ``greedy_probemax``
    reads the greedy set value a builder attached; ``terminal_bound`` is the
    coarse certain upper bound max terminal plus horizon times best profit.
    """
    if hint == "exact":
        return max_over_starts(instance)
    if hint == "greedy_probemax":
        if instance.meta.get("kind") != "probemax" or "greedy_value" not in instance.meta:
            raise HintError("greedy_probemax hint needs a probemax-built instance")
        return float(instance.meta["greedy_value"])
    if hint == "terminal_bound":
        best_g = max((row.profit for spec in instance.actions
                      for row in spec.rows.values()), default=0.0)
        return max(instance.terminal) + instance.horizon * max(0.0, best_g)
    raise HintError(f"unknown reference-scale hint {hint!r}")


# --- end-to-end solver -------------------------------------------------------


@dataclass
class PtasKnobs:
    """Tuning knobs.  The theory couples them all to eps; they are exposed
    independently so desk-scale runs stay tractable (see faithful_knobs)."""

    eps: float = 0.3
    grid: float = 0.05
    block_budget: int = 4
    depth_limit: int = 3
    caps: int | None = None
    top_k: int = 32
    max_hint: str = "exact"
    state_cap: int | None = None
    topology_cap: int = 200_000


@dataclass
class PtasDiagnostics:
    max_ref: float
    topologies: int = 0
    completed: int = 0
    capacity_errors: int = 0
    states_explored: int = 0
    best_topology: int = -1
    best_surrogate: float | None = None
    partial: bool = False


@dataclass
class PtasResult:
    tree: BlockNode
    value: float
    diagnostics: PtasDiagnostics


def faithful_knobs(instance: Instance, eps: float) -> PtasKnobs:
    """The literal eps-coupled parameterization.

    Provided for reference: the grid is eps^4 over the action count and the
    budgets are exponential in 1/eps^3, which is far outside desk scale for
    any eps of practical interest.
    """
    if not (0.0 < eps < 1.0):
        raise ParameterError("eps must lie in (0, 1)")
    n = max(1, len(instance.actions))
    depth = math.ceil(eps ** -3)
    K = instance.values.level_count
    return PtasKnobs(eps=eps, grid=eps ** 4 / n, block_budget=K ** depth,
                     depth_limit=depth)


def solve_ptas(instance: Instance, knobs: PtasKnobs) -> PtasResult:
    """Run the full pipeline and return the best exactly-scored block tree.

    Every topology is searched and rescored separately on purpose: the
    surrogate overestimates fat multi-item blocks, and small topologies
    whose rankings are free of them are where clean configurations survive
    into the exactly-scored top_k.  Per-topology capacity failures are
    recorded and skipped; the result is then flagged partial.  The
    do-nothing policy is always a candidate, so the returned value is at
    least the start level's terminal payoff.
    """
    report = validate_instance(instance)
    if not report.compliant:
        raise ParameterError(
            "solve_ptas needs a compliant instance; violations: "
            + "; ".join(report.violations[:3]))
    if not (0.0 < knobs.eps <= 1.0):
        raise ParameterError("eps must lie in (0, 1]")
    if knobs.grid <= 0.0:
        raise ParameterError("grid must be positive")
    max_ref = estimate_max(instance, knobs.max_hint)
    if max_ref <= 0.0:
        max_ref = 1.0  # degenerate all-zero instance; any scale works
    diag = PtasDiagnostics(max_ref=max_ref)
    start = instance.start_level
    if instance.horizon == 0:
        return PtasResult(block_leaf(start), instance.terminal[start], diag)
    depth_eff = min(knobs.depth_limit, instance.horizon)
    K = instance.values.level_count
    try:
        topologies = enumerate_topologies(K, knobs.block_budget, depth_eff,
                                          instance.start_level,
                                          count_cap=knobs.topology_cap)
    except CapacityError as err:
        topologies = err.partial or ()
        diag.partial = True
    diag.topologies = len(topologies)
    best_tree: BlockNode = block_leaf(start)
    best_value = instance.terminal[start]
    for ti, topo in enumerate(topologies):
        try:
            result = config_dp(instance, topo, knobs.grid, max_ref, knobs.caps,
                               state_cap=knobs.state_cap)
        except CapacityError as err:
            diag.capacity_errors += 1
            diag.states_explored += err.states_explored
            diag.partial = True
            continue
        diag.states_explored += result.states_explored
        tree, value, surrogate = _reconstruct_best(
            instance, topo, result, knobs.grid, max_ref, knobs.top_k)
        diag.completed += 1
        if value > best_value:
            best_tree, best_value = tree, value
            diag.best_topology = ti
            diag.best_surrogate = surrogate
    return PtasResult(best_tree, best_value, diag)
