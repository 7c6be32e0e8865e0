"""Monte-Carlo replay of policy and block trees by multinomial descent.

Instead of walking trials one path at a time, the trial count is split at
each node with a multinomial draw over the row's transition masses.  The
per-leaf counts are distributed exactly as independent path walks, every
leaf's payoff is deterministic (profits enter through their per-probe
expectations), and the sample moments come out in closed form from the
(payoff, count) pairs.  A deterministic instance therefore reports a
half-width of exactly zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..block import BlockNode
from ..exceptions import ParameterError, StructuralError
from ..model import Instance, PolicyNode, TransitionRow
from .gen import stream

__all__ = ["SimResult", "Z99", "simulate"]

Z99 = 2.5758293035489004


@dataclass(frozen=True)
class SimResult:
    mean: float
    half_width: float
    trials: int


def _row_at(instance: Instance, action_id: str, level: int) -> TransitionRow:
    row = instance.action(action_id).rows.get(level)
    if row is None:
        raise StructuralError(f"action {action_id!r} has no row at level {level}")
    return row


def _split(g: np.random.Generator, count: int, probs: list[float]) -> list[int]:
    if len(probs) == 1:
        return [count]
    pvals = np.asarray(probs, dtype=float)
    pvals = pvals / pvals.sum()
    return [int(c) for c in g.multinomial(count, pvals)]


def _descend_policy(instance: Instance, node: PolicyNode, count: int, acc: float,
                    g: np.random.Generator, out: list[tuple[float, int]]) -> None:
    if count == 0:
        return
    if node.is_leaf:
        out.append((acc + instance.terminal[node.level], count))
        return
    row = _row_at(instance, node.action, node.level)
    acc += row.profit
    entries = [(j, p) for j, p in row.probs if p > 0.0]
    counts = _split(g, count, [p for _, p in entries])
    for (j, _p), c in zip(entries, counts):
        child = node.children.get(j)
        if child is None:
            raise StructuralError(
                f"node probing {node.action!r} at level {node.level} lacks a child for level {j}")
        _descend_policy(instance, child, c, acc, g, out)


def _descend_block(instance: Instance, node: BlockNode, item_idx: int, count: int,
                   acc: float, g: np.random.Generator,
                   out: list[tuple[float, int]]) -> None:
    """Batch semantics: items probed in order, stopping at the first one
    that leaves the entry level; each probed item contributes its row
    profit.  Mirrors the exact batch mass accounting."""
    if count == 0:
        return
    if node.is_leaf:
        if node.items:
            raise StructuralError("batch node without children")
        out.append((acc + instance.terminal[node.level], count))
        return
    if item_idx == len(node.items):
        child = node.children.get(node.level)
        if child is None:
            raise StructuralError(
                f"block at level {node.level} lacks its flat child")
        _descend_block(instance, child, 0, count, acc, g, out)
        return
    row = _row_at(instance, node.items[item_idx], node.level)
    acc += row.profit
    entries = [(j, p) for j, p in row.probs if p > 0.0]
    counts = _split(g, count, [p for _, p in entries])
    for (j, _p), c in zip(entries, counts):
        if j == node.level:
            _descend_block(instance, node, item_idx + 1, c, acc, g, out)
            continue
        child = node.children.get(j)
        if child is None:
            raise StructuralError(
                f"block at level {node.level} lacks a child for level {j}")
        if child.level != j:
            raise StructuralError(
                f"block child keyed {j} carries entry level {child.level}")
        _descend_block(instance, child, 0, c, acc, g, out)


def simulate(instance: Instance, policy: PolicyNode | BlockNode, seed: int = 0,
             trials: int = 10_000) -> SimResult:
    """Sample mean and 99% normal half-width of the policy's payoff."""
    if trials < 1:
        raise ParameterError("trials must be at least 1")
    g = stream(seed, "sim")
    out: list[tuple[float, int]] = []
    if isinstance(policy, BlockNode):
        _descend_block(instance, policy, 0, trials, 0.0, g, out)
    else:
        _descend_policy(instance, policy, trials, 0.0, g, out)
    payoffs = {x for x, c in out if c > 0}
    if len(payoffs) == 1:
        return SimResult(payoffs.pop(), 0.0, trials)
    mean = math.fsum(x * c for x, c in out) / trials
    svar = math.fsum(c * (x - mean) ** 2 for x, c in out) / (trials - 1)
    return SimResult(mean, Z99 * math.sqrt(svar / trials), trials)
