"""JSON round-trips for problem specs, kernel instances, and policy trees.

Two top-level document shapes share the ``parse_instance`` entry point.
The problem form carries a ``kind`` plus raw item distributions; the
kernel form carries the compiled level and action tables, with each row
written as ``[from, [[to, p], ...], profit]``.  Serialization writes
sorted keys and shortest-repr numbers, so equal objects yield identical
bytes and every emitted float parses back to the same value.

Metadata round-trips through a tuple convention: JSON arrays inside
``meta`` parse back as tuples, matching what the builders store.
"""

from __future__ import annotations

import json
from collections.abc import Mapping
from typing import Any

from ..block import BlockNode
from ..exceptions import ParameterError, ParseError
from ..model import ActionSpec, Instance, Pmf, PolicyNode, TransitionRow, ValueSpace
from ..problems import KINDS, ProblemSpec

__all__ = [
    "parse_block_tree",
    "parse_instance",
    "parse_policy",
    "parse_policy_or_block",
    "serialize_block_tree",
    "serialize_instance",
    "serialize_policy",
    "serialize_spec",
]

_SPEC_FIELDS = {"kind", "items", "m", "k", "target", "capacity", "eps",
                "costs", "profits"}
_KERNEL_FIELDS = {"levels", "rep", "horizon", "start_level", "terminal",
                  "actions", "meta"}


def _fail(field: str, why: str) -> None:
    raise ParseError(f"{field}: {why}")


def _num(value: object, field: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(field, f"expected a number, got {value!r}")
    return float(value)


def _int(value: object, field: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        _fail(field, f"expected an integer, got {value!r}")
    return value


def _str(value: object, field: str) -> str:
    if not isinstance(value, str):
        _fail(field, f"expected a string, got {value!r}")
    return value


def _pmf(value: object, field: str) -> Pmf:
    if not isinstance(value, list):
        _fail(field, "expected a list of [outcome, probability] pairs")
    entries = []
    for idx, pair in enumerate(value):
        where = f"{field}[{idx}]"
        if not isinstance(pair, list) or len(pair) != 2:
            _fail(where, "expected an [outcome, probability] pair")
        outcome = _num(pair[0], f"{where}.outcome")
        prob = _num(pair[1], f"{where}.probability")
        if prob < 0.0:
            _fail(f"{where}.probability", f"negative probability {prob!r}")
        entries.append((outcome, prob))
    try:
        return Pmf(tuple(entries))
    except ParameterError as exc:
        raise ParseError(f"{field}: {exc}") from exc


def _tupled(value: object) -> object:
    """Canonicalize parsed metadata: arrays become tuples, recursively."""
    if isinstance(value, list):
        return tuple(_tupled(v) for v in value)
    if isinstance(value, dict):
        return {k: _tupled(v) for k, v in value.items()}
    return value


def _listed(value: object) -> object:
    """Inverse of :func:`_tupled` for serialization."""
    if isinstance(value, tuple):
        return [_listed(v) for v in value]
    if isinstance(value, Mapping):
        return {k: _listed(v) for k, v in value.items()}
    return value


def _parse_spec(obj: Mapping[str, object]) -> ProblemSpec:
    kind = obj.get("kind")
    if kind not in KINDS:
        _fail("kind", f"unknown kind {kind!r}; expected one of {', '.join(KINDS)}")
    unknown = sorted(set(obj) - _SPEC_FIELDS)
    if unknown:
        _fail(unknown[0], "unknown field")
    raw_items = obj.get("items")
    if not isinstance(raw_items, list):
        _fail("items", "expected a list of {\"pmf\": ...} objects")
    items = []
    for idx, entry in enumerate(raw_items):
        if not isinstance(entry, dict) or "pmf" not in entry:
            _fail(f"items[{idx}]", "expected an object with a \"pmf\" field")
        items.append(_pmf(entry["pmf"], f"items[{idx}].pmf"))
    kwargs: dict[str, Any] = {}
    for name in ("m", "k"):
        if obj.get(name) is not None:
            kwargs[name] = _int(obj[name], name)
    for name in ("target", "capacity", "eps"):
        if obj.get(name) is not None:
            kwargs[name] = _num(obj[name], name)
    for name in ("costs", "profits"):
        raw = obj.get(name)
        if raw is not None:
            if not isinstance(raw, list):
                _fail(name, "expected a list of numbers")
            kwargs[name] = tuple(_num(v, f"{name}[{j}]") for j, v in enumerate(raw))
    try:
        return ProblemSpec(kind=kind, items=tuple(items), **kwargs)
    except ParameterError as exc:
        raise ParseError(str(exc)) from exc


def _parse_rows(value: object, field: str) -> dict[int, TransitionRow]:
    if not isinstance(value, list):
        _fail(field, "expected a list of [from, [[to, p], ...], profit] triples")
    rows: dict[int, TransitionRow] = {}
    for idx, triple in enumerate(value):
        where = f"{field}[{idx}]"
        if not isinstance(triple, list) or len(triple) != 3:
            _fail(where, "expected [from, [[to, p], ...], profit]")
        src = _int(triple[0], f"{where}.from")
        if src in rows:
            _fail(where, f"duplicate row for level {src}")
        raw_probs = triple[1]
        if not isinstance(raw_probs, list):
            _fail(f"{where}.probs", "expected a list of [to, p] pairs")
        probs = []
        for j, pair in enumerate(raw_probs):
            pwhere = f"{where}.probs[{j}]"
            if not isinstance(pair, list) or len(pair) != 2:
                _fail(pwhere, "expected a [to, p] pair")
            to = _int(pair[0], f"{pwhere}.to")
            p = _num(pair[1], f"{pwhere}.p")
            if p < 0.0:
                _fail(f"{pwhere}.p", f"negative probability {p!r}")
            probs.append((to, p))
        profit = _num(triple[2], f"{where}.profit")
        rows[src] = TransitionRow(tuple(probs), profit)
    return rows


def _parse_kernel(obj: Mapping[str, object]) -> Instance:
    unknown = sorted(set(obj) - _KERNEL_FIELDS)
    if unknown:
        _fail(unknown[0], "unknown field")
    levels = _int(obj.get("levels"), "levels")
    raw_rep = obj.get("rep")
    rep = None
    if raw_rep is not None:
        if not isinstance(raw_rep, list):
            _fail("rep", "expected a list of numbers or null")
        rep = tuple(_num(v, f"rep[{i}]") for i, v in enumerate(raw_rep))
    horizon = _int(obj.get("horizon"), "horizon")
    start = _int(obj.get("start_level", 0), "start_level")
    raw_terminal = obj.get("terminal")
    if not isinstance(raw_terminal, list):
        _fail("terminal", "expected a list of numbers")
    terminal = tuple(_num(v, f"terminal[{i}]") for i, v in enumerate(raw_terminal))
    raw_actions = obj.get("actions")
    if not isinstance(raw_actions, list):
        _fail("actions", "expected a list of action objects")
    actions = []
    for idx, entry in enumerate(raw_actions):
        where = f"actions[{idx}]"
        if not isinstance(entry, dict):
            _fail(where, "expected an object")
        unknown = sorted(set(entry) - {"id", "group", "rows", "meta"})
        if unknown:
            _fail(f"{where}.{unknown[0]}", "unknown field")
        action_id = _str(entry.get("id"), f"{where}.id")
        group = _str(entry.get("group"), f"{where}.group")
        rows = _parse_rows(entry.get("rows"), f"{where}.rows")
        raw_meta = entry.get("meta", {})
        if not isinstance(raw_meta, dict):
            _fail(f"{where}.meta", "expected an object")
        actions.append(ActionSpec(action_id, group, rows, _tupled(raw_meta)))
    raw_meta = obj.get("meta", {})
    if not isinstance(raw_meta, dict):
        _fail("meta", "expected an object")
    try:
        return Instance(ValueSpace(levels, rep), horizon, tuple(actions),
                        terminal, start_level=start, meta=_tupled(raw_meta))
    except ParameterError as exc:
        raise ParseError(str(exc)) from exc


def _loads(text: str) -> Mapping[str, object]:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise ParseError("top level: expected an object")
    return obj


def parse_instance(text: str) -> ProblemSpec | Instance:
    """Parse either document shape; errors name the offending field."""
    obj = _loads(text)
    if "kind" in obj:
        return _parse_spec(obj)
    if "levels" in obj or "actions" in obj:
        return _parse_kernel(obj)
    raise ParseError("top level: expected a \"kind\" (problem form) or "
                     "\"levels\"/\"actions\" (kernel form) field")


def _dumps(doc: object) -> str:
    return json.dumps(doc, sort_keys=True, allow_nan=False) + "\n"


def serialize_spec(spec: ProblemSpec) -> str:
    doc: dict[str, object] = {
        "kind": spec.kind,
        "items": [{"pmf": [[o, p] for o, p in pmf.entries]} for pmf in spec.items],
        "eps": spec.eps,
    }
    for name in ("m", "k", "target", "capacity"):
        value = getattr(spec, name)
        if value is not None:
            doc[name] = value
    if spec.costs is not None:
        doc["costs"] = list(spec.costs)
    if spec.profits is not None:
        doc["profits"] = list(spec.profits)
    return _dumps(doc)


def serialize_instance(instance: Instance) -> str:
    doc = {
        "levels": instance.values.level_count,
        "rep": None if instance.values.rep is None else list(instance.values.rep),
        "horizon": instance.horizon,
        "start_level": instance.start_level,
        "terminal": list(instance.terminal),
        "actions": [
            {
                "id": spec.id,
                "group": spec.group,
                "rows": [[lvl, [[j, p] for j, p in row.probs], row.profit]
                         for lvl, row in sorted(spec.rows.items())],
                "meta": _listed(dict(spec.meta)),
            }
            for spec in instance.actions
        ],
        "meta": _listed(dict(instance.meta)),
    }
    return _dumps(doc)


def _policy_doc(node: PolicyNode) -> dict[str, object]:
    return {
        "action": node.action,
        "level": node.level,
        "t": node.t,
        "children": {str(j): _policy_doc(c) for j, c in sorted(node.children.items())},
    }


def serialize_policy(tree: PolicyNode) -> str:
    return _dumps(_policy_doc(tree))


def _parse_policy_node(obj: object, field: str) -> PolicyNode:
    if not isinstance(obj, dict):
        _fail(field, "expected an object")
    action = obj.get("action")
    if action is not None and not isinstance(action, str):
        _fail(f"{field}.action", f"expected a string or null, got {action!r}")
    level = _int(obj.get("level"), f"{field}.level")
    t = _int(obj.get("t"), f"{field}.t")
    children = _parse_children(obj.get("children", {}), field, _parse_policy_node)
    return PolicyNode(action, level, t, children)


def _parse_children(raw: object, field: str, node_parser) -> dict[int, Any]:
    if not isinstance(raw, dict):
        _fail(f"{field}.children", "expected an object keyed by level")
    children = {}
    for key, sub in raw.items():
        try:
            j = int(key)
        except ValueError:
            _fail(f"{field}.children", f"non-integer level key {key!r}")
        children[j] = node_parser(sub, f"{field}.children[{key}]")
    return children


def parse_policy(text: str) -> PolicyNode:
    return _parse_policy_node(_loads(text), "policy")


def _block_doc(node: BlockNode) -> dict[str, object]:
    return {
        "items": list(node.items),
        "level": node.level,
        "children": {str(j): _block_doc(c) for j, c in sorted(node.children.items())},
    }


def serialize_block_tree(tree: BlockNode) -> str:
    return _dumps(_block_doc(tree))


def _parse_block_node(obj: object, field: str) -> BlockNode:
    if not isinstance(obj, dict):
        _fail(field, "expected an object")
    raw_items = obj.get("items", [])
    if not isinstance(raw_items, list):
        _fail(f"{field}.items", "expected a list of action ids")
    items = tuple(_str(v, f"{field}.items[{i}]") for i, v in enumerate(raw_items))
    level = _int(obj.get("level"), f"{field}.level")
    children = _parse_children(obj.get("children", {}), field, _parse_block_node)
    return BlockNode(items, level, children)


def parse_block_tree(text: str) -> BlockNode:
    return _parse_block_node(_loads(text), "block")


def parse_policy_or_block(text: str) -> PolicyNode | BlockNode:
    """Sniff the tree shape: block documents carry an ``items`` field."""
    obj = _loads(text)
    if "items" in obj:
        return _parse_block_node(obj, "block")
    return _parse_policy_node(obj, "policy")
