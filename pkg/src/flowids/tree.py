"""Decision tree model: load, validate, quantize, evaluate.

The exchange document is JSON with a strict schema (unknown fields are
rejected so the format stays forward-strict):

    {
      "format_version": 1,
      "n_classes": 2,
      "feature_names": [... the 12 canonical names, any order ...],
      "nodes": [
        {"id": 0, "kind": "split", "feature": "pkt_len",
         "threshold": "100.5", "left": 1, "right": 2},
        {"id": 1, "kind": "leaf", "label": 0},
        {"id": 2, "kind": "leaf", "label": 1}
      ]
    }

Thresholds are decimal strings; the loader keeps both the exact decimal
(for the float reference path) and the Q47.16 quantization (the only
form the packet path uses). Traversal convention: feature <= threshold
goes left.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Any

from .features import FEATURE_INDEX, FEATURE_NAMES, N_FEATURES
from .fxp import Fx64, FxParseError, fx_from_decimal, fx_to_decimal

FORMAT_VERSION = 1
DEFAULT_MAX_DEPTH = 10
DEFAULT_MAX_LEAVES = 1000

LEAF = -1


class ModelError(ValueError):
    """Document fails validation (schema, structure, or limits)."""


@dataclass(slots=True)
class TreeNode:
    feature_idx: int  # LEAF for leaves
    threshold_raw: Fx64
    threshold_exact: Fraction | None
    left: int
    right: int
    label: int


@dataclass
class TreeModel:
    """Validated tree; immutable after load, shareable across threads."""

    nodes: list[TreeNode]
    feature_names: tuple[str, ...]
    depth: int
    n_leaves: int
    n_classes: int


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ModelError(message)


def _int_field(obj: dict, key: str, where: str) -> int:
    val = obj.get(key)
    _require(type(val) is int, f"{where}: field {key!r} must be an integer")
    return val


_SPLIT_FIELDS = {"id", "kind", "feature", "threshold", "left", "right"}
_LEAF_FIELDS = {"id", "kind", "label"}


def load_document(doc: Any, max_depth: int = DEFAULT_MAX_DEPTH, max_leaves: int = DEFAULT_MAX_LEAVES) -> TreeModel:
    """Validate a parsed exchange document and build a TreeModel."""
    _require(isinstance(doc, dict), "document must be a JSON object")
    extra = set(doc) - {"format_version", "n_classes", "feature_names", "nodes"}
    _require(not extra, f"unknown document fields: {sorted(extra)}")

    version = _int_field(doc, "format_version", "header")
    _require(version == FORMAT_VERSION, f"unsupported format_version {version}")
    n_classes = _int_field(doc, "n_classes", "header")
    _require(n_classes >= 2, f"n_classes must be >= 2, got {n_classes}")

    names = doc.get("feature_names")
    _require(isinstance(names, list) and all(isinstance(n, str) for n in names), "feature_names must be a list of strings")
    unknown = [n for n in names if n not in FEATURE_INDEX]
    _require(not unknown, f"unknown feature name(s): {unknown}")
    _require(
        len(names) == N_FEATURES and len(set(names)) == N_FEATURES,
        "feature_names must contain each of the 12 canonical names exactly once",
    )

    raw_nodes = doc.get("nodes")
    _require(isinstance(raw_nodes, list) and raw_nodes, "nodes must be a non-empty list")

    by_id: dict[int, dict] = {}
    for rec in raw_nodes:
        _require(isinstance(rec, dict), "each node must be an object")
        node_id = _int_field(rec, "id", "node")
        _require(node_id >= 0, f"node id {node_id} is negative")
        _require(node_id not in by_id, f"duplicate node id {node_id}")
        kind = rec.get("kind")
        if kind == "split":
            extra = set(rec) - _SPLIT_FIELDS
            _require(not extra, f"node {node_id}: unknown fields {sorted(extra)}")
            _require(set(rec) == _SPLIT_FIELDS, f"node {node_id}: split nodes need fields {sorted(_SPLIT_FIELDS)}")
            _require(isinstance(rec.get("feature"), str), f"node {node_id}: feature must be a string")
            _require(rec["feature"] in FEATURE_INDEX, f"node {node_id}: unknown feature name {rec['feature']!r}")
            _require(isinstance(rec.get("threshold"), str), f"node {node_id}: threshold must be a decimal string")
            _int_field(rec, "left", f"node {node_id}")
            _int_field(rec, "right", f"node {node_id}")
        elif kind == "leaf":
            extra = set(rec) - _LEAF_FIELDS
            _require(not extra, f"node {node_id}: unknown fields {sorted(extra)}")
            _require(set(rec) == _LEAF_FIELDS, f"node {node_id}: leaf nodes need fields {sorted(_LEAF_FIELDS)}")
            label = _int_field(rec, "label", f"node {node_id}")
            _require(0 <= label < n_classes, f"node {node_id}: label {label} outside [0, {n_classes})")
        else:
            raise ModelError(f"node {node_id}: kind must be 'split' or 'leaf', got {kind!r}")
        by_id[node_id] = rec

    _require(0 in by_id, "root node (id 0) is missing")
    for rec in by_id.values():
        if rec["kind"] == "split":
            for side in ("left", "right"):
                _require(
                    rec[side] in by_id,
                    f"node {rec['id']}: {side} references unknown node id {rec[side]}",
                )

    # reachability, acyclicity, depth and leaf count in one iterative walk
    depth = 0
    n_leaves = 0
    seen: set[int] = set()
    stack: list[tuple[int, int]] = [(0, 0)]
    while stack:
        node_id, d = stack.pop()
        _require(node_id not in seen, f"node {node_id} reachable twice (cycle or shared subtree)")
        seen.add(node_id)
        rec = by_id[node_id]
        if rec["kind"] == "leaf":
            n_leaves += 1
            depth = max(depth, d)
        else:
            stack.append((rec["left"], d + 1))
            stack.append((rec["right"], d + 1))
    unreachable = sorted(set(by_id) - seen)
    _require(not unreachable, f"unreachable node id(s): {unreachable}")
    _require(depth <= max_depth, f"depth exceeds {max_depth} (tree depth is {depth})")
    _require(n_leaves <= max_leaves, f"leaf count exceeds {max_leaves} (tree has {n_leaves})")

    # normalize ids to contiguous indices with the root first
    order = [0] + [i for i in by_id if i != 0]
    index_of = {node_id: idx for idx, node_id in enumerate(order)}
    nodes: list[TreeNode] = []
    for node_id in order:
        rec = by_id[node_id]
        if rec["kind"] == "leaf":
            nodes.append(TreeNode(LEAF, 0, None, 0, 0, rec["label"]))
        else:
            try:
                raw = fx_from_decimal(rec["threshold"])
            except FxParseError as exc:
                raise ModelError(f"node {node_id}: {exc}") from exc
            nodes.append(
                TreeNode(
                    FEATURE_INDEX[rec["feature"]],
                    raw,
                    Fraction(rec["threshold"]),
                    index_of[rec["left"]],
                    index_of[rec["right"]],
                    0,
                )
            )
    return TreeModel(nodes, tuple(names), depth, n_leaves, n_classes)


def load_model(text: str, max_depth: int = DEFAULT_MAX_DEPTH, max_leaves: int = DEFAULT_MAX_LEAVES) -> TreeModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelError(f"document is not valid JSON: {exc}") from exc
    return load_document(doc, max_depth=max_depth, max_leaves=max_leaves)


def eval_tree(model: TreeModel, fv: list[Fx64]) -> int:
    """Fixed-point traversal; visits at most `depth` internal nodes."""
    nodes = model.nodes
    node = nodes[0]
    while node.feature_idx != LEAF:
        if fv[node.feature_idx] <= node.threshold_raw:
            node = nodes[node.left]
        else:
            node = nodes[node.right]
    return node.label


def eval_with_margin(model: TreeModel, fv: list[Fx64]) -> tuple[int, Fx64 | None]:
    """Traversal that also reports the smallest |feature - threshold| met.

    The margin (raw Q47.16 units) tells callers whether the input sat
    close enough to a path threshold for quantization to matter; None
    for a single-leaf model.
    """
    nodes = model.nodes
    node = nodes[0]
    margin: Fx64 | None = None
    while node.feature_idx != LEAF:
        gap = abs(fv[node.feature_idx] - node.threshold_raw)
        if margin is None or gap < margin:
            margin = gap
        if fv[node.feature_idx] <= node.threshold_raw:
            node = nodes[node.left]
        else:
            node = nodes[node.right]
    return node.label, margin


def eval_float(model: TreeModel, fv: list[float]) -> int:
    """Reference traversal on the exact decimal thresholds.

    Comparisons are exact (floats lifted to rationals); used to measure
    quantization divergence, never on the packet path.
    """
    exact = [Fraction(x) for x in fv]
    nodes = model.nodes
    node = nodes[0]
    while node.feature_idx != LEAF:
        if exact[node.feature_idx] <= node.threshold_exact:
            node = nodes[node.left]
        else:
            node = nodes[node.right]
    return node.label


def quantize_document(text: str, max_depth: int = DEFAULT_MAX_DEPTH, max_leaves: int = DEFAULT_MAX_LEAVES) -> tuple[str, float]:
    """Rewrite thresholds onto the Q47.16 grid; returns (text, max |error|).

    The output document is its own fixed point: re-quantizing it is the
    identity.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelError(f"document is not valid JSON: {exc}") from exc
    load_document(doc, max_depth=max_depth, max_leaves=max_leaves)  # validate first
    max_err = Fraction(0)
    for rec in doc["nodes"]:
        if rec["kind"] == "split":
            raw = fx_from_decimal(rec["threshold"])
            err = abs(Fraction(rec["threshold"]) - Fraction(raw, 65536))
            max_err = max(max_err, err)
            rec["threshold"] = fx_to_decimal(raw)
    return json.dumps(doc, indent=2) + "\n", float(max_err)


def model_summary(model: TreeModel) -> dict:
    usage: dict[str, int] = {}
    for node in model.nodes:
        if node.feature_idx != LEAF:
            name = FEATURE_NAMES[node.feature_idx]
            usage[name] = usage.get(name, 0) + 1
    return {
        "n_nodes": len(model.nodes),
        "depth": model.depth,
        "n_leaves": model.n_leaves,
        "n_classes": model.n_classes,
        "feature_usage": usage,
    }
