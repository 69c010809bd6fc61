"""Lower a tree model to a bounded, float-free program and check it.

The emitted artifact is restricted C aimed at an in-kernel verifier:
one counted loop with a literal bound, every array subscript masked by a
literal, integer arithmetic only, declared stack budget. The checker is
structural and lexical over that emitted form (it is not a verifier
reimplementation); it exists so a build breaks at emission time, not at
load time.

Node tables are padded to a power of two so subscript masking is a
single AND with a literal; padding entries are unreachable leaves.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .tree import LEAF, TreeModel

STACK_BUDGET_BYTES = 512


class EmissionError(ValueError):
    """Program exceeds the configured emission limits."""


@dataclass
class FlattenedProgram:
    """Index-linked node table walked by a counted loop."""

    feature_idx: list[int]  # LEAF (-1) marks leaves
    threshold_raw: list[int]
    left: list[int]
    right: list[int]
    label: list[int]
    loop_bound: int
    n_nodes: int


@dataclass
class EmitConfig:
    max_depth: int = 10
    max_leaves: int = 1000
    unroll: bool = False
    map_entries: int = 65536


@dataclass
class Violation:
    rule: str
    location: str
    detail: str


@dataclass
class ConstraintReport:
    passed: bool
    violations: list[Violation] = field(default_factory=list)

    def describe(self) -> str:
        if self.passed:
            return "all constraints satisfied"
        return "\n".join(f"[{v.rule}] {v.location}: {v.detail}" for v in self.violations)


def flatten(model: TreeModel) -> FlattenedProgram:
    """Array form of the tree; the walk visits at most loop_bound nodes."""
    return FlattenedProgram(
        feature_idx=[n.feature_idx for n in model.nodes],
        threshold_raw=[n.threshold_raw for n in model.nodes],
        left=[n.left for n in model.nodes],
        right=[n.right for n in model.nodes],
        label=[n.label for n in model.nodes],
        loop_bound=model.depth,
        n_nodes=len(model.nodes),
    )


def walk(prog: FlattenedProgram, fv: list[int]) -> int:
    """Bounded iterative traversal, mirroring the emitted loop."""
    feature = prog.feature_idx
    thresh = prog.threshold_raw
    left = prog.left
    right = prog.right
    node = 0
    for _ in range(prog.loop_bound):
        f = feature[node]
        if f < 0:
            break
        node = left[node] if fv[f] <= thresh[node] else right[node]
    return prog.label[node]


def _pad_pow2(n: int) -> int:
    p = 1
    while p < n:
        p <<= 1
    return p


def _fmt_table(values: list[int], suffix: str = "") -> str:
    return ", ".join(f"{v}{suffix}" for v in values)


_PRELUDE = """\
typedef signed long long s64;
typedef unsigned long long u64;
typedef unsigned int u32;
typedef unsigned short u16;
typedef unsigned char u8;

struct flow_key {
    u32 ip_lo;
    u32 ip_hi;
    u16 port_lo;
    u16 port_hi;
    u8 protocol;
};

struct flow_rec {
    u32 initiator_ip;
    u16 initiator_port;
    u64 pkt_count;
    u64 last_ts_us;
    s64 mean_len;
    s64 mad_len;
    s64 mean_iat;
    s64 mad_iat;
    s64 mean_dir;
    s64 mad_dir;
};

struct pkt_view {
    u64 ts_us;
    u32 src_ip;
    u32 dst_ip;
    u16 src_port;
    u16 dst_port;
    u8 protocol;
    u16 pkt_len;
};

/* per-flow state map, kernel-resident hash table keyed by the
 * canonical five-tuple; lookup/insert supplied by the loader
 * environment (map helpers) */
#define FLOW_MAP_ENTRIES {map_entries}
extern struct flow_rec *flow_map_lookup(const struct flow_key *key);
extern struct flow_rec *flow_map_insert(const struct flow_key *key,
                                        const struct flow_rec *fresh);

static const s64 FX_RAW_MAX = 9223372036854775807LL;
static const s64 FX_RAW_MIN = -9223372036854775807LL - 1LL;

static s64 sat_add(s64 a, s64 b)
{
    s64 r;
    if (__builtin_add_overflow(a, b, &r))
        return b > 0 ? FX_RAW_MAX : FX_RAW_MIN;
    return r;
}

static s64 sat_sub(s64 a, s64 b)
{
    s64 r;
    if (__builtin_sub_overflow(a, b, &r))
        return b < 0 ? FX_RAW_MAX : FX_RAW_MIN;
    return r;
}

static s64 fx_abs_sat(s64 a)
{
    if (a == FX_RAW_MIN)
        return FX_RAW_MAX;
    return a < 0 ? -a : a;
}

/* signed division truncates toward zero, matching the userspace
 * fixed-point divide bit for bit */
static s64 div_count(s64 a, u64 n)
{
    return a / (s64)n;
}

static void fold_stat(s64 *mean, s64 *mad, s64 x, u64 n)
{
    s64 dev;
    *mean = sat_add(*mean, div_count(sat_sub(x, *mean), n));
    dev = fx_abs_sat(sat_sub(x, *mean));
    *mad = sat_add(*mad, div_count(sat_sub(dev, *mad), n));
}

static void update_flow(struct flow_rec *rec, s64 len_fx, s64 iat_fx, s64 dir_fx)
{
    u64 n = rec->pkt_count + 1;
    fold_stat(&rec->mean_len, &rec->mad_len, len_fx, n);
    fold_stat(&rec->mean_iat, &rec->mad_iat, iat_fx, n);
    fold_stat(&rec->mean_dir, &rec->mad_dir, dir_fx, n);
    rec->pkt_count = n;
}
"""

_ENTRY = """\
int ids_handle_packet(const struct pkt_view *pkt)
{
    struct flow_key key;
    struct flow_rec fresh;
    struct flow_rec *rec;
    s64 feat[16] = { 0 };
    s64 len_fx;
    s64 iat_fx;
    s64 dir_fx;

    len_fx = (s64)pkt->pkt_len * 65536LL;

    if (pkt->src_ip < pkt->dst_ip ||
        (pkt->src_ip == pkt->dst_ip && pkt->src_port <= pkt->dst_port)) {
        key.ip_lo = pkt->src_ip;
        key.port_lo = pkt->src_port;
        key.ip_hi = pkt->dst_ip;
        key.port_hi = pkt->dst_port;
    } else {
        key.ip_lo = pkt->dst_ip;
        key.port_lo = pkt->dst_port;
        key.ip_hi = pkt->src_ip;
        key.port_hi = pkt->src_port;
    }
    key.protocol = pkt->protocol;

    rec = flow_map_lookup(&key);
    if (!rec) {
        fresh.initiator_ip = pkt->src_ip;
        fresh.initiator_port = pkt->src_port;
        fresh.pkt_count = 1;
        fresh.last_ts_us = pkt->ts_us;
        fresh.mean_len = len_fx;
        fresh.mad_len = 0;
        fresh.mean_iat = 0;
        fresh.mad_iat = 0;
        fresh.mean_dir = 0;
        fresh.mad_dir = 0;
        rec = flow_map_insert(&key, &fresh);
        if (!rec)
            return -1;
        iat_fx = 0;
        dir_fx = 0;
    } else {
        iat_fx = (s64)(pkt->ts_us - rec->last_ts_us) * 65536LL;
        dir_fx = (pkt->src_ip == rec->initiator_ip &&
                  pkt->src_port == rec->initiator_port) ? 0 : 65536LL;
        update_flow(rec, len_fx, iat_fx, dir_fx);
        rec->last_ts_us = pkt->ts_us;
    }

    feat[0] = (s64)pkt->src_port * 65536LL;
    feat[1] = (s64)pkt->dst_port * 65536LL;
    feat[2] = (s64)pkt->protocol * 65536LL;
    feat[3] = len_fx;
    feat[4] = iat_fx;
    feat[5] = dir_fx;
    feat[6] = rec->mean_len;
    feat[7] = rec->mean_iat;
    feat[8] = rec->mean_dir;
    feat[9] = rec->mad_len;
    feat[10] = rec->mad_iat;
    feat[11] = rec->mad_dir;

    return classify(feat);
}
"""

# feat[16] (128) + struct flow_rec fresh (64) + struct flow_key (16)
# + scalar locals (40) + callee frames (64)
_STACK_BYTES = 312


def _emit_classify_loop(prog: FlattenedProgram, mask: int) -> str:
    return f"""\
static int classify(const s64 fv[16])
{{
    int node = 0;
    int step;
    for (step = 0; step < {prog.loop_bound}; step++) {{
        int f = node_feature[node & {mask}];
        if (f < 0)
            break;
        if (fv[f & 15] <= node_threshold[node & {mask}])
            node = node_left[node & {mask}];
        else
            node = node_right[node & {mask}];
    }}
    return node_label[node & {mask}];
}}
"""


def _emit_classify_unrolled(prog: FlattenedProgram) -> str:
    lines = ["static int classify(const s64 fv[16])", "{"]

    def emit(node: int, indent: int) -> None:
        pad = "    " * indent
        if prog.feature_idx[node] == LEAF:
            lines.append(f"{pad}return {prog.label[node]};")
            return
        lines.append(f"{pad}if (fv[{prog.feature_idx[node]}] <= {prog.threshold_raw[node]}LL) {{")
        emit(prog.left[node], indent + 1)
        lines.append(f"{pad}}} else {{")
        emit(prog.right[node], indent + 1)
        lines.append(f"{pad}}}")

    emit(0, 1)
    lines.append("}")
    lines.append("")
    return "\n".join(lines)


def emit_restricted_source(prog: FlattenedProgram, cfg: EmitConfig | None = None) -> str:
    """Deterministic source text for the flattened program."""
    cfg = cfg or EmitConfig()
    if prog.loop_bound > cfg.max_depth:
        raise EmissionError(f"loop bound {prog.loop_bound} exceeds max depth {cfg.max_depth}")
    n_leaves = sum(1 for f in prog.feature_idx if f == LEAF)
    if n_leaves > cfg.max_leaves:
        raise EmissionError(f"leaf count {n_leaves} exceeds max leaves {cfg.max_leaves}")

    padded = _pad_pow2(prog.n_nodes)
    mask = padded - 1
    pad_count = padded - prog.n_nodes
    feature = prog.feature_idx + [LEAF] * pad_count
    thresh = prog.threshold_raw + [0] * pad_count
    left = prog.left + [0] * pad_count
    right = prog.right + [0] * pad_count
    label = prog.label + [0] * pad_count

    header = f"""\
/*
 * flow classifier (restricted C for an in-kernel verifier)
 *
 * constraint contract:
 *   rule loop:  at most one loop, counted, with a literal bound
 *   rule jump:  no goto / while / do (no backward jumps)
 *   rule index: every array subscript masked or a literal below the size
 *   rule float: integer arithmetic only
 *   rule stack: declared stack budget within {STACK_BUDGET_BYTES} bytes
 *
 * stack_bytes: {_STACK_BYTES}
 * n_nodes: {prog.n_nodes}
 * padded_nodes: {padded}
 * loop_bound: {prog.loop_bound}
 * mode: {"unrolled" if cfg.unroll else "counted-loop"}
 * format: Q47_16 fixed point in signed 64-bit words
 */

"""
    if cfg.unroll:
        # the if/else chain encodes the whole table
        tables = f"enum {{ NODE_COUNT = {prog.n_nodes} }};\n\n"
        classify = _emit_classify_unrolled(prog)
    else:
        tables = f"""\
enum {{ NODE_COUNT = {prog.n_nodes} }};

static const int node_feature[{padded}] = {{ {_fmt_table(feature)} }};
static const s64 node_threshold[{padded}] = {{ {_fmt_table(thresh, "LL")} }};
static const int node_left[{padded}] = {{ {_fmt_table(left)} }};
static const int node_right[{padded}] = {{ {_fmt_table(right)} }};
static const int node_label[{padded}] = {{ {_fmt_table(label)} }};

"""
        classify = _emit_classify_loop(prog, mask)
    prelude = _PRELUDE.replace("{map_entries}", str(cfg.map_entries))
    return header + prelude + "\n" + tables + classify + "\n" + _ENTRY


_STACK_RE = re.compile(r"stack_bytes:\s*(\d+)")
_JUMP_RE = re.compile(r"\b(goto|while|do)\b")
_FOR_RE = re.compile(r"\bfor\b")
_COUNTED_FOR_RE = re.compile(r"\bfor\s*\(\s*(\w+)\s*=\s*0\s*;\s*\1\s*<\s*\d+\s*;\s*\1\+\+\s*\)")
_SUBSCRIPT_RE = re.compile(r"([A-Za-z_]\w*)\s*\[([^\][]*)\]")
_INT_LITERAL_RE = re.compile(r"^\d+$")
_MASKED_RE = re.compile(r"^\(?\s*[A-Za-z_]\w*\s*\)?\s*&\s*(\d+)$")
_FLOAT_KEYWORD_RE = re.compile(r"\b(float|double)\b")
_FLOAT_LITERAL_RE = re.compile(r"(?<![\w.])(?:\d+\.\d*|\.\d+)(?:[eE][+-]?\d+)?|(?<![\w.])\d+[eE][+-]?\d+")


def _strip_comments(text: str) -> tuple[str, bool]:
    """Blank out comments, preserving newlines; returns (text, clean)."""
    out = []
    i = 0
    n = len(text)
    clean = True
    while i < n:
        if text.startswith("/*", i):
            end = text.find("*/", i + 2)
            if end < 0:
                out.append("".join(c if c == "\n" else " " for c in text[i:]))
                clean = False
                break
            out.append("".join(c if c == "\n" else " " for c in text[i : end + 2]))
            i = end + 2
        elif text.startswith("//", i):
            end = text.find("\n", i)
            if end < 0:
                end = n
            out.append(" " * (end - i))
            i = end
        else:
            out.append(text[i])
            i += 1
    return "".join(out), clean


def _line_of(text: str, pos: int) -> str:
    return f"line {text.count(chr(10), 0, pos) + 1}"


def _check_source(text: str) -> ConstraintReport:
    violations: list[Violation] = []

    m = _STACK_RE.search(text)
    if m is None:
        violations.append(Violation("parse", "header", "missing stack_bytes declaration; not an emitted program"))
        return ConstraintReport(False, violations)
    declared = int(m.group(1))
    if declared > STACK_BUDGET_BYTES:
        violations.append(
            Violation("stack", _line_of(text, m.start()), f"declared stack {declared} exceeds {STACK_BUDGET_BYTES} bytes")
        )

    stripped, clean = _strip_comments(text)
    if not clean:
        violations.append(Violation("parse", "end of file", "unterminated comment"))
        return ConstraintReport(False, violations)

    for m in _JUMP_RE.finditer(stripped):
        violations.append(Violation("jump", _line_of(stripped, m.start()), f"forbidden control transfer {m.group(1)!r}"))

    fors = list(_FOR_RE.finditer(stripped))
    if len(fors) > 1:
        violations.append(Violation("loop", _line_of(stripped, fors[1].start()), f"{len(fors)} loops present, at most one allowed"))
    for m in fors:
        if not _COUNTED_FOR_RE.match(stripped, m.start()):
            violations.append(
                Violation("loop", _line_of(stripped, m.start()), "loop is not a counted loop with a literal bound")
            )

    sizes: dict[str, int] = {}
    for m in _SUBSCRIPT_RE.finditer(stripped):
        name, expr = m.group(1), m.group(2).strip()
        loc = _line_of(stripped, m.start())
        if name not in sizes:
            if _INT_LITERAL_RE.match(expr):
                sizes[name] = int(expr)
            else:
                violations.append(Violation("index", loc, f"array {name!r} first appears without a literal size"))
                sizes[name] = -1
            continue
        size = sizes[name]
        if _INT_LITERAL_RE.match(expr):
            if size >= 0 and int(expr) >= size:
                violations.append(Violation("index", loc, f"literal subscript {expr} out of bounds for {name}[{size}]"))
        else:
            masked = _MASKED_RE.match(expr)
            if masked is None:
                violations.append(Violation("index", loc, f"subscript {expr!r} on {name!r} is neither literal nor masked"))
            elif size >= 0 and int(masked.group(1)) > size - 1:
                violations.append(
                    Violation("index", loc, f"mask {masked.group(1)} exceeds bound {size - 1} for {name!r}")
                )

    for m in _FLOAT_KEYWORD_RE.finditer(stripped):
        violations.append(Violation("float", _line_of(stripped, m.start()), f"floating-point type {m.group(1)!r}"))
    for m in _FLOAT_LITERAL_RE.finditer(stripped):
        violations.append(Violation("float", _line_of(stripped, m.start()), f"floating-point literal {m.group(0)!r}"))

    return ConstraintReport(not violations, violations)


def _check_program(prog: FlattenedProgram, max_depth: int) -> ConstraintReport:
    violations: list[Violation] = []
    n = prog.n_nodes
    lengths = {len(prog.feature_idx), len(prog.threshold_raw), len(prog.left), len(prog.right), len(prog.label)}
    if lengths != {n}:
        violations.append(Violation("parse", "node table", "table lengths disagree with n_nodes"))
        return ConstraintReport(False, violations)
    if prog.loop_bound > max_depth:
        violations.append(Violation("loop", "loop_bound", f"loop bound {prog.loop_bound} exceeds max depth {max_depth}"))
    for i in range(n):
        if prog.feature_idx[i] == LEAF:
            continue
        for side, idx in (("left", prog.left[i]), ("right", prog.right[i])):
            if not 0 <= idx < n:
                violations.append(Violation("index", f"node {i}", f"{side} index {idx} outside [0, {n})"))
        if not 0 <= prog.feature_idx[i] < 12:
            violations.append(Violation("index", f"node {i}", f"feature index {prog.feature_idx[i]} out of range"))
    return ConstraintReport(not violations, violations)


def check_constraints(target: str | FlattenedProgram, max_depth: int = 10) -> ConstraintReport:
    """Static checks; never raises on bad input, always returns a report."""
    if isinstance(target, FlattenedProgram):
        return _check_program(target, max_depth)
    return _check_source(target)
