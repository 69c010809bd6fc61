"""Shared oracles and generators for the test suite.

The oracles are deliberately written against different machinery than
the code they check: the statistics oracle runs the recurrences in
exact rational arithmetic (``Fraction`` truncated back onto the 2**-16
grid at each division), and the tree oracle is a naive recursive
evaluator working straight off the exchange document.
"""

from __future__ import annotations

import math
import random
import struct
from fractions import Fraction

from flowids.features import FEATURE_INDEX, FEATURE_NAMES
from flowids.fxp import fx_from_decimal

SCALE = 1 << 16


# --- exact-rational statistics oracle ---------------------------------------

def trunc_div_grid(a: int, n: int) -> int:
    """a/n as an exact rational, truncated toward zero onto the grid."""
    return math.trunc(Fraction(a, n))


class RationalFlowStats:
    """Reference recurrence; one instance per flow.

    push() takes plain integers (bytes, microseconds, 0/1) and keeps all
    six statistics as grid integers (value * 2**16).
    """

    def __init__(self) -> None:
        self.count = 0
        self.mean = [0, 0, 0]  # len, iat, dir
        self.mad = [0, 0, 0]

    def push(self, pkt_len: int, iat_us: int, direction: int) -> None:
        self.count += 1
        for j, x in enumerate((pkt_len * SCALE, iat_us * SCALE, direction * SCALE)):
            self.mean[j] = self.mean[j] + trunc_div_grid(x - self.mean[j], self.count)
            dev = abs(x - self.mean[j])
            self.mad[j] = self.mad[j] + trunc_div_grid(dev - self.mad[j], self.count)


# --- naive recursive tree oracle ---------------------------------------------

def oracle_eval_doc(doc: dict, fv_raw: list[int]) -> int:
    """Recursive descent over the raw document; quantizes thresholds itself."""
    nodes = {n["id"]: n for n in doc["nodes"]}

    def go(node_id: int) -> int:
        node = nodes[node_id]
        if node["kind"] == "leaf":
            return node["label"]
        idx = FEATURE_INDEX[node["feature"]]
        if fv_raw[idx] <= fx_from_decimal(node["threshold"]):
            return go(node["left"])
        return go(node["right"])

    return go(0)


def quantized_thresholds(doc: dict) -> dict[int, int]:
    """Per-node quantized thresholds, for fast repeated oracle walks."""
    return {n["id"]: fx_from_decimal(n["threshold"]) for n in doc["nodes"] if n["kind"] == "split"}


def oracle_eval_fast(doc: dict, by_id: dict, thr: dict[int, int], fv_raw: list[int]) -> int:
    def go(node_id: int) -> int:
        node = by_id[node_id]
        if node["kind"] == "leaf":
            return node["label"]
        if fv_raw[FEATURE_INDEX[node["feature"]]] <= thr[node_id]:
            return go(node["left"])
        return go(node["right"])

    return go(0)


# --- random models and feature vectors ---------------------------------------

# plausible value ranges per feature: (lo, hi, fractional digits)
FEATURE_RANGES = {
    "src_port": (0, 65535, 0),
    "dst_port": (0, 65535, 0),
    "protocol": (0, 255, 0),
    "pkt_len": (20, 65535, 0),
    "iat": (0, 10_000_000, 2),
    "direction": (0, 1, 4),
    "mean_len": (20, 65535, 3),
    "mean_iat": (0, 10_000_000, 3),
    "mean_dir": (0, 1, 5),
    "mad_len": (0, 30000, 3),
    "mad_iat": (0, 5_000_000, 3),
    "mad_dir": (0, 1, 5),
}


def random_model_doc(
    rng: random.Random,
    max_depth: int = 10,
    max_leaves: int = 1000,
    n_classes: int = 2,
    p_split: float = 0.65,
) -> dict:
    """Random valid exchange document within the given limits."""
    nodes: list[dict] = []
    state = {"leaves": 1}

    def build(depth: int) -> int:
        node_id = len(nodes)
        nodes.append({})
        can_split = depth < max_depth and state["leaves"] < max_leaves
        if can_split and rng.random() < p_split:
            state["leaves"] += 1
            name = FEATURE_NAMES[rng.randrange(12)]
            lo, hi, digits = FEATURE_RANGES[name]
            if digits == 0:
                threshold = str(rng.randint(lo, hi))
            else:
                threshold = f"{rng.uniform(lo, hi):.{digits}f}"
            left = build(depth + 1)
            right = build(depth + 1)
            nodes[node_id] = {
                "id": node_id,
                "kind": "split",
                "feature": name,
                "threshold": threshold,
                "left": left,
                "right": right,
            }
        else:
            nodes[node_id] = {"id": node_id, "kind": "leaf", "label": rng.randrange(n_classes)}
        return node_id

    build(0)
    return {
        "format_version": 1,
        "n_classes": n_classes,
        "feature_names": list(FEATURE_NAMES),
        "nodes": nodes,
    }


def wide_tree_doc(n_leaves: int, n_classes: int = 2) -> dict:
    """Complete-ish tree with exactly n_leaves leaves at minimal depth.

    Splits the shallowest pending leaf first, so 1000 leaves fit in
    depth 10 (and 1024 is the depth-10 maximum).
    """
    import heapq

    nodes = [{"id": 0, "kind": "leaf", "label": 0}]
    pending = [(0, 0)]  # (depth, node_id)
    leaves = 1
    while leaves < n_leaves:
        depth, node_id = heapq.heappop(pending)
        left_id, right_id = len(nodes), len(nodes) + 1
        nodes.append({"id": left_id, "kind": "leaf", "label": 0})
        nodes.append({"id": right_id, "kind": "leaf", "label": 1 % n_classes})
        nodes[node_id] = {
            "id": node_id,
            "kind": "split",
            "feature": FEATURE_NAMES[depth % 12],
            "threshold": str(100 + node_id),
            "left": left_id,
            "right": right_id,
        }
        heapq.heappush(pending, (depth + 1, left_id))
        heapq.heappush(pending, (depth + 1, right_id))
        leaves += 1
    return {
        "format_version": 1,
        "n_classes": n_classes,
        "feature_names": list(FEATURE_NAMES),
        "nodes": nodes,
    }


def chain_doc(depth: int, n_classes: int = 2) -> dict:
    """Degenerate left chain of the given depth."""
    nodes = []
    for i in range(depth):
        nodes.append(
            {
                "id": i,
                "kind": "split",
                "feature": FEATURE_NAMES[i % 12],
                "threshold": str(10 * (i + 1)),
                "left": i + 1,
                "right": depth + i + 1,
            }
        )
    nodes.append({"id": depth, "kind": "leaf", "label": 0})
    for i in range(depth):
        nodes.append({"id": depth + i + 1, "kind": "leaf", "label": 1 % n_classes})
    return {
        "format_version": 1,
        "n_classes": n_classes,
        "feature_names": list(FEATURE_NAMES),
        "nodes": nodes,
    }


def leaf_doc(label: int = 0, n_classes: int = 2) -> dict:
    return {
        "format_version": 1,
        "n_classes": n_classes,
        "feature_names": list(FEATURE_NAMES),
        "nodes": [{"id": 0, "kind": "leaf", "label": label}],
    }


def depth1_doc(feature: str = "pkt_len", threshold: str = "100", left: int = 0, right: int = 1) -> dict:
    return {
        "format_version": 1,
        "n_classes": 2,
        "feature_names": list(FEATURE_NAMES),
        "nodes": [
            {"id": 0, "kind": "split", "feature": feature, "threshold": threshold, "left": 1, "right": 2},
            {"id": 1, "kind": "leaf", "label": left},
            {"id": 2, "kind": "leaf", "label": right},
        ],
    }


def random_fv_raw(rng: random.Random) -> list[int]:
    """Random feature vector as Q47.16 raws over plausible ranges."""
    fv = []
    r = rng.random
    for name in FEATURE_NAMES:
        lo, hi, _ = FEATURE_RANGES[name]
        span = (hi - lo) * SCALE
        fv.append((lo * SCALE) + int(r() * span))
    return fv


# --- frame construction (independent of the bench generator) -----------------

def ip_checksum(hdr: bytes) -> int:
    total = 0
    for i in range(0, len(hdr), 2):
        total += (hdr[i] << 8) | hdr[i + 1]
    while total >> 16:
        total = (total & 0xFFFF) + (total >> 16)
    return ~total & 0xFFFF


def ipv4_header(src_ip: int, dst_ip: int, protocol: int, total_len: int) -> bytes:
    hdr = struct.pack(">BBHHHBBHII", 0x45, 0, total_len, 1, 0, 64, protocol, 0, src_ip, dst_ip)
    return hdr[:10] + struct.pack(">H", ip_checksum(hdr)) + hdr[12:]


def udp_packet(src_ip: int, src_port: int, dst_ip: int, dst_port: int, payload: bytes) -> bytes:
    udp = struct.pack(">HHHH", src_port, dst_port, 8 + len(payload), 0) + payload
    return ipv4_header(src_ip, dst_ip, 17, 20 + len(udp)) + udp


def tcp_packet(src_ip: int, src_port: int, dst_ip: int, dst_port: int, payload: bytes) -> bytes:
    tcp = struct.pack(">HHIIBBHHH", src_port, dst_port, 1, 0, 5 << 4, 0x18, 8192, 0, 0) + payload
    return ipv4_header(src_ip, dst_ip, 6, 20 + len(tcp)) + tcp


def icmp_echo_packet(src_ip: int, dst_ip: int, payload: bytes = b"ping") -> bytes:
    icmp = struct.pack(">BBHHH", 8, 0, 0, 1, 1) + payload
    return ipv4_header(src_ip, dst_ip, 1, 20 + len(icmp)) + icmp


def eth_frame(ip_packet: bytes) -> bytes:
    return b"\x02\x00\x5e\x00\x00\x01" + b"\x02\x00\x5e\x00\x00\x02" + b"\x08\x00" + ip_packet
