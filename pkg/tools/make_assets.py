#!/usr/bin/env python3
"""Regenerate the bundled model documents and capture files in assets/.

Deterministic: run it twice and the bytes do not change. The captures
are small hand-designed traffic mixes; the models are hand-written plus
one seeded random tree at the depth limit.
"""

from __future__ import annotations

import json
import random
import struct
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from flowids.features import FEATURE_NAMES  # noqa: E402
from flowids.pcapio import write_pcap  # noqa: E402


# --- frame builders -----------------------------------------------------------

def ip_checksum(hdr: bytes) -> int:
    total = 0
    for i in range(0, len(hdr), 2):
        total += (hdr[i] << 8) | hdr[i + 1]
    while total >> 16:
        total = (total & 0xFFFF) + (total >> 16)
    return ~total & 0xFFFF


def ipv4(src: int, dst: int, proto: int, total_len: int) -> bytes:
    hdr = struct.pack(">BBHHHBBHII", 0x45, 0, total_len, 1, 0, 64, proto, 0, src, dst)
    return hdr[:10] + struct.pack(">H", ip_checksum(hdr)) + hdr[12:]


def udp(src: int, sport: int, dst: int, dport: int, payload_len: int) -> bytes:
    total = 28 + payload_len
    return ipv4(src, dst, 17, total) + struct.pack(">HHHH", sport, dport, 8 + payload_len, 0) + bytes(payload_len)


def tcp(src: int, sport: int, dst: int, dport: int, payload_len: int) -> bytes:
    total = 40 + payload_len
    seg = struct.pack(">HHIIBBHHH", sport, dport, 1, 0, 5 << 4, 0x18, 8192, 0, 0) + bytes(payload_len)
    return ipv4(src, dst, 6, total) + seg


def icmp(src: int, dst: int, payload_len: int = 8) -> bytes:
    total = 28 + payload_len
    return ipv4(src, dst, 1, total) + struct.pack(">BBHHH", 8, 0, 0, 1, 1) + bytes(payload_len)


def eth(pkt: bytes) -> bytes:
    return bytes.fromhex("02005e000001") + bytes.fromhex("02005e000002") + b"\x08\x00" + pkt


def ip(a: int, b: int, c: int, d: int) -> int:
    return (a << 24) | (b << 16) | (c << 8) | d


# --- models -------------------------------------------------------------------

def doc(nodes: list[dict], n_classes: int = 2) -> dict:
    return {
        "format_version": 1,
        "n_classes": n_classes,
        "feature_names": list(FEATURE_NAMES),
        "nodes": nodes,
    }


SINGLE_LEAF = doc([{"id": 0, "kind": "leaf", "label": 0}])

# small packets hammering low ports with bursty timing: flag as attack
PORTSCAN_D3 = doc(
    [
        {"id": 0, "kind": "split", "feature": "pkt_len", "threshold": "120.5", "left": 1, "right": 2},
        {"id": 1, "kind": "split", "feature": "dst_port", "threshold": "1024", "left": 3, "right": 4},
        {"id": 2, "kind": "split", "feature": "mean_len", "threshold": "600", "left": 5, "right": 6},
        {"id": 3, "kind": "split", "feature": "mad_iat", "threshold": "2500.75", "left": 7, "right": 8},
        {"id": 4, "kind": "leaf", "label": 0},
        {"id": 5, "kind": "leaf", "label": 0},
        {"id": 6, "kind": "leaf", "label": 0},
        {"id": 7, "kind": "leaf", "label": 1},
        {"id": 8, "kind": "leaf", "label": 0},
    ]
)

# depth-1 gate on packet length, used by the determinism checks
LENGTH_GATE_D1 = doc(
    [
        {"id": 0, "kind": "split", "feature": "pkt_len", "threshold": "150", "left": 1, "right": 2},
        {"id": 1, "kind": "leaf", "label": 0},
        {"id": 2, "kind": "leaf", "label": 1},
    ]
)


def random_limit_tree(seed: int = 7) -> dict:
    """Seeded random tree touching the depth limit (depth 10)."""
    rng = random.Random(seed)
    ranges = {
        "src_port": (0, 65535, 0),
        "dst_port": (0, 65535, 0),
        "protocol": (0, 255, 0),
        "pkt_len": (20, 1500, 0),
        "iat": (0, 1_000_000, 2),
        "direction": (0, 1, 4),
        "mean_len": (20, 1500, 3),
        "mean_iat": (0, 1_000_000, 3),
        "mean_dir": (0, 1, 5),
        "mad_len": (0, 700, 3),
        "mad_iat": (0, 500_000, 3),
        "mad_dir": (0, 1, 5),
    }
    nodes: list[dict] = []

    def build(depth: int) -> int:
        node_id = len(nodes)
        nodes.append({})
        if depth < 10 and rng.random() < (0.9 if depth < 4 else 0.45):
            name = FEATURE_NAMES[rng.randrange(12)]
            lo, hi, digits = ranges[name]
            thr = str(rng.randint(lo, hi)) if digits == 0 else f"{rng.uniform(lo, hi):.{digits}f}"
            left = build(depth + 1)
            right = build(depth + 1)
            nodes[node_id] = {
                "id": node_id, "kind": "split", "feature": name,
                "threshold": thr, "left": left, "right": right,
            }
        else:
            nodes[node_id] = {"id": node_id, "kind": "leaf", "label": rng.randrange(2)}
        return node_id

    build(0)
    return doc(nodes)


# --- captures -----------------------------------------------------------------

def two_flows() -> list[tuple[int, bytes]]:
    a, b, c = ip(10, 0, 0, 1), ip(10, 0, 0, 2), ip(10, 0, 0, 3)
    t = 1_000_000
    return [
        (t, eth(udp(a, 1234, b, 80, 72))),
        (t + 1_000, eth(udp(a, 1234, b, 80, 172))),
        (t + 2_500, eth(udp(b, 80, a, 1234, 400))),
        (t + 3_000, eth(tcp(a, 40000, c, 443, 0))),
        (t + 3_400, eth(tcp(c, 443, a, 40000, 120))),
        (t + 5_000, eth(udp(a, 1234, b, 80, 52))),
        (t + 6_000, eth(tcp(a, 40000, c, 443, 900))),
        (t + 9_000, eth(udp(b, 80, a, 1234, 60))),
    ]


def mixed_traffic(seed: int = 11) -> list[tuple[int, bytes]]:
    rng = random.Random(seed)
    frames: list[tuple[int, bytes]] = []
    t = 1_000_000
    udp_flows = [
        ((ip(192, 168, 1, 10 + i), 30000 + i), (ip(10, 0, 0, 1 + i % 4), 53 if i % 3 else 80))
        for i in range(20)
    ]
    tcp_flows = [
        ((ip(172, 16, 0, 5), 41000), (ip(10, 0, 0, 9), 443)),
        ((ip(172, 16, 0, 6), 41001), (ip(10, 0, 0, 9), 22)),
    ]
    for i in range(560):
        t += rng.randint(50, 4000)
        kind = rng.random()
        if kind < 0.75:
            (sip, sp), (dip, dp) = udp_flows[rng.randrange(len(udp_flows))]
            payload = rng.randint(0, 1200)
            if rng.random() < 0.3:
                sip, sp, dip, dp = dip, dp, sip, sp
            frames.append((t, eth(udp(sip, sp, dip, dp, payload))))
        elif kind < 0.95:
            (sip, sp), (dip, dp) = tcp_flows[rng.randrange(2)]
            payload = rng.randint(0, 1400)
            if rng.random() < 0.4:
                sip, sp, dip, dp = dip, dp, sip, sp
            frames.append((t, eth(tcp(sip, sp, dip, dp, payload))))
        else:
            frames.append((t, eth(icmp(ip(192, 168, 1, 50), ip(10, 0, 0, 2), rng.randint(8, 56)))))
    # non-IP and truncated frames: parsed as skips, never fatal
    arp = b"\xff" * 6 + bytes.fromhex("02005e000001") + b"\x08\x06" + bytes(28)
    frames.insert(100, (frames[100][0], arp))
    frames.insert(300, (frames[300][0], frames[300][1][:9]))
    return frames


def raw_ip_flow() -> list[tuple[int, bytes]]:
    a, b = ip(10, 1, 0, 1), ip(10, 1, 0, 2)
    t = 2_000_000
    out = []
    for i in range(5):
        src, sport, dst, dport = (a, 5000, b, 7000) if i % 2 == 0 else (b, 7000, a, 5000)
        out.append((t, udp(src, sport, dst, dport, 100 + 50 * i)))
        t += 700
    return out


def main() -> None:
    models = ROOT / "assets" / "models"
    captures = ROOT / "assets" / "captures"
    models.mkdir(parents=True, exist_ok=True)
    captures.mkdir(parents=True, exist_ok=True)

    for name, document in [
        ("single_leaf.json", SINGLE_LEAF),
        ("portscan_depth3.json", PORTSCAN_D3),
        ("length_gate_depth1.json", LENGTH_GATE_D1),
        ("random_depth10.json", random_limit_tree()),
    ]:
        (models / name).write_text(json.dumps(document, indent=2) + "\n")
        print(f"wrote {models / name}")

    for name, link, frames in [
        ("two_flows.pcap", "ethernet", two_flows()),
        ("mixed_traffic.pcap", "ethernet", mixed_traffic()),
        ("raw_ip_flow.pcap", "raw_ip", raw_ip_flow()),
    ]:
        count = write_pcap(captures / name, link, frames)
        print(f"wrote {captures / name} ({count} packets)")


if __name__ == "__main__":
    main()
