"""Link-layer frame parsing and canonical flow keys.

IPv4 only; the key is fixed-size and both directions of a conversation
canonicalize to the same :class:`FlowKey` by lexicographic (ip, port)
endpoint ordering. Addresses are kept as host-order ints so ordering and
hashing stay cheap; render with :func:`format_ipv4` at output boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass

LINK_ETHERNET = "ethernet"
LINK_RAW_IP = "raw_ip"

ETHERTYPE_IPV4 = 0x0800
PROTO_ICMP = 1
PROTO_TCP = 6
PROTO_UDP = 17

SKIP_NOT_IP = "not_ip"
SKIP_TRUNCATED = "truncated"


class SkippedPacket(Exception):
    """Frame was not classifiable; carries the skip reason.

    Skips are counted by the caller and are never fatal.
    """

    def __init__(self, reason: str) -> None:
        super().__init__(reason)
        self.reason = reason


@dataclass(frozen=True, slots=True)
class ParsedPacket:
    ts_us: int
    src_ip: int
    dst_ip: int
    src_port: int
    dst_port: int
    protocol: int
    pkt_len: int  # IP total length in bytes


@dataclass(frozen=True, slots=True)
class FlowKey:
    """Bidirectional five-tuple; (ip_lo, port_lo) <= (ip_hi, port_hi)."""

    ip_lo: int
    port_lo: int
    ip_hi: int
    port_hi: int
    protocol: int


def parse_packet(frame: bytes, link_type: str, ts_us: int = 0) -> ParsedPacket:
    """Extract the IDS fields from one captured frame.

    Raises :class:`SkippedPacket` for non-IPv4 or truncated frames.
    Ports are 0 for transports without them and when the transport
    header is missing (truncation, fragments past the first).
    """
    if link_type == LINK_ETHERNET:
        if len(frame) < 14:
            raise SkippedPacket(SKIP_TRUNCATED)
        if (frame[12] << 8) | frame[13] != ETHERTYPE_IPV4:
            raise SkippedPacket(SKIP_NOT_IP)
        off = 14
    elif link_type == LINK_RAW_IP:
        off = 0
    else:
        raise ValueError(f"unknown link type: {link_type!r}")

    if len(frame) < off + 20:
        raise SkippedPacket(SKIP_TRUNCATED)
    vihl = frame[off]
    if vihl >> 4 != 4:
        raise SkippedPacket(SKIP_NOT_IP)
    ihl = (vihl & 0x0F) * 4
    if ihl < 20 or len(frame) < off + ihl:
        raise SkippedPacket(SKIP_TRUNCATED)
    total_len = (frame[off + 2] << 8) | frame[off + 3]
    if total_len < ihl:
        raise SkippedPacket(SKIP_TRUNCATED)
    protocol = frame[off + 9]
    src_ip = int.from_bytes(frame[off + 12 : off + 16], "big")
    dst_ip = int.from_bytes(frame[off + 16 : off + 20], "big")

    src_port = dst_port = 0
    if protocol in (PROTO_TCP, PROTO_UDP):
        frag_off = ((frame[off + 6] & 0x1F) << 8) | frame[off + 7]
        t = off + ihl
        if frag_off == 0 and len(frame) >= t + 4:
            src_port = (frame[t] << 8) | frame[t + 1]
            dst_port = (frame[t + 2] << 8) | frame[t + 3]

    return ParsedPacket(ts_us, src_ip, dst_ip, src_port, dst_port, protocol, total_len)


def canonical_key(p: ParsedPacket) -> FlowKey:
    """Direction-independent key: a packet and its reversed twin collide."""
    a = (p.src_ip, p.src_port)
    b = (p.dst_ip, p.dst_port)
    if a <= b:
        return FlowKey(a[0], a[1], b[0], b[1], p.protocol)
    return FlowKey(b[0], b[1], a[0], a[1], p.protocol)


def format_ipv4(ip: int) -> str:
    return f"{ip >> 24}.{(ip >> 16) & 0xFF}.{(ip >> 8) & 0xFF}.{ip & 0xFF}"


def ipv4_to_int(text: str) -> int:
    parts = text.split(".")
    if len(parts) != 4:
        raise ValueError(f"not a dotted quad: {text!r}")
    ip = 0
    for part in parts:
        octet = int(part)
        if not 0 <= octet <= 255:
            raise ValueError(f"octet out of range in {text!r}")
        ip = (ip << 8) | octet
    return ip
