"""Classic pcap container reading and writing.

Handles both byte orders and the microsecond/nanosecond magic variants;
timestamps are normalized to microseconds. Only the two link types the
parser understands (ethernet, raw IPv4) are accepted.
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Iterable

from .packet import LINK_ETHERNET, LINK_RAW_IP

MAGIC_US = 0xA1B2C3D4
MAGIC_NS = 0xA1B23C4D

LINKTYPE_ETHERNET = 1
LINKTYPE_RAW_BSD = 12
LINKTYPE_RAW = 101

_LINKTYPE_NAMES = {
    LINKTYPE_ETHERNET: LINK_ETHERNET,
    LINKTYPE_RAW_BSD: LINK_RAW_IP,
    LINKTYPE_RAW: LINK_RAW_IP,
}


class PcapError(Exception):
    """Malformed or unsupported capture file."""


def read_pcap(path: str | Path) -> tuple[str, list[tuple[int, bytes]]]:
    """Load a capture; returns (link_type, [(ts_us, frame), ...])."""
    data = Path(path).read_bytes()
    if len(data) < 24:
        raise PcapError("file shorter than pcap global header")
    magic_be = struct.unpack(">I", data[:4])[0]
    magic_le = struct.unpack("<I", data[:4])[0]
    if magic_be in (MAGIC_US, MAGIC_NS):
        order, magic = ">", magic_be
    elif magic_le in (MAGIC_US, MAGIC_NS):
        order, magic = "<", magic_le
    else:
        raise PcapError(f"bad magic: {data[:4].hex()}")
    ts_div = 1000 if magic == MAGIC_NS else 1

    network = struct.unpack(order + "I", data[20:24])[0]
    link_type = _LINKTYPE_NAMES.get(network)
    if link_type is None:
        raise PcapError(f"unsupported link type {network}")

    rec = struct.Struct(order + "IIII")
    packets: list[tuple[int, bytes]] = []
    off = 24
    while off < len(data):
        if off + 16 > len(data):
            raise PcapError("truncated record header")
        ts_sec, ts_frac, incl_len, _orig_len = rec.unpack_from(data, off)
        off += 16
        if off + incl_len > len(data):
            raise PcapError("truncated record data")
        packets.append((ts_sec * 1_000_000 + ts_frac // ts_div, data[off : off + incl_len]))
        off += incl_len
    return link_type, packets


def write_pcap(path: str | Path, link_type: str, packets: Iterable[tuple[int, bytes]]) -> int:
    """Write a microsecond little-endian capture; returns packet count."""
    if link_type == LINK_ETHERNET:
        network = LINKTYPE_ETHERNET
    elif link_type == LINK_RAW_IP:
        network = LINKTYPE_RAW
    else:
        raise ValueError(f"unknown link type: {link_type!r}")

    count = 0
    with open(path, "wb") as fh:
        fh.write(struct.pack("<IHHiIII", MAGIC_US, 2, 4, 0, 0, 65535, network))
        for ts_us, frame in packets:
            fh.write(struct.pack("<IIII", ts_us // 1_000_000, ts_us % 1_000_000, len(frame), len(frame)))
            fh.write(frame)
            count += 1
    return count
