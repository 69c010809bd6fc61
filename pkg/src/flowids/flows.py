"""Per-flow state and streaming statistics.

Each flow keeps O(1) state: a running mean and a running mean absolute
deviation for packet length, inter-arrival time, and direction. The MAD
recurrence measures deviations against the running mean,

    mean += trunc((x - mean) / n)
    mad  += trunc((|x - mean'| - mad) / n)      (mean' already updated)

evaluated entirely in Q47.16, and is the normative definition for this
project: an exact batch MAD would need the full packet history, which a
bounded per-flow table cannot hold.

The first packet of a flow contributes samples iat=0 and direction=0.
Statistics include the packet being classified.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

from .fxp import FX_ONE, Fx64, fx_abs, fx_add, fx_div_uint, fx_from_int, fx_sub
from .packet import FlowKey, ParsedPacket, canonical_key

DEFAULT_CAPACITY = 65536
DEFAULT_IDLE_TIMEOUT_US = 300_000_000  # 300 s


class PacketObservation(NamedTuple):
    """Per-packet inputs to the recurrences, already in Q47.16."""

    pkt_len: Fx64
    iat: Fx64
    direction: Fx64  # 0 = same direction as the flow initiator, FX_ONE = reverse


@dataclass(slots=True)
class FlowRecord:
    initiator_ip: int
    initiator_port: int
    pkt_count: int
    last_ts_us: int
    mean_len: Fx64
    mad_len: Fx64
    mean_iat: Fx64
    mad_iat: Fx64
    mean_dir: Fx64
    mad_dir: Fx64

    def copy(self) -> "FlowRecord":
        return FlowRecord(
            self.initiator_ip,
            self.initiator_port,
            self.pkt_count,
            self.last_ts_us,
            self.mean_len,
            self.mad_len,
            self.mean_iat,
            self.mad_iat,
            self.mean_dir,
            self.mad_dir,
        )


def _step(mean: Fx64, mad: Fx64, x: Fx64, n: int) -> tuple[Fx64, Fx64]:
    mean = fx_add(mean, fx_div_uint(fx_sub(x, mean), n))
    dev = fx_abs(fx_sub(x, mean))
    mad = fx_add(mad, fx_div_uint(fx_sub(dev, mad), n))
    return mean, mad


def update_stats(rec: FlowRecord, obs: PacketObservation) -> FlowRecord:
    """Fold one observation into the record (mutates and returns it)."""
    n = rec.pkt_count + 1
    rec.mean_len, rec.mad_len = _step(rec.mean_len, rec.mad_len, obs.pkt_len, n)
    rec.mean_iat, rec.mad_iat = _step(rec.mean_iat, rec.mad_iat, obs.iat, n)
    rec.mean_dir, rec.mad_dir = _step(rec.mean_dir, rec.mad_dir, obs.direction, n)
    rec.pkt_count = n
    return rec


class FlowTable:
    """Hash-keyed flow store, owned by exactly one worker.

    Eviction: entries idle longer than the timeout go via
    :meth:`evict_idle`; a full table force-evicts the least recently
    updated entry rather than failing an insert. The dict doubles as the
    recency order (entries are reinserted on every update).
    """

    def __init__(
        self,
        capacity: int = DEFAULT_CAPACITY,
        idle_timeout_us: int = DEFAULT_IDLE_TIMEOUT_US,
    ) -> None:
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.idle_timeout_us = idle_timeout_us
        self._entries: dict[FlowKey, FlowRecord] = {}
        self.inserts = 0
        self.idle_evictions = 0
        self.forced_evictions = 0

    @property
    def active(self) -> int:
        return len(self._entries)

    @property
    def evictions(self) -> int:
        return self.idle_evictions + self.forced_evictions

    def observe(self, p: ParsedPacket) -> tuple[FlowRecord, PacketObservation]:
        """Fold one packet into its flow; returns a snapshot and the observation.

        The snapshot reflects the statistics including this packet.
        """
        entries = self._entries
        key = canonical_key(p)
        rec = entries.get(key)
        len_fx = fx_from_int(p.pkt_len)
        if rec is None:
            if len(entries) >= self.capacity:
                oldest = next(iter(entries))
                del entries[oldest]
                self.forced_evictions += 1
            rec = FlowRecord(p.src_ip, p.src_port, 1, p.ts_us, len_fx, 0, 0, 0, 0, 0)
            entries[key] = rec
            self.inserts += 1
            obs = PacketObservation(len_fx, 0, 0)
        else:
            iat_fx = fx_from_int(p.ts_us - rec.last_ts_us)
            same_dir = p.src_ip == rec.initiator_ip and p.src_port == rec.initiator_port
            obs = PacketObservation(len_fx, iat_fx, 0 if same_dir else FX_ONE)
            update_stats(rec, obs)
            rec.last_ts_us = p.ts_us
            # refresh recency order
            del entries[key]
            entries[key] = rec
        return rec.copy(), obs

    def evict_idle(self, now_us: int) -> int:
        """Drop every flow idle for longer than the timeout."""
        timeout = self.idle_timeout_us
        dead = [k for k, r in self._entries.items() if now_us - r.last_ts_us > timeout]
        for key in dead:
            del self._entries[key]
        self.idle_evictions += len(dead)
        return len(dead)

    def get(self, key: FlowKey) -> FlowRecord | None:
        return self._entries.get(key)
