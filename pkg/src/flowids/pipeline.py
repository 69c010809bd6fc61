"""End-to-end packet pipeline: ingest, flow update, classify, verdict.

Two classification backends share the identical flow/feature path and
must agree bit for bit: ``interpreter`` walks the loaded tree,
``flattened`` walks the array program the compile backend produces.

Verdicts are report-only; nothing is dropped or reset. Replay mode uses
capture timestamps so a run is a pure function of (file, model,
backend); live mode stamps frames from the monotonic clock.
"""

from __future__ import annotations

import queue
import socket
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable

from .codegen import flatten, walk
from .features import assemble
from .flows import FlowTable
from .packet import (
    LINK_ETHERNET,
    ParsedPacket,
    SkippedPacket,
    canonical_key,
    format_ipv4,
    parse_packet,
)
from .pcapio import PcapError, read_pcap
from .tree import TreeModel, eval_tree

BACKENDS = ("interpreter", "flattened")

# idle-flow sweep cadence, in packets; packet-count based so replay
# output is a pure function of the capture
SWEEP_INTERVAL = 8192


class PipelineError(Exception):
    """Startup or configuration failure (not per-packet trouble)."""


@dataclass(slots=True)
class VerdictRecord:
    pkt_index: int
    ts_us: int
    protocol: int
    src_ip: int
    src_port: int
    dst_ip: int
    dst_port: int
    label: int
    pkt_count: int

    def line(self) -> str:
        return (
            f"{self.pkt_index} {self.ts_us} {self.protocol} "
            f"{format_ipv4(self.src_ip)}:{self.src_port}>"
            f"{format_ipv4(self.dst_ip)}:{self.dst_port} "
            f"{self.label} {self.pkt_count}"
        )


@dataclass
class RunSummary:
    packets_seen: int = 0
    packets_skipped: int = 0
    flows_created: int = 0
    flows_evicted: int = 0
    label_counts: dict[int, int] = field(default_factory=dict)
    elapsed_us: int = 0

    def block(self) -> str:
        labels = " ".join(f"{k}:{v}" for k, v in sorted(self.label_counts.items())) or "-"
        return (
            "--- run summary ---\n"
            f"packets_seen:    {self.packets_seen}\n"
            f"packets_skipped: {self.packets_skipped}\n"
            f"flows_created:   {self.flows_created}\n"
            f"flows_evicted:   {self.flows_evicted}\n"
            f"verdicts_by_label: {labels}\n"
            f"elapsed_us:      {self.elapsed_us}\n"
        )


def make_classifier(model: TreeModel, backend: str) -> Callable[[list[int]], int]:
    if backend == "interpreter":
        return lambda fv: eval_tree(model, fv)
    if backend == "flattened":
        prog = flatten(model)
        return lambda fv: walk(prog, fv)
    raise PipelineError(f"unknown backend {backend!r}; choose from {BACKENDS}")


class _Engine:
    """Single-worker state: one flow table plus verdict bookkeeping."""

    def __init__(self, model: TreeModel, backend: str, flow_capacity: int, idle_timeout_us: int) -> None:
        self.table = FlowTable(flow_capacity, idle_timeout_us)
        self.classify = make_classifier(model, backend)
        self.label_counts: dict[int, int] = {}
        self._since_sweep = 0

    def process(self, idx: int, p: ParsedPacket) -> VerdictRecord:
        snap, obs = self.table.observe(p)
        label = self.classify(assemble(p, snap, obs))
        self.label_counts[label] = self.label_counts.get(label, 0) + 1
        self._since_sweep += 1
        if self._since_sweep >= SWEEP_INTERVAL:
            self._since_sweep = 0
            self.table.evict_idle(p.ts_us)
        return VerdictRecord(
            idx, p.ts_us, p.protocol, p.src_ip, p.src_port, p.dst_ip, p.dst_port, label, snap.pkt_count
        )


def _finish_summary(summary: RunSummary, engines: Iterable[_Engine], started_ns: int) -> RunSummary:
    for eng in engines:
        summary.flows_created += eng.table.inserts
        summary.flows_evicted += eng.table.evictions
        for label, count in eng.label_counts.items():
            summary.label_counts[label] = summary.label_counts.get(label, 0) + count
    summary.elapsed_us = (time.perf_counter_ns() - started_ns) // 1000
    return summary


def run_replay(
    capture_path: str,
    model: TreeModel,
    backend: str = "interpreter",
    *,
    flow_capacity: int = 65536,
    idle_timeout_us: int = 300_000_000,
    workers: int = 1,
) -> tuple[list[VerdictRecord], RunSummary]:
    """Classify every parseable packet of a capture, in capture order.

    With one worker the run is fully deterministic. With several, packets
    shard by flow key so per-flow verdict order still holds; the merged
    stream is ordered by packet index.
    """
    if workers < 1:
        raise PipelineError("workers must be >= 1")
    try:
        link_type, packets = read_pcap(capture_path)
    except (OSError, PcapError) as exc:
        raise PipelineError(f"cannot read capture {capture_path!r}: {exc}") from exc

    started = time.perf_counter_ns()
    summary = RunSummary()

    if workers == 1:
        eng = _Engine(model, backend, flow_capacity, idle_timeout_us)
        verdicts = []
        for idx, (ts_us, frame) in enumerate(packets):
            summary.packets_seen += 1
            try:
                p = parse_packet(frame, link_type, ts_us)
            except SkippedPacket:
                summary.packets_skipped += 1
                continue
            verdicts.append(eng.process(idx, p))
        return verdicts, _finish_summary(summary, [eng], started)

    engines = [_Engine(model, backend, flow_capacity, idle_timeout_us) for _ in range(workers)]
    queues: list[queue.Queue] = [queue.Queue(maxsize=1024) for _ in range(workers)]
    results: list[list[VerdictRecord]] = [[] for _ in range(workers)]

    def drain(w: int) -> None:
        q, eng, out = queues[w], engines[w], results[w]
        while True:
            item = q.get()
            if item is None:
                return
            out.append(eng.process(*item))

    threads = [threading.Thread(target=drain, args=(w,), daemon=True) for w in range(workers)]
    for t in threads:
        t.start()
    for idx, (ts_us, frame) in enumerate(packets):
        summary.packets_seen += 1
        try:
            p = parse_packet(frame, link_type, ts_us)
        except SkippedPacket:
            summary.packets_skipped += 1
            continue
        queues[hash(canonical_key(p)) % workers].put((idx, p))
    for q in queues:
        q.put(None)
    for t in threads:
        t.join()

    verdicts = sorted((v for out in results for v in out), key=lambda v: v.pkt_index)
    return verdicts, _finish_summary(summary, engines, started)


def run_live(
    interface: str,
    model: TreeModel,
    backend: str = "interpreter",
    duration_s: float = 10.0,
    *,
    flow_capacity: int = 65536,
    idle_timeout_us: int = 300_000_000,
    on_verdict: Callable[[VerdictRecord], None] | None = None,
) -> tuple[list[VerdictRecord], RunSummary]:
    """Classify frames from a raw socket until the duration elapses.

    Timestamps come from the monotonic clock. Requires CAP_NET_RAW.
    """
    try:
        socket.if_nametoindex(interface)
    except OSError as exc:
        raise PipelineError(f"interface {interface!r} not found: {exc}") from exc

    started = time.perf_counter_ns()
    summary = RunSummary()
    eng = _Engine(model, backend, flow_capacity, idle_timeout_us)
    verdicts: list[VerdictRecord] = []
    if duration_s <= 0:
        return verdicts, _finish_summary(summary, [eng], started)

    try:
        sock = socket.socket(socket.AF_PACKET, socket.SOCK_RAW, socket.htons(0x0003))
    except PermissionError as exc:
        raise PipelineError(
            f"cannot open raw socket on {interface!r}: {exc} (live mode needs CAP_NET_RAW; try root)"
        ) from exc
    try:
        sock.bind((interface, 0))
        sock.settimeout(0.2)
        deadline = time.monotonic() + duration_s
        idx = 0
        while time.monotonic() < deadline:
            try:
                frame = sock.recv(65535)
            except TimeoutError:
                continue
            except KeyboardInterrupt:
                break
            ts_us = time.monotonic_ns() // 1000
            summary.packets_seen += 1
            try:
                p = parse_packet(frame, LINK_ETHERNET, ts_us)
            except SkippedPacket:
                summary.packets_skipped += 1
                idx += 1
                continue
            v = eng.process(idx, p)
            idx += 1
            verdicts.append(v)
            if on_verdict is not None:
                on_verdict(v)
    finally:
        sock.close()
    return verdicts, _finish_summary(summary, [eng], started)
