"""Throughput benchmark: maximum packets/s through each backend.

An in-process generator (seeded, byte-deterministic) replaces the
network testbed: frames are synthesized once, outside the timed section,
and the measured loop runs the full path (parse, flow update, classify)
against the clock. Backends run one after another, never concurrently,
for a configured number of trials; the report gives mean and population
standard deviation of the per-trial rates.

Absolute numbers are hardware-dependent by design; the harness
reproduces the methodology and the comparison table, not any particular
figure.
"""

from __future__ import annotations

import random
import statistics
import struct
import time
from dataclasses import dataclass, field

from .features import assemble
from .flows import FlowTable
from .packet import LINK_ETHERNET, SkippedPacket, parse_packet
from .pipeline import BACKENDS, make_classifier
from .tree import TreeModel

_ETH_HDR = bytes.fromhex("02005e100001") + bytes.fromhex("02005e100002") + b"\x08\x00"
_MIN_PKT_LEN = 28  # IPv4 header + UDP header
_TIME_CHECK_STRIDE = 256


class BenchConfigError(ValueError):
    """Invalid benchmark or generator configuration."""


@dataclass
class GeneratorSpec:
    n_flows: int = 1
    pkt_len_min: int = 1500  # IP total length, bytes
    pkt_len_max: int = 1500
    reverse_fraction: float = 0.0
    start_ts_us: int = 1_000_000
    iat_us: int = 100


@dataclass
class BenchConfig:
    duration_s: float = 1.0
    trials: int = 3
    backends: tuple[str, ...] = BACKENDS
    generator: GeneratorSpec = field(default_factory=GeneratorSpec)
    seed: int = 0
    pool_size: int = 16384
    warmup_packets: int = 1024
    flow_capacity: int = 65536
    idle_timeout_us: int = 300_000_000


@dataclass
class BackendResult:
    backend: str
    duration_s: float
    trial_counts: list[int]
    trial_rates: list[float]
    mean_rate: float
    sd_rate: float


@dataclass
class BenchResult:
    results: list[BackendResult]

    def get(self, backend: str) -> BackendResult:
        for r in self.results:
            if r.backend == backend:
                return r
        raise KeyError(backend)


def _ip_checksum(hdr: bytes) -> int:
    total = 0
    for i in range(0, len(hdr), 2):
        total += (hdr[i] << 8) | hdr[i + 1]
    total = (total & 0xFFFF) + (total >> 16)
    total = (total & 0xFFFF) + (total >> 16)
    return ~total & 0xFFFF


def _udp_frame(src_ip: int, src_port: int, dst_ip: int, dst_port: int, ip_total_len: int) -> bytes:
    udp_len = ip_total_len - 20
    ip_hdr = struct.pack(
        ">BBHHHBBHII",
        0x45,
        0,
        ip_total_len,
        0,
        0,
        64,
        17,
        0,
        src_ip,
        dst_ip,
    )
    ip_hdr = ip_hdr[:10] + struct.pack(">H", _ip_checksum(ip_hdr)) + ip_hdr[12:]
    udp_hdr = struct.pack(">HHHH", src_port, dst_port, udp_len, 0)
    return _ETH_HDR + ip_hdr + udp_hdr + bytes(udp_len - 8)


def generate_stream(spec: GeneratorSpec, count: int, seed: int = 0) -> list[tuple[int, bytes]]:
    """Synthesize `count` frames; identical (spec, seed) gives identical bytes.

    Flows are visited round-robin; packet sizes draw uniformly from the
    configured range; each packet reverses direction with the configured
    probability.
    """
    if spec.n_flows < 1:
        raise BenchConfigError("generator needs at least one flow")
    if not _MIN_PKT_LEN <= spec.pkt_len_min <= spec.pkt_len_max <= 65535:
        raise BenchConfigError(
            f"packet length range [{spec.pkt_len_min}, {spec.pkt_len_max}] outside [{_MIN_PKT_LEN}, 65535]"
        )
    if not 0.0 <= spec.reverse_fraction <= 1.0:
        raise BenchConfigError("reverse_fraction must be in [0, 1]")
    if count < 0:
        raise BenchConfigError("count must be >= 0")

    rng = random.Random(seed)
    endpoints = [
        ((0x0A000000 | i, 40000 + (i % 20000)), (0x0A800000 | i, 80))
        for i in range(spec.n_flows)
    ]
    frames: list[tuple[int, bytes]] = []
    ts = spec.start_ts_us
    for k in range(count):
        (src_ip, src_port), (dst_ip, dst_port) = endpoints[k % spec.n_flows]
        if spec.reverse_fraction > 0.0 and rng.random() < spec.reverse_fraction:
            src_ip, src_port, dst_ip, dst_port = dst_ip, dst_port, src_ip, src_port
        size = (
            spec.pkt_len_min
            if spec.pkt_len_min == spec.pkt_len_max
            else rng.randint(spec.pkt_len_min, spec.pkt_len_max)
        )
        ts += spec.iat_us
        frames.append((ts, _udp_frame(src_ip, src_port, dst_ip, dst_port, size)))
    return frames


def mean_sd(values: list[float] | list[int]) -> tuple[float, float]:
    """Mean and population standard deviation of per-trial figures."""
    if not values:
        raise BenchConfigError("no trial values")
    return statistics.fmean(values), statistics.pstdev(values)


def summarize_counts(backend: str, counts: list[int], duration_s: float) -> BackendResult:
    """Build a result row from raw per-trial packet counts."""
    rates = [c / duration_s for c in counts]
    mean, sd = mean_sd(rates)
    return BackendResult(backend, duration_s, list(counts), rates, mean, sd)


def _run_pool(
    frames: list[tuple[int, bytes]],
    classify,
    table: FlowTable,
    duration_s: float,
    max_packets: int | None = None,
) -> int:
    count = 0
    idx = 0
    n = len(frames)
    deadline = time.perf_counter() + duration_s
    while True:
        for _ in range(_TIME_CHECK_STRIDE):
            ts_us, frame = frames[idx]
            idx += 1
            if idx == n:
                idx = 0
            try:
                p = parse_packet(frame, LINK_ETHERNET, ts_us)
            except SkippedPacket:
                continue
            snap, obs = table.observe(p)
            classify(assemble(p, snap, obs))
            count += 1
            if max_packets is not None and count >= max_packets:
                return count
        if time.perf_counter() >= deadline:
            return count


def run_bench(cfg: BenchConfig, model: TreeModel) -> BenchResult:
    """Measure every configured backend sequentially."""
    if cfg.duration_s <= 0:
        raise BenchConfigError("duration must be positive")
    if cfg.trials < 1:
        raise BenchConfigError("trials must be >= 1")
    if not cfg.backends:
        raise BenchConfigError("no backends selected")
    for b in cfg.backends:
        if b not in BACKENDS:
            raise BenchConfigError(f"unknown backend {b!r}; choose from {BACKENDS}")

    frames = generate_stream(cfg.generator, cfg.pool_size, cfg.seed)
    results = []
    for backend in cfg.backends:
        classify = make_classifier(model, backend)
        if cfg.warmup_packets > 0:
            # warm-up excluded from counts
            _run_pool(frames, classify, FlowTable(cfg.flow_capacity, cfg.idle_timeout_us), 10.0, cfg.warmup_packets)
        counts: list[int] = []
        rates: list[float] = []
        for _ in range(cfg.trials):
            table = FlowTable(cfg.flow_capacity, cfg.idle_timeout_us)
            t0 = time.perf_counter()
            count = _run_pool(frames, classify, table, cfg.duration_s)
            elapsed = time.perf_counter() - t0
            counts.append(count)
            rates.append(count / elapsed)
        mean, sd = mean_sd(rates)
        results.append(BackendResult(backend, cfg.duration_s, counts, rates, mean, sd))
    return BenchResult(results)


def format_table(result: BenchResult) -> str:
    """Comparison table: one column pair (mean, SD) per backend."""
    header1 = f"{'':>12}"
    header2 = f"{'':>12}"
    row = f"{'packets/s':>12}"
    for r in result.results:
        header1 += f"  {r.backend:>22}"
        header2 += f"  {'mean':>10} {'sd':>10}"
        row += f"  {round(r.mean_rate):>10} {round(r.sd_rate):>10}"
    lines = [header1, header2, row]
    if len(result.results) == 2:
        a, b = result.results
        if a.mean_rate > 0:
            delta = (b.mean_rate - a.mean_rate) / a.mean_rate * 100.0
            lines.append(f"{b.backend} vs {a.backend}: {delta:+.1f}% (informational)")
    return "\n".join(lines)
