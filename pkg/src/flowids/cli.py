"""Command-line entry point.

Subcommands run the core library in-process (live capture needs the raw
socket here, and the benchmark's timed section must not cross a
transport); `serve` hosts the same operations as an HTTP service.

Exit codes: 0 success, 1 operational error, 2 usage error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import bench as bench_mod
from .codegen import EmitConfig, check_constraints, emit_restricted_source, flatten
from .pcapio import PcapError
from .pipeline import BACKENDS, PipelineError, run_live, run_replay
from .tree import (
    DEFAULT_MAX_DEPTH,
    DEFAULT_MAX_LEAVES,
    ModelError,
    load_model,
    model_summary,
    quantize_document,
)

log = logging.getLogger("flowids")


class CliError(Exception):
    """Operational failure surfaced to the user with exit code 1."""


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise CliError(f"cannot read {path!r}: {exc}") from exc


def _load_model_file(path: str, max_depth: int, max_leaves: int):
    try:
        return load_model(_read_text(path), max_depth=max_depth, max_leaves=max_leaves)
    except ModelError as exc:
        raise CliError(f"invalid model {path!r}: {exc}") from exc


def _write_verdicts(verdicts, output: str) -> None:
    lines = "".join(v.line() + "\n" for v in verdicts)
    if output == "-":
        sys.stdout.write(lines)
    else:
        Path(output).write_text(lines)


def _add_model_arg(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", required=True, help="model-exchange document (JSON)")
    p.add_argument("--max-depth", type=int, default=DEFAULT_MAX_DEPTH)
    p.add_argument("--max-leaves", type=int, default=DEFAULT_MAX_LEAVES)


def _add_table_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--flow-capacity", type=int, default=65536)
    p.add_argument("--idle-timeout", type=float, default=300.0, help="flow idle timeout, seconds")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="flowids", description=__doc__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("replay", help="classify every packet of a capture file")
    _add_model_arg(p)
    p.add_argument("--pcap", required=True)
    p.add_argument("--backend", choices=BACKENDS, default="interpreter")
    p.add_argument("--output", default="-", help="verdict file, or - for stdout")
    p.add_argument("--workers", type=int, default=1)
    _add_table_args(p)

    p = sub.add_parser("live", help="classify live traffic from a raw socket")
    _add_model_arg(p)
    p.add_argument("--iface", required=True)
    p.add_argument("--backend", choices=BACKENDS, default="interpreter")
    p.add_argument("--duration", type=float, default=10.0, help="seconds")
    p.add_argument("--output", default="-")
    _add_table_args(p)

    p = sub.add_parser("bench", help="measure packets/s per backend")
    _add_model_arg(p)
    p.add_argument("--backends", default="interpreter,flattened", help="comma-separated")
    p.add_argument("--trials", type=int, default=3)
    p.add_argument("--duration", type=float, default=1.0, help="seconds per trial")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--flows", type=int, default=1)
    p.add_argument("--pkt-len", default="1500", help="IP total length: N or MIN:MAX")
    p.add_argument("--reverse-frac", type=float, default=0.0)
    p.add_argument("--pool", type=int, default=16384, help="pre-generated frame pool size")
    p.add_argument("--paper", action="store_true", help="10 trials x 10 s")
    _add_table_args(p)

    p = sub.add_parser("compile", help="emit the restricted program for a model")
    _add_model_arg(p)
    p.add_argument("--out", required=True)
    p.add_argument("--unroll", action="store_true", help="emit an if/else chain instead of the counted loop")

    p = sub.add_parser("check", help="run the static constraint checker on a program")
    p.add_argument("file")

    p = sub.add_parser("quantize", help="rewrite model thresholds onto the Q47.16 grid")
    _add_model_arg(p)
    p.add_argument("--out", required=True)

    p = sub.add_parser("model-info", help="print model structure summary")
    _add_model_arg(p)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)

    return parser


def _cmd_replay(args) -> int:
    model = _load_model_file(args.model, args.max_depth, args.max_leaves)
    verdicts, summary = run_replay(
        args.pcap,
        model,
        args.backend,
        flow_capacity=args.flow_capacity,
        idle_timeout_us=int(args.idle_timeout * 1_000_000),
        workers=args.workers,
    )
    _write_verdicts(verdicts, args.output)
    sys.stderr.write(summary.block())
    return 0


def _cmd_live(args) -> int:
    model = _load_model_file(args.model, args.max_depth, args.max_leaves)
    sink = sys.stdout if args.output == "-" else open(args.output, "w")
    try:
        _, summary = run_live(
            args.iface,
            model,
            args.backend,
            args.duration,
            flow_capacity=args.flow_capacity,
            idle_timeout_us=int(args.idle_timeout * 1_000_000),
            on_verdict=lambda v: sink.write(v.line() + "\n"),
        )
    finally:
        if sink is not sys.stdout:
            sink.close()
    sys.stderr.write(summary.block())
    return 0


def _cmd_bench(args) -> int:
    model = _load_model_file(args.model, args.max_depth, args.max_leaves)
    if ":" in args.pkt_len:
        lo, hi = args.pkt_len.split(":", 1)
        pkt_min, pkt_max = int(lo), int(hi)
    else:
        pkt_min = pkt_max = int(args.pkt_len)
    trials, duration = args.trials, args.duration
    if args.paper:
        trials, duration = 10, 10.0
    cfg = bench_mod.BenchConfig(
        duration_s=duration,
        trials=trials,
        backends=tuple(b.strip() for b in args.backends.split(",") if b.strip()),
        generator=bench_mod.GeneratorSpec(
            n_flows=args.flows,
            pkt_len_min=pkt_min,
            pkt_len_max=pkt_max,
            reverse_fraction=args.reverse_frac,
        ),
        seed=args.seed,
        pool_size=args.pool,
        flow_capacity=args.flow_capacity,
        idle_timeout_us=int(args.idle_timeout * 1_000_000),
    )
    result = bench_mod.run_bench(cfg, model)
    print(bench_mod.format_table(result))
    return 0


def _cmd_compile(args) -> int:
    model = _load_model_file(args.model, args.max_depth, args.max_leaves)
    cfg = EmitConfig(max_depth=args.max_depth, max_leaves=args.max_leaves, unroll=args.unroll)
    source = emit_restricted_source(flatten(model), cfg)
    report = check_constraints(source)
    if not report.passed:
        raise CliError(f"emitted program failed self-check:\n{report.describe()}")
    Path(args.out).write_text(source)
    print(f"wrote {args.out}: {len(source.splitlines())} lines, constraints ok")
    return 0


def _cmd_check(args) -> int:
    report = check_constraints(_read_text(args.file))
    if report.passed:
        print("ok: all constraints satisfied")
        return 0
    sys.stderr.write(report.describe() + "\n")
    return 1


def _cmd_quantize(args) -> int:
    text, max_err = quantize_document(_read_text(args.model), max_depth=args.max_depth, max_leaves=args.max_leaves)
    Path(args.out).write_text(text)
    print(f"wrote {args.out}; max threshold quantization error {max_err:.3e}")
    return 0


def _cmd_model_info(args) -> int:
    model = _load_model_file(args.model, args.max_depth, args.max_leaves)
    info = model_summary(model)
    print(f"nodes:    {info['n_nodes']}")
    print(f"depth:    {info['depth']}")
    print(f"leaves:   {info['n_leaves']}")
    print(f"classes:  {info['n_classes']}")
    usage = ", ".join(f"{k}({v})" for k, v in sorted(info["feature_usage"].items())) or "-"
    print(f"features: {usage}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service.app import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port, log_level="info")
    return 0


_COMMANDS = {
    "replay": _cmd_replay,
    "live": _cmd_live,
    "bench": _cmd_bench,
    "compile": _cmd_compile,
    "check": _cmd_check,
    "quantize": _cmd_quantize,
    "model-info": _cmd_model_info,
    "serve": _cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return _COMMANDS[args.command](args)
    except (CliError, ModelError, PipelineError, PcapError, bench_mod.BenchConfigError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except OSError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
