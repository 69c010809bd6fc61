"""HTTP service wrapping the core library.

Models load once and stay resident; clients (UI, trainers, scripts)
evaluate, compile, check, replay, and bench against them. Replay reads
server-local capture paths; live capture stays CLI-only (raw sockets
do not belong behind an HTTP handler).
"""

from __future__ import annotations

import hashlib
import json
import threading

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..bench import BenchConfig, BenchConfigError, GeneratorSpec, run_bench
from ..codegen import EmitConfig, check_constraints, emit_restricted_source, flatten
from ..fxp import FxParseError, fx_from_decimal
from ..pipeline import BACKENDS, PipelineError, run_replay
from ..tree import (
    ModelError,
    TreeModel,
    eval_float,
    eval_with_margin,
    load_document,
    model_summary,
    quantize_document,
)
from .schemas import (
    BenchBackendInfo,
    BenchRequest,
    BenchResponse,
    CheckRequest,
    CheckResponse,
    CompileRequest,
    CompileResponse,
    EvalRequest,
    EvalResponse,
    ModelInfo,
    ModelLoadRequest,
    QuantizeRequest,
    QuantizeResponse,
    ReplayRequest,
    ReplayResponse,
    RunSummaryInfo,
    ViolationInfo,
)

# quantization can move a threshold by at most 2**-16; inputs within
# 2**-15 (2 raw units) of a path threshold may legitimately diverge
NEAR_THRESHOLD_RAW = 2


class _Registry:
    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._models: dict[str, TreeModel] = {}

    def add(self, doc: dict, max_depth: int, max_leaves: int) -> tuple[str, TreeModel]:
        model = load_document(doc, max_depth=max_depth, max_leaves=max_leaves)
        model_id = hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()[:12]
        with self._lock:
            self._models[model_id] = model
        return model_id, model

    def get(self, model_id: str) -> TreeModel:
        with self._lock:
            model = self._models.get(model_id)
        if model is None:
            raise HTTPException(status_code=404, detail=f"unknown model_id {model_id!r}")
        return model

    def ids(self) -> list[str]:
        with self._lock:
            return sorted(self._models)


def _info(model_id: str, model: TreeModel) -> ModelInfo:
    info = model_summary(model)
    return ModelInfo(
        model_id=model_id,
        depth=info["depth"],
        n_leaves=info["n_leaves"],
        n_classes=info["n_classes"],
        n_nodes=info["n_nodes"],
        feature_names=list(model.feature_names),
    )


def create_app() -> FastAPI:
    app = FastAPI(title="flowids", version=__version__)
    registry = _Registry()

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok", "version": __version__, "models": registry.ids()}

    @app.post("/models", response_model=ModelInfo)
    def load(req: ModelLoadRequest) -> ModelInfo:
        if (req.document is None) == (req.path is None):
            raise HTTPException(status_code=400, detail="provide exactly one of document, path")
        doc = req.document
        if doc is None:
            try:
                doc = json.loads(open(req.path).read())
            except (OSError, json.JSONDecodeError) as exc:
                raise HTTPException(status_code=400, detail=f"cannot load {req.path!r}: {exc}")
        try:
            model_id, model = registry.add(doc, req.max_depth, req.max_leaves)
        except ModelError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return _info(model_id, model)

    @app.get("/models/{model_id}", response_model=ModelInfo)
    def info(model_id: str) -> ModelInfo:
        return _info(model_id, registry.get(model_id))

    @app.post("/models/{model_id}/eval", response_model=EvalResponse)
    def eval_fv(model_id: str, req: EvalRequest) -> EvalResponse:
        model = registry.get(model_id)
        raw: list[int] = []
        floats: list[float] = []
        for value in req.features:
            text = value if isinstance(value, str) else repr(value)
            try:
                raw.append(fx_from_decimal(text))
            except FxParseError as exc:
                raise HTTPException(status_code=422, detail=str(exc))
            floats.append(float(value))
        label, margin = eval_with_margin(model, raw)
        ref = eval_float(model, floats)
        near = margin is not None and margin <= NEAR_THRESHOLD_RAW
        return EvalResponse(
            label=label,
            reference_label=ref,
            margin_raw=margin,
            near_threshold=near,
            diverged=label != ref,
        )

    @app.post("/models/{model_id}/compile", response_model=CompileResponse)
    def compile_model(model_id: str, req: CompileRequest) -> CompileResponse:
        prog = flatten(registry.get(model_id))
        source = emit_restricted_source(prog, EmitConfig(unroll=req.unroll))
        report = check_constraints(source)
        return CompileResponse(source=source, n_nodes=prog.n_nodes, loop_bound=prog.loop_bound, passed=report.passed)

    @app.post("/check", response_model=CheckResponse)
    def check(req: CheckRequest) -> CheckResponse:
        report = check_constraints(req.source)
        return CheckResponse(
            passed=report.passed,
            violations=[ViolationInfo(rule=v.rule, location=v.location, detail=v.detail) for v in report.violations],
        )

    @app.post("/quantize", response_model=QuantizeResponse)
    def quantize(req: QuantizeRequest) -> QuantizeResponse:
        try:
            text, max_err = quantize_document(json.dumps(req.document))
        except ModelError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return QuantizeResponse(document=json.loads(text), max_error=max_err)

    @app.post("/replay", response_model=ReplayResponse)
    def replay(req: ReplayRequest) -> ReplayResponse:
        model = registry.get(req.model_id)
        try:
            verdicts, summary = run_replay(req.capture_path, model, req.backend)
        except PipelineError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return ReplayResponse(
            summary=RunSummaryInfo(
                packets_seen=summary.packets_seen,
                packets_skipped=summary.packets_skipped,
                flows_created=summary.flows_created,
                flows_evicted=summary.flows_evicted,
                label_counts={str(k): v for k, v in sorted(summary.label_counts.items())},
                elapsed_us=summary.elapsed_us,
            ),
            verdict_count=len(verdicts),
            verdicts=[v.line() for v in verdicts[: req.max_verdicts]],
        )

    @app.post("/bench", response_model=BenchResponse)
    def bench(req: BenchRequest) -> BenchResponse:
        model = registry.get(req.model_id)
        cfg = BenchConfig(
            duration_s=req.duration_s,
            trials=req.trials,
            backends=tuple(req.backends),
            generator=GeneratorSpec(
                n_flows=req.n_flows,
                pkt_len_min=req.pkt_len_min,
                pkt_len_max=req.pkt_len_max,
                reverse_fraction=req.reverse_fraction,
            ),
            seed=req.seed,
        )
        try:
            result = run_bench(cfg, model)
        except BenchConfigError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return BenchResponse(
            results=[
                BenchBackendInfo(
                    backend=r.backend,
                    mean_pkts_s=r.mean_rate,
                    sd_pkts_s=r.sd_rate,
                    trial_counts=r.trial_counts,
                )
                for r in result.results
            ]
        )

    _ = (healthz, load, info, eval_fv, compile_model, check, quantize, replay, bench)
    return app
