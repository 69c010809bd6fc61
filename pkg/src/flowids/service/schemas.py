"""Request/response models for the HTTP service."""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field


class ModelLoadRequest(BaseModel):
    """Load a model from an inline document or a server-local path."""

    document: dict | None = None
    path: str | None = None
    max_depth: int = 10
    max_leaves: int = 1000


class ModelInfo(BaseModel):
    model_config = ConfigDict(protected_namespaces=())

    model_id: str
    depth: int
    n_leaves: int
    n_classes: int
    n_nodes: int
    feature_names: list[str]


class EvalRequest(BaseModel):
    """One feature vector, canonical order; decimal strings stay exact."""

    features: list[str | float | int] = Field(min_length=12, max_length=12)


class EvalResponse(BaseModel):
    label: int
    reference_label: int
    margin_raw: int | None
    near_threshold: bool
    diverged: bool


class CompileRequest(BaseModel):
    unroll: bool = False


class CompileResponse(BaseModel):
    source: str
    n_nodes: int
    loop_bound: int
    passed: bool


class CheckRequest(BaseModel):
    source: str


class ViolationInfo(BaseModel):
    rule: str
    location: str
    detail: str


class CheckResponse(BaseModel):
    passed: bool
    violations: list[ViolationInfo]


class ReplayRequest(BaseModel):
    model_config = ConfigDict(protected_namespaces=())

    model_id: str
    capture_path: str
    backend: str = "interpreter"
    max_verdicts: int = 0  # cap on verdict lines echoed back


class RunSummaryInfo(BaseModel):
    packets_seen: int
    packets_skipped: int
    flows_created: int
    flows_evicted: int
    label_counts: dict[str, int]
    elapsed_us: int


class ReplayResponse(BaseModel):
    summary: RunSummaryInfo
    verdict_count: int
    verdicts: list[str]


class BenchRequest(BaseModel):
    model_config = ConfigDict(protected_namespaces=())

    model_id: str
    backends: list[str] = ["interpreter", "flattened"]
    trials: int = 3
    duration_s: float = 0.2
    seed: int = 0
    n_flows: int = 1
    pkt_len_min: int = 1500
    pkt_len_max: int = 1500
    reverse_fraction: float = 0.0


class BenchBackendInfo(BaseModel):
    backend: str
    mean_pkts_s: float
    sd_pkts_s: float
    trial_counts: list[int]


class BenchResponse(BaseModel):
    results: list[BenchBackendInfo]


class QuantizeRequest(BaseModel):
    document: dict


class QuantizeResponse(BaseModel):
    document: dict
    max_error: float
