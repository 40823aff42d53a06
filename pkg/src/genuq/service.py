"""HTTP service: chat with a confidence score on every answer.

POST /v1/chat drives the configured model endpoint through whatever
auxiliary passes the chosen estimator needs (sampling, context-free
scoring, the self-check flow, NLI pairwise scoring), computes the raw
uncertainty, and converts it to a confidence when a calibration table for
that estimator is loaded. GET /v1/estimators lists the registry with
taxonomy and cost tags so clients can warn about expensive methods.

Status codes: 400 unknown estimator/model (listing valid names),
422 capability gap (the endpoint or request cannot supply an input the
estimator needs), 502 upstream failure (sanitized detail). Per-request
api_key overrides the configured endpoint key and is never logged,
stored, or echoed.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import httpx
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from .calibration import CalibrationTable, normalize
from .density import DensityArtifacts, HuqConfig
from .errors import (AuthError, CapabilityError, GenUqError,
                     IndeterminateError, InputError, InsufficientSamplesError,
                     TransportError, UnavailableInputError, UsageError)
from .gateway import GenerationParams, LlmClient, ModelEndpoint, NliClient
from .info import InfoConfig
from .records import GenerationRecord
from .registry import (REQ_ALTERNATIVES, REQ_EMBEDDING, REQ_ENSEMBLE,
                       REQ_LOGPROBS, REQ_NLI, REQ_PTRUE, REQ_REFERENCE,
                       REQ_SAMPLE_LOGPROBS, REQ_SAMPLES, REQ_UNCONDITIONAL,
                       EstimatorContext, Registry, default_registry)

_NEEDS_TOKEN_LOGPROBS = {REQ_LOGPROBS, REQ_ALTERNATIVES, REQ_UNCONDITIONAL,
                         REQ_SAMPLE_LOGPROBS}


@dataclass
class ServiceConfig:
    models: dict[str, ModelEndpoint] = field(default_factory=dict)
    nli_url: str | None = None
    nli_transport: httpx.BaseTransport | None = None
    calibrations: dict[str, CalibrationTable] = field(default_factory=dict)
    density: DensityArtifacts | None = None
    huq: HuqConfig | None = None
    info_cfg: InfoConfig = field(default_factory=InfoConfig)
    registry: Registry | None = None
    frontend_dist: str | None = None
    retry_backoff: float = 0.5

    def __post_init__(self):
        if self.registry is None:
            self.registry = default_registry()


class ChatMessage(BaseModel):
    role: str
    content: str


class ChatParams(BaseModel):
    max_new_tokens: int = 64
    temperature: float = 1.0
    top_p: float = 1.0
    num_samples: int = 5
    logprobs_k: int = 20


class ChatRequest(BaseModel):
    messages: list[ChatMessage]
    model: str
    estimator: str
    params: ChatParams | None = None
    api_key: str | None = None


class ChatResponse(BaseModel):
    text: str
    estimator: str
    uncertainty_raw: float
    confidence: float | None = None
    diagnostics: dict | None = None


def _input_text(messages: list[ChatMessage]) -> str:
    if len(messages) == 1 and messages[0].role == "user":
        return messages[0].content
    return "\n".join(f"{m.role}: {m.content}" for m in messages)


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    config = config or ServiceConfig()
    registry = config.registry
    app = FastAPI(title="genuq", docs_url=None, redoc_url=None)

    @app.get("/v1/health")
    def health() -> dict:
        from .kernels import BACKEND
        return {"status": "ok", "kernel_backend": BACKEND,
                "models": sorted(config.models)}

    @app.get("/v1/estimators")
    def estimators() -> dict:
        return {"estimators": [
            {"name": e.name, "display_name": e.display_name,
             "family": e.family, "type": e.estimator_type,
             "category": e.category, "compute": e.compute_cost,
             "memory": e.memory_cost,
             "needs_training_data": e.needs_training_data,
             "requires": list(e.requires)}
            for e in registry.entries()
        ]}

    @app.post("/v1/chat", response_model=ChatResponse,
              response_model_exclude_none=True)
    def chat(request: ChatRequest) -> ChatResponse:
        try:
            return _chat_turn(config, request)
        except UsageError as exc:
            raise HTTPException(400, detail=str(exc)) from exc
        except (CapabilityError, UnavailableInputError, IndeterminateError,
                InsufficientSamplesError, InputError) as exc:
            raise HTTPException(422, detail=str(exc)) from exc
        except (AuthError, TransportError, GenUqError) as exc:
            raise HTTPException(502, detail=str(exc)) from exc

    if config.frontend_dist:
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=config.frontend_dist, html=True),
                  name="frontend")
    return app


def _chat_turn(config: ServiceConfig, request: ChatRequest) -> ChatResponse:
    registry = config.registry
    entry = registry.get(request.estimator)
    requires = set(entry.requires)

    if REQ_EMBEDDING in requires:
        raise CapabilityError(
            "hidden-state embeddings",
            "completion APIs expose no hidden states; density estimators "
            "need record files with precomputed embeddings")
    if REQ_ENSEMBLE in requires:
        raise CapabilityError(
            "ensemble traces",
            "this service drives a single model; ensemble estimators need "
            "record files with precomputed traces")
    if REQ_REFERENCE in requires:
        raise CapabilityError(
            "reference answers", "live chat has no gold reference")

    if request.model not in config.models:
        raise UsageError(
            f"unknown model {request.model!r}; configured models: "
            f"{', '.join(sorted(config.models)) or '(none)'}")
    endpoint = config.models[request.model]
    if request.api_key:
        endpoint = replace(endpoint, api_key=request.api_key)

    p = request.params or ChatParams()
    need_samples = REQ_SAMPLES in requires
    if need_samples and p.num_samples < 2:
        raise CapabilityError(
            "samples", f"{entry.name} needs num_samples >= 2 "
            f"(request asked for {p.num_samples})")
    params = GenerationParams(
        max_new_tokens=p.max_new_tokens, temperature=p.temperature,
        top_p=p.top_p, num_samples=p.num_samples if need_samples else 0,
        logprobs_k=p.logprobs_k)

    input_text = _input_text(request.messages)
    client = LlmClient(endpoint, backoff=config.retry_backoff)
    try:
        record = client.generate_record(
            params, input_text,
            require_logprobs=bool(requires & _NEEDS_TOKEN_LOGPROBS))
        if REQ_UNCONDITIONAL in requires:
            record = client.unconditional_pass(record)
        if REQ_PTRUE in requires:
            p_true = client.p_true_flow(input_text, record.output_text,
                                        logprobs_k=params.logprobs_k)
            record = replace(record, p_true=p_true)
    finally:
        client.close()

    ctx = EstimatorContext(info_cfg=config.info_cfg, density=config.density,
                           huq=config.huq)
    if REQ_NLI in requires:
        if not config.nli_url:
            raise CapabilityError(
                "NLI provider",
                "no NLI provider configured (set nli_url or POLYGRAPH_NLI_URL)")
        nli_client = NliClient(config.nli_url,
                               transport=config.nli_transport,
                               backoff=config.retry_backoff)
        try:
            ctx.nli = nli_client.nli_pairwise
            value = entry.fn(record, ctx)
        finally:
            nli_client.close()
    else:
        value = entry.fn(record, ctx)

    table = config.calibrations.get(entry.name)
    confidence = normalize(table, value) if table is not None else None
    return ChatResponse(
        text=record.output_text,
        estimator=entry.name,
        uncertainty_raw=float(value),
        confidence=confidence,
        diagnostics=_diagnostics(record),
    )


def _diagnostics(record: GenerationRecord) -> dict | None:
    if not record.samples:
        return None
    return {"samples": [
        {"text": s.text, "total_logprob": s.total_logprob}
        for s in record.samples
    ]}
