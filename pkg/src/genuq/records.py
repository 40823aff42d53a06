"""Generation-record data model, validation, and line-delimited JSON I/O.

One record captures everything the estimators can consume about a single
prompt/answer exchange: the greedy output with per-token log-probabilities
and top-k alternatives, K sampled outputs, optional aligned ensemble
traces, an optional hidden-state embedding, an optional reference answer,
and an optional self-check probability.

File format: UTF-8 JSON Lines, one record object per line. Field names:

    id, input_text, output_text,
    output_tokens[{token_id, token_text, logprob,
                   alternatives[[token_id, logprob]],
                   unconditional_logprob?}],
    samples[{text, tokens?, total_logprob, length}],
    ensemble_traces[{model_id, steps[[[token_id, probability]]]}],
    embedding?[real], reference_text?, p_true?

Unknown keys are ignored on read and never preserved. All log
probabilities are natural logs. Loaded objects are immutable; `metadata`
on a Dataset is runtime-only bookkeeping and is not persisted.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

from .errors import ParseError, RecordValidationError

ALT_MASS_TOL = 1e-6
SUM_TOL = 1e-6


@dataclass(frozen=True)
class TokenStep:
    """One generated token with its step distribution slice."""

    token_id: int
    token_text: str
    logprob: float
    alternatives: tuple[tuple[int, float], ...] = ()
    unconditional_logprob: float | None = None


@dataclass(frozen=True)
class SampledOutput:
    """One temperature-sampled completion."""

    text: str
    total_logprob: float
    length: int
    tokens: tuple[TokenStep, ...] = ()

    @property
    def probability(self) -> float:
        return math.exp(self.total_logprob)


@dataclass(frozen=True)
class EnsembleTrace:
    """Per-step categorical distributions of one ensemble member, aligned
    to the record's greedy output tokens. Probabilities are renormalized
    to sum to one at ingestion."""

    model_id: str
    steps: tuple[tuple[tuple[int, float], ...], ...]


@dataclass(frozen=True)
class GenerationRecord:
    id: str
    input_text: str
    output_text: str
    output_tokens: tuple[TokenStep, ...] = ()
    samples: tuple[SampledOutput, ...] = ()
    ensemble_traces: tuple[EnsembleTrace, ...] = ()
    embedding: tuple[float, ...] | None = None
    reference_text: str | None = None
    p_true: float | None = None


@dataclass(frozen=True)
class Dataset:
    records: tuple[GenerationRecord, ...]
    metadata: dict[str, str] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)


@dataclass(frozen=True)
class Violation:
    """One invariant violation found by validate_record."""

    record_id: str
    field: str
    message: str


def normalize_step_distribution(
    pairs: list[tuple[int, float]],
) -> tuple[tuple[int, float], ...]:
    """Renormalize an ensemble step distribution so it sums to one.

    Raises ValueError on non-positive total mass or negative entries;
    callers translate that into a parse/validation failure.
    """
    total = 0.0
    for _, p in pairs:
        if p < 0:
            raise ValueError(f"negative probability {p}")
        total += p
    if total <= 0:
        raise ValueError("step distribution has zero total mass")
    return tuple((tid, p / total) for tid, p in pairs)


def _step_violations(rid: str, prefix: str, step: TokenStep) -> list[Violation]:
    out = []
    if step.logprob > 0:
        out.append(Violation(rid, f"{prefix}logprob",
                             f"logprob {step.logprob} > 0"))
    if step.unconditional_logprob is not None and step.unconditional_logprob > 0:
        out.append(Violation(rid, f"{prefix}unconditional_logprob",
                             f"logprob {step.unconditional_logprob} > 0"))
    alts = step.alternatives
    if alts:
        mass = 0.0
        prev = math.inf
        ids = set()
        for tid, lp in alts:
            if lp > 0:
                out.append(Violation(rid, f"{prefix}alternatives",
                                     f"alternative logprob {lp} > 0"))
            if lp > prev:
                out.append(Violation(rid, f"{prefix}alternatives order",
                                     "alternatives not sorted by logprob"))
            prev = lp
            mass += math.exp(min(lp, 0.0))
            ids.add(tid)
        if mass > 1.0 + ALT_MASS_TOL:
            out.append(Violation(rid, f"{prefix}alternatives mass",
                                 f"alternative probabilities sum to {mass:.6g}"))
        if step.token_id not in ids:
            out.append(Violation(rid, f"{prefix}alternatives membership",
                                 "chosen token missing from alternatives"))
    return out


def validate_record(record: GenerationRecord) -> list[Violation]:
    """Check every type invariant; violations are data, not exceptions."""
    rid = record.id
    out: list[Violation] = []
    if not rid:
        out.append(Violation(rid, "id", "empty record id"))

    for i, step in enumerate(record.output_tokens):
        out.extend(_step_violations(rid, f"output_tokens[{i}].", step))

    for k, sample in enumerate(record.samples):
        prefix = f"samples[{k}]."
        if sample.length < 1:
            out.append(Violation(rid, prefix + "length",
                                 f"length {sample.length} < 1"))
        if sample.total_logprob > 0:
            out.append(Violation(rid, prefix + "total_logprob",
                                 f"logprob {sample.total_logprob} > 0"))
        if sample.tokens:
            for i, step in enumerate(sample.tokens):
                out.extend(_step_violations(rid, f"{prefix}tokens[{i}].", step))
            total = sum(s.logprob for s in sample.tokens)
            if abs(total - sample.total_logprob) > SUM_TOL:
                out.append(Violation(
                    rid, prefix + "total_logprob",
                    f"total {sample.total_logprob} != step sum {total:.6g}"))
            if sample.length != len(sample.tokens):
                out.append(Violation(
                    rid, prefix + "length",
                    f"length {sample.length} != token count {len(sample.tokens)}"))

    step_counts = {len(t.steps) for t in record.ensemble_traces}
    if len(step_counts) > 1 or (
            step_counts and record.output_tokens
            and step_counts != {len(record.output_tokens)}):
        out.append(Violation(rid, "ensemble alignment",
                             f"trace step counts {sorted(step_counts)} do not "
                             f"match greedy length {len(record.output_tokens)}"))
    for t in record.ensemble_traces:
        for j, dist in enumerate(t.steps):
            total = sum(p for _, p in dist)
            if any(p < 0 or p > 1 for _, p in dist) or abs(total - 1.0) > SUM_TOL:
                out.append(Violation(
                    rid, "ensemble step mass",
                    f"trace {t.model_id!r} step {j} sums to {total:.6g}"))
                break

    if record.p_true is not None and not 0.0 <= record.p_true <= 1.0:
        out.append(Violation(rid, "p_true",
                             f"p_true {record.p_true} outside [0, 1]"))
    return out


def _parse_step(obj: dict) -> TokenStep:
    alts = tuple((int(t), float(lp)) for t, lp in obj.get("alternatives", []))
    uncond = obj.get("unconditional_logprob")
    return TokenStep(
        token_id=int(obj["token_id"]),
        token_text=str(obj["token_text"]),
        logprob=float(obj["logprob"]),
        alternatives=alts,
        unconditional_logprob=None if uncond is None else float(uncond),
    )


def record_from_dict(obj: dict) -> GenerationRecord:
    """Build a record from a decoded JSON object, ignoring unknown keys."""
    tokens = tuple(_parse_step(t) for t in obj.get("output_tokens", []))
    samples = []
    for s in obj.get("samples", []):
        stoks = tuple(_parse_step(t) for t in s.get("tokens", []) or [])
        samples.append(SampledOutput(
            text=str(s["text"]),
            total_logprob=float(s["total_logprob"]),
            length=int(s["length"]),
            tokens=stoks,
        ))
    traces = []
    for t in obj.get("ensemble_traces", []):
        steps = tuple(
            normalize_step_distribution(
                [(int(tid), float(p)) for tid, p in dist])
            for dist in t["steps"]
        )
        traces.append(EnsembleTrace(model_id=str(t["model_id"]), steps=steps))
    emb = obj.get("embedding")
    p_true = obj.get("p_true")
    return GenerationRecord(
        id=str(obj["id"]),
        input_text=str(obj["input_text"]),
        output_text=str(obj["output_text"]),
        output_tokens=tokens,
        samples=tuple(samples),
        ensemble_traces=tuple(traces),
        embedding=None if emb is None else tuple(float(x) for x in emb),
        reference_text=(None if obj.get("reference_text") is None
                        else str(obj["reference_text"])),
        p_true=None if p_true is None else float(p_true),
    )


def record_to_dict(record: GenerationRecord) -> dict:
    """Inverse of record_from_dict; absent optionals are omitted."""

    def step(s: TokenStep) -> dict:
        d = {"token_id": s.token_id, "token_text": s.token_text,
             "logprob": s.logprob,
             "alternatives": [[t, lp] for t, lp in s.alternatives]}
        if s.unconditional_logprob is not None:
            d["unconditional_logprob"] = s.unconditional_logprob
        return d

    obj: dict = {
        "id": record.id,
        "input_text": record.input_text,
        "output_text": record.output_text,
        "output_tokens": [step(t) for t in record.output_tokens],
        "samples": [],
        "ensemble_traces": [
            {"model_id": t.model_id,
             "steps": [[[tid, p] for tid, p in dist] for dist in t.steps]}
            for t in record.ensemble_traces
        ],
    }
    for s in record.samples:
        d = {"text": s.text, "total_logprob": s.total_logprob,
             "length": s.length}
        if s.tokens:
            d["tokens"] = [step(t) for t in s.tokens]
        obj["samples"].append(d)
    if record.embedding is not None:
        obj["embedding"] = list(record.embedding)
    if record.reference_text is not None:
        obj["reference_text"] = record.reference_text
    if record.p_true is not None:
        obj["p_true"] = record.p_true
    return obj


def load_dataset(path: str | os.PathLike) -> Dataset:
    """Load a JSONL record file; see module docstring for the format.

    Raises ParseError (naming the line) for undecodable lines and
    RecordValidationError (naming record id and field) for invariant
    violations, so a loaded dataset always validates cleanly.
    """
    records: list[GenerationRecord] = []
    seen: set[str] = set()
    path = os.fspath(path)
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                record = record_from_dict(obj)
            except (ValueError, KeyError, TypeError) as exc:
                raise ParseError(path, line_no, str(exc)) from exc
            violations = validate_record(record)
            if violations:
                v = violations[0]
                raise RecordValidationError(v.record_id, v.field, v.message)
            if record.id in seen:
                raise RecordValidationError(record.id, "id", "duplicate id")
            seen.add(record.id)
            records.append(record)
    return Dataset(records=tuple(records))


def save_dataset(dataset: Dataset, path: str | os.PathLike) -> None:
    """Write records as JSON Lines; load_dataset of the result reproduces
    every record field exactly."""
    with open(os.fspath(path), "w", encoding="utf-8") as fh:
        for record in dataset.records:
            fh.write(json.dumps(record_to_dict(record), ensure_ascii=False))
            fh.write("\n")
