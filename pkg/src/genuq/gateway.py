"""Network clients that turn live models into generation records.

Covers four remote interactions, all speaking JSON over HTTP:

  * an OpenAI-compatible chat-completions client producing the greedy
    answer with per-token logprobs/top-k alternatives plus K sampled
    answers (each sample is its own request carrying `seed` = sample
    index, so repeated turns are reproducible against deterministic
    backends);
  * the two-pass self-check flow: the model is asked whether its own
    answer is true, and the probability mass on the affirmative option
    token is read from the top logprobs;
  * forced-continuation scoring of the answer tokens under an empty
    context (legacy completions endpoint with echo=true, max_tokens=0),
    which fills the per-step unconditional logprobs;
  * an NLI provider scoring ordered text pairs:
    request {"pairs": [[premise, hypothesis], ...]} ->
    response {"scores": [{"entail": e, "contra": c, "neutral": n}, ...]}.

The greedy pass is always requested with temperature 0 (the API
equivalent of disabled sampling); the configured temperature/top_p apply
to the sampling passes. APIs do not expose vocabulary ids, so token ids
are derived as crc32(token text) & 0x7fffffff; when a provider omits the
chosen token from its top logprobs it is merged in so records validate.

Transport policy: up to 3 attempts with exponential backoff on connect
errors and 5xx; 4xx never retries (401/403 map to AuthError; a
Retry-After header is surfaced on the raised error). At most
`max_parallel` requests are in flight per endpoint. API keys never appear
in logs, reprs, or raised errors.
"""

from __future__ import annotations

import concurrent.futures
import math
import time
import zlib
from dataclasses import dataclass, field, replace
from threading import BoundedSemaphore

import httpx
import numpy as np

from .errors import (AuthError, CapabilityError, IndeterminateError,
                     InputError, RecordValidationError, TransportError)
from .meaning import PairwiseScores
from .records import (GenerationRecord, SampledOutput, TokenStep,
                      validate_record)

P_TRUE_TEMPLATE = (
    "Question: {question}\n"
    "Proposed answer: {answer}\n"
    "Is the proposed answer true? Answer True or False:"
)

#: Token spellings aggregated as the affirmative/negative options of the
#: self-check flow (matched after stripping whitespace, case-insensitive).
AFFIRMATIVE_TOKENS = frozenset({"true"})
NEGATIVE_TOKENS = frozenset({"false"})

MAX_ATTEMPTS = 3
BACKOFF_BASE = 0.5


def token_id_for(text: str) -> int:
    return zlib.crc32(text.encode("utf-8")) & 0x7FFFFFFF


@dataclass
class ModelEndpoint:
    base_url: str
    api_key: str = ""
    model_name: str = "default"
    timeout: float = 30.0
    max_parallel: int = 4
    transport: httpx.BaseTransport | None = None  # test injection

    def __repr__(self) -> str:  # the key must never leak through logs
        return (f"ModelEndpoint(base_url={self.base_url!r}, api_key=<redacted>, "
                f"model_name={self.model_name!r})")


@dataclass(frozen=True)
class GenerationParams:
    max_new_tokens: int = 64
    temperature: float = 1.0
    top_p: float = 1.0
    num_samples: int = 5
    logprobs_k: int = 20

    def __post_init__(self):
        if self.temperature < 0 or not 0 < self.top_p <= 1:
            raise InputError("temperature must be >= 0 and top_p in (0, 1]")
        if self.num_samples < 0 or self.logprobs_k < 1:
            raise InputError("num_samples must be >= 0 and logprobs_k >= 1")


class _HttpBase:
    def __init__(self, base_url: str, api_key: str, timeout: float,
                 max_parallel: int, transport: httpx.BaseTransport | None,
                 backoff: float = BACKOFF_BASE):
        headers = {}
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        self._client = httpx.Client(base_url=base_url, headers=headers,
                                    timeout=timeout, transport=transport)
        self._limiter = BoundedSemaphore(max(1, max_parallel))
        self._backoff = backoff

    def close(self) -> None:
        self._client.close()

    def _post(self, path: str, payload: dict) -> dict:
        last: Exception | None = None
        for attempt in range(MAX_ATTEMPTS):
            try:
                with self._limiter:
                    resp = self._client.post(path, json=payload)
            except httpx.HTTPError as exc:
                last = TransportError(f"transport failure: {type(exc).__name__}")
                if attempt + 1 < MAX_ATTEMPTS:
                    time.sleep(self._backoff * 2 ** attempt)
                continue
            if resp.status_code in (401, 403):
                raise AuthError("authentication with the endpoint failed",
                                status=resp.status_code)
            if 400 <= resp.status_code < 500:
                retry_after = resp.headers.get("Retry-After")
                raise TransportError(
                    f"endpoint rejected the request (HTTP {resp.status_code})",
                    status=resp.status_code,
                    retry_after=float(retry_after) if retry_after else None)
            if resp.status_code >= 500:
                last = TransportError(
                    f"endpoint failure (HTTP {resp.status_code})",
                    status=resp.status_code)
                if attempt + 1 < MAX_ATTEMPTS:
                    time.sleep(self._backoff * 2 ** attempt)
                continue
            return resp.json()
        assert last is not None
        raise last


class LlmClient(_HttpBase):
    """OpenAI-compatible completion client for one model endpoint."""

    def __init__(self, endpoint: ModelEndpoint, backoff: float = BACKOFF_BASE):
        super().__init__(endpoint.base_url, endpoint.api_key, endpoint.timeout,
                         endpoint.max_parallel, endpoint.transport, backoff)
        self.endpoint = endpoint

    # -- wire parsing -------------------------------------------------

    @staticmethod
    def _steps_from_logprobs(content: list[dict]) -> tuple[TokenStep, ...]:
        steps = []
        for item in content:
            text = item["token"]
            lp = float(item["logprob"])
            alts = [(token_id_for(alt["token"]), float(alt["logprob"]))
                    for alt in item.get("top_logprobs", [])]
            chosen = token_id_for(text)
            if alts and chosen not in {t for t, _ in alts}:
                alts.append((chosen, lp))
            alts.sort(key=lambda pair: -pair[1])
            steps.append(TokenStep(token_id=chosen, token_text=text,
                                   logprob=lp, alternatives=tuple(alts)))
        return tuple(steps)

    def _chat(self, input_text: str, params: GenerationParams, *,
              temperature: float, seed: int, max_tokens: int | None = None,
              want_logprobs: bool = True) -> dict:
        payload = {
            "model": self.endpoint.model_name,
            "messages": [{"role": "user", "content": input_text}],
            "temperature": temperature,
            "top_p": params.top_p,
            "max_tokens": params.max_new_tokens if max_tokens is None else max_tokens,
            "seed": seed,
        }
        if want_logprobs:
            payload["logprobs"] = True
            payload["top_logprobs"] = params.logprobs_k
        data = self._post("/v1/chat/completions", payload)
        try:
            return data["choices"][0]
        except (KeyError, IndexError) as exc:
            raise TransportError(f"malformed completion response: {exc}") from exc

    # -- operations ---------------------------------------------------

    def generate_record(self, params: GenerationParams, input_text: str,
                        record_id: str = "live",
                        require_logprobs: bool = True) -> GenerationRecord:
        """Greedy answer plus K sampled answers, mapped into a validated
        record. With require_logprobs=False a logprob-less endpoint still
        yields a usable record for black-box estimators (token lists stay
        empty and sample logprobs degrade to 0)."""
        choice = self._chat(input_text, params, temperature=0.0, seed=0)
        text = choice["message"]["content"]
        logprobs = (choice.get("logprobs") or {}).get("content")
        if logprobs is None and require_logprobs:
            raise CapabilityError("logprobs",
                                  "response carried no token logprobs")
        tokens = self._steps_from_logprobs(logprobs) if logprobs else ()

        samples: list[SampledOutput] = []
        if params.num_samples > 0:
            def fetch(k: int) -> SampledOutput:
                ch = self._chat(input_text, params,
                                temperature=params.temperature, seed=k + 1)
                s_text = ch["message"]["content"]
                s_lp = (ch.get("logprobs") or {}).get("content")
                if s_lp:
                    steps = self._steps_from_logprobs(s_lp)
                    return SampledOutput(
                        text=s_text,
                        total_logprob=sum(s.logprob for s in steps),
                        length=len(steps), tokens=steps)
                return SampledOutput(text=s_text, total_logprob=0.0,
                                     length=max(1, len(s_text.split())))

            workers = min(params.num_samples, self.endpoint.max_parallel)
            with concurrent.futures.ThreadPoolExecutor(workers) as pool:
                samples = list(pool.map(fetch, range(params.num_samples)))

        record = GenerationRecord(
            id=record_id, input_text=input_text, output_text=text,
            output_tokens=tokens, samples=tuple(samples))
        violations = validate_record(record)
        if violations:
            v = violations[0]
            raise RecordValidationError(v.record_id, v.field, v.message)
        return record

    def p_true_flow(self, input_text: str, answer_text: str,
                    logprobs_k: int = 20) -> float:
        """Ask the model whether its answer is true; return the normalized
        probability mass on the affirmative option token."""
        prompt = P_TRUE_TEMPLATE.format(question=input_text, answer=answer_text)
        params = GenerationParams(max_new_tokens=1, num_samples=0,
                                  logprobs_k=logprobs_k)
        choice = self._chat(prompt, params, temperature=0.0, seed=0, max_tokens=1)
        content = (choice.get("logprobs") or {}).get("content")
        if not content:
            raise CapabilityError("logprobs", "self-check needs top logprobs")
        mass_true = mass_false = 0.0
        for alt in content[0].get("top_logprobs", []):
            spelled = alt["token"].strip().lower()
            if spelled in AFFIRMATIVE_TOKENS:
                mass_true += math.exp(float(alt["logprob"]))
            elif spelled in NEGATIVE_TOKENS:
                mass_false += math.exp(float(alt["logprob"]))
        if mass_true + mass_false == 0:
            raise IndeterminateError(
                "neither option token appeared in the top logprobs")
        return mass_true / (mass_true + mass_false)

    def unconditional_pass(self, record: GenerationRecord) -> GenerationRecord:
        """Score the record's output tokens with no input context and fill
        unconditional_logprob on every step. The record is returned as a
        new object; on any failure the original is untouched."""
        if not record.output_tokens:
            raise InputError("record has no output tokens to score")
        payload = {
            "model": self.endpoint.model_name,
            "prompt": record.output_text,
            "max_tokens": 0,
            "echo": True,
            "logprobs": 1,
        }
        data = self._post("/v1/completions", payload)
        try:
            lp = data["choices"][0]["logprobs"]
            wire_tokens = lp["tokens"]
            wire_logprobs = lp["token_logprobs"]
        except (KeyError, IndexError, TypeError) as exc:
            raise CapabilityError(
                "forced continuation scoring",
                "endpoint cannot echo prompt logprobs") from exc
        ours = [s.token_text for s in record.output_tokens]
        if wire_tokens != ours:
            raise CapabilityError(
                "forced continuation scoring",
                f"token alignment mismatch ({len(wire_tokens)} vs {len(ours)})")
        if any(v is None for v in wire_logprobs):
            raise CapabilityError("forced continuation scoring",
                                  "endpoint returned null logprobs")
        new_steps = tuple(
            replace(step, unconditional_logprob=float(v))
            for step, v in zip(record.output_tokens, wire_logprobs))
        return replace(record, output_tokens=new_steps)


class NliClient(_HttpBase):
    """Client for the pairwise NLI scoring contract."""

    def __init__(self, url: str, api_key: str = "", timeout: float = 30.0,
                 max_parallel: int = 4, batch_size: int = 64,
                 transport: httpx.BaseTransport | None = None,
                 backoff: float = BACKOFF_BASE):
        super().__init__(url, api_key, timeout, max_parallel, transport, backoff)
        self._url = url
        self.batch_size = batch_size

    def nli_pairwise(self, texts: list[str]) -> PairwiseScores:
        """Entailment/contradiction matrices over all ordered pairs, with
        the conventional diagonal (entail 1, contra 0). Either every batch
        succeeds or the whole call fails."""
        k = len(texts)
        if k < 2:
            raise InputError(f"need at least 2 texts, got {k}")
        pairs = [(i, j) for i in range(k) for j in range(k) if i != j]
        entail = np.eye(k)
        contra = np.zeros((k, k))
        for start in range(0, len(pairs), self.batch_size):
            batch = pairs[start:start + self.batch_size]
            payload = {"pairs": [[texts[i], texts[j]] for i, j in batch]}
            data = self._post(self._url, payload)
            scores = data.get("scores")
            if not isinstance(scores, list) or len(scores) != len(batch):
                raise TransportError(
                    "NLI provider returned a mismatched score batch")
            for (i, j), s in zip(batch, scores):
                e, c = float(s["entail"]), float(s["contra"])
                if not (0 <= e <= 1 and 0 <= c <= 1) or e + c > 1 + 1e-6:
                    raise InputError(
                        f"invalid NLI scores for pair ({i}, {j}): "
                        f"entail={e}, contra={c}")
                entail[i, j] = e
                contra[i, j] = c
        return PairwiseScores(entail=entail, contra=contra)


class QualityScorerClient(_HttpBase):
    """Hook for an external quality metric service.

    Contract: POST {"pairs": [[candidate, reference], ...]} ->
    {"scores": [real, ...]}. No native implementation ships; this is the
    integration point for embedding-based metrics.
    """

    def __init__(self, url: str, api_key: str = "", timeout: float = 30.0,
                 transport: httpx.BaseTransport | None = None):
        super().__init__(url, api_key, timeout, 1, transport)
        self._url = url

    def score(self, candidate: str, reference: str) -> float:
        data = self._post(self._url, {"pairs": [[candidate, reference]]})
        return float(data["scores"][0])
