#!/usr/bin/env python3
"""Regenerate the bundled 50-record toy dataset (data/toy50.jsonl).

Records are produced end-to-end through the gateway against the bundled
mock model (greedy pass, 5 samples, context-free scoring pass, self-check
pass), then enriched with what no completion API can provide: a reference
answer with a controlled overlap level (so quality spreads over [0, 1]),
three synthetic ensemble traces aligned to the greedy tokens, and an 8-D
embedding. Everything is seeded; rerunning reproduces the file byte for
byte.
"""

import math
import os
import sys
from dataclasses import replace

import httpx
import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from genuq.gateway import GenerationParams, LlmClient, ModelEndpoint
from genuq.mockserver import MockLlmApp
from genuq.records import Dataset, EnsembleTrace, save_dataset

N_RECORDS = 50
N_MEMBERS = 3
SEED = 20240601

QUESTIONS = [
    f"toy question {i}: describe item {i * 7 % 13}" for i in range(N_RECORDS)
]


def make_reference(output_text: str, keep_fraction: float,
                   rng: np.random.Generator) -> str:
    words = output_text.split()
    kept = max(0, round(keep_fraction * len(words)))
    out = []
    for j, w in enumerate(words):
        out.append(w if j < kept else f"pad{int(rng.integers(1000))}")
    return " ".join(out)


def make_traces(record, rng: np.random.Generator):
    traces = []
    for m in range(N_MEMBERS):
        steps = []
        for s in record.output_tokens:
            p = math.exp(s.logprob)
            jitter = float(rng.uniform(-0.15, 0.15))
            p_m = min(0.95, max(0.05, p + jitter))
            alt_id = next((tid for tid, _ in s.alternatives
                           if tid != s.token_id), s.token_id + 1)
            steps.append(((s.token_id, p_m), (alt_id, 1.0 - p_m)))
        traces.append(EnsembleTrace(model_id=f"member-{m}",
                                    steps=tuple(steps)))
    return tuple(traces)


def main() -> None:
    rng = np.random.default_rng(SEED)
    endpoint = ModelEndpoint(
        base_url="http://mock", model_name="toy",
        transport=httpx.WSGITransport(app=MockLlmApp()))
    client = LlmClient(endpoint, backoff=0.0)
    params = GenerationParams(max_new_tokens=8, num_samples=5, logprobs_k=6)

    records = []
    for i, question in enumerate(QUESTIONS):
        record = client.generate_record(params, question, record_id=f"toy-{i:03d}")
        record = client.unconditional_pass(record)
        p_true = client.p_true_flow(question, record.output_text)
        keep = (i % 11) / 10.0
        reference = make_reference(record.output_text, keep, rng)
        difficulty = 1.0 - keep
        embedding = rng.normal(size=8) + difficulty * np.ones(8)
        record = replace(
            record,
            reference_text=reference,
            p_true=p_true,
            ensemble_traces=make_traces(record, rng),
            embedding=tuple(float(x) for x in embedding),
        )
        records.append(record)

    out = os.path.join(os.path.dirname(__file__), "..", "data", "toy50.jsonl")
    os.makedirs(os.path.dirname(out), exist_ok=True)
    save_dataset(Dataset(records=tuple(records)), out)
    print(f"wrote {os.path.normpath(out)} ({len(records)} records)")


if __name__ == "__main__":
    main()
