"""Ensemble-disagreement estimators over M aligned model traces.

A record may carry per-step token distributions from M model variants,
each aligned to the greedy output. Sequence-level measures compare the
members' probabilities of the whole output; token-level measures decompose
per-step disagreement into entropy terms and pairwise KL divergences.

Numerical conventions, pinned by tests:
  * every member distribution is floored at EPSILON_FLOOR and renormalized
    before any KL, so all divergences are finite;
  * the expected pairwise KL is the MEAN over ordered member pairs
    (i != j), under which epkl - mi >= mi/(M-1) >= 0 holds exactly;
  * sequence aggregation of token measures SUMS over steps (an averaged
    variant is exposed via the `average` flag).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AlignmentError, UnavailableInputError
from .records import GenerationRecord

EPSILON_FLOOR = 1e-12

TOKEN_MEASURES = ("total_entropy", "data_uncertainty", "mi", "epkl", "rmi")


@dataclass(frozen=True)
class StepDistributionSet:
    """M member distributions over one shared token support."""

    support: tuple[int, ...]
    probs: np.ndarray  # shape (M, len(support)), rows sum to 1

    def __post_init__(self):
        p = np.asarray(self.probs, float)
        if p.ndim != 2 or p.shape[1] != len(self.support):
            raise AlignmentError(
                f"probability matrix {p.shape} does not match support "
                f"of size {len(self.support)}")
        object.__setattr__(self, "probs", p)


def align_distributions(
        member_steps: list[list[tuple[int, float]]]) -> StepDistributionSet:
    """Put member distributions on the union support, floor missing and
    zero entries at EPSILON_FLOOR, and renormalize each row."""
    support: list[int] = []
    index: dict[int, int] = {}
    for dist in member_steps:
        for tid, _ in dist:
            if tid not in index:
                index[tid] = len(support)
                support.append(tid)
    m = len(member_steps)
    probs = np.full((m, len(support)), EPSILON_FLOOR)
    for i, dist in enumerate(member_steps):
        for tid, p in dist:
            probs[i, index[tid]] = max(p, EPSILON_FLOOR)
    probs /= probs.sum(axis=1, keepdims=True)
    return StepDistributionSet(support=tuple(support), probs=probs)


def _entropy(rows: np.ndarray) -> np.ndarray:
    return -np.sum(rows * np.log(rows), axis=-1)


def token_measures(step: StepDistributionSet) -> dict[str, float]:
    """All five token-level disagreement measures for one step."""
    p = step.probs
    if p.shape[0] < 2:
        raise UnavailableInputError("token_measures",
                                    "at least 2 ensemble members")
    mean = p.mean(axis=0)
    total = float(-np.sum(mean * np.log(mean)))
    data = float(_entropy(p).mean())
    mi = total - data
    log_p = np.log(p)
    # KL(i||j) = -H(i) - sum_v p_i log p_j, assembled as a full M x M matrix
    cross = p @ log_p.T
    kl = np.diag(cross)[:, None] - cross
    m = p.shape[0]
    epkl = float((kl.sum() - np.trace(kl)) / (m * (m - 1)))
    return {
        "total_entropy": total,
        "data_uncertainty": data,
        "mi": mi,
        "epkl": epkl,
        "rmi": epkl - mi,
    }


def _trace_matrix(record: GenerationRecord, estimator: str) -> list[np.ndarray]:
    """Per-member arrays of greedy-token probabilities, floored."""
    if len(record.ensemble_traces) < 2:
        raise UnavailableInputError(estimator, "at least 2 ensemble traces")
    if not record.output_tokens:
        raise UnavailableInputError(estimator, "output tokens")
    length = len(record.output_tokens)
    rows = []
    for trace in record.ensemble_traces:
        if len(trace.steps) != length:
            raise AlignmentError(
                f"trace {trace.model_id!r} has {len(trace.steps)} steps, "
                f"greedy output has {length}")
        row = np.empty(length)
        for l, step in enumerate(record.output_tokens):
            lookup = dict(trace.steps[l])
            row[l] = max(lookup.get(step.token_id, 0.0), EPSILON_FLOOR)
        rows.append(row)
    return rows


def seq_msp_ensemble(record: GenerationRecord) -> float:
    """One minus the member-average length-normalized probability of the
    greedy output."""
    rows = _trace_matrix(record, "seq_msp_ensemble")
    norm_probs = [float(np.exp(np.log(r).mean())) for r in rows]
    return 1.0 - sum(norm_probs) / len(norm_probs)


def seq_rmi(record: GenerationRecord) -> float:
    """Mean log-ratio between the member-mean sequence probability and
    each member's own sequence probability (sequence-level reverse MI)."""
    rows = _trace_matrix(record, "seq_rmi")
    log_probs = np.array([np.log(r).sum() for r in rows])
    log_mean = float(np.logaddexp.reduce(log_probs) - np.log(len(log_probs)))
    return float(log_mean - log_probs.mean())


def step_distribution_sets(record: GenerationRecord) -> list[StepDistributionSet]:
    """Aligned member distributions for every step of the greedy output."""
    if len(record.ensemble_traces) < 2:
        raise UnavailableInputError("token_measures",
                                    "at least 2 ensemble traces")
    length = len(record.output_tokens)
    for trace in record.ensemble_traces:
        if len(trace.steps) != length:
            raise AlignmentError(
                f"trace {trace.model_id!r} has {len(trace.steps)} steps, "
                f"greedy output has {length}")
    return [
        align_distributions([list(t.steps[l]) for t in record.ensemble_traces])
        for l in range(length)
    ]


def aggregate_token_measure(record: GenerationRecord, measure: str,
                            average: bool = False) -> float:
    """Sequence-level score: token measure summed (or averaged) over steps."""
    if measure not in TOKEN_MEASURES:
        raise ValueError(f"unknown token measure {measure!r}")
    steps = step_distribution_sets(record)
    if not steps:
        raise UnavailableInputError("aggregate_token_measure", "output tokens")
    values = [token_measures(s)[measure] for s in steps]
    total = sum(values)
    return total / len(values) if average else total
