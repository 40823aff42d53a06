"""Selective-generation benchmarking: rejection curves and their ratio.

A prediction-rejection curve tracks the mean quality of retained records
as the highest-uncertainty records are rejected first, on the exact grid
a = 0, 1/N, ..., 1. Records with tied uncertainty share their block's mean
quality fractionally, which makes the curve independent of input order.
The point a = 1 (nothing retained) repeats the previous grid value and is
excluded from area integration.

The headline metric is the ratio of the area between the uncertainty
curve and the flat random baseline to the same area for the oracle that
rejects by ascending true quality. It depends on the uncertainty scores
only through their ranks; the oracle scores exactly 1 and a constant
estimator exactly 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import textmetrics
from .errors import (GenUqError, InputError, UndefinedPrrError,
                     UnavailableInputError)
from .records import Dataset, GenerationRecord

DEFAULT_BOOTSTRAP = 1000

QualityFn = Callable[[str, str], float]


@dataclass(frozen=True)
class PRCurve:
    rejection_rates: tuple[float, ...]
    mean_quality: tuple[float, ...]
    auc_vs_random: float


def rejected_quality_sequence(quality: np.ndarray,
                              uncertainty: np.ndarray) -> np.ndarray:
    """Quality charged to each rejection slot, most uncertain first; tied
    slots all carry their tie block's mean quality."""
    order = np.argsort(-uncertainty, kind="stable")
    sorted_u = uncertainty[order]
    sorted_q = quality[order].astype(float)
    start = 0
    n = len(sorted_u)
    while start < n:
        end = start
        while end < n and sorted_u[end] == sorted_u[start]:
            end += 1
        sorted_q[start:end] = sorted_q[start:end].mean()
        start = end
    return sorted_q


def pr_curve(quality, uncertainty) -> PRCurve:
    """Mean retained quality at every rejection rate; area vs. the flat
    mean-quality baseline by the trapezoid rule."""
    q = np.asarray(quality, float)
    u = np.asarray(uncertainty, float)
    if q.shape != u.shape or q.ndim != 1:
        raise InputError(f"quality/uncertainty shapes differ: {q.shape} vs {u.shape}")
    n = len(q)
    if n < 2:
        raise InputError(f"need at least 2 records, got {n}")
    rejected = rejected_quality_sequence(q, u)
    total = q.sum()
    retained_sums = total - np.concatenate(([0.0], np.cumsum(rejected)[:-1]))
    retained_counts = n - np.arange(n)
    means = retained_sums / retained_counts  # j = 0 .. n-1 rejections
    rates = np.arange(n + 1) / n
    curve = np.concatenate((means, [means[-1]]))
    baseline = total / n
    area = float(np.trapezoid(means - baseline, rates[:n]))
    return PRCurve(rejection_rates=tuple(float(a) for a in rates),
                   mean_quality=tuple(float(v) for v in curve),
                   auc_vs_random=area)


def prr(quality, uncertainty) -> float:
    """Area ratio between the estimator's rejection curve and the oracle's."""
    q = np.asarray(quality, float)
    if len(q) and np.all(q == q[0]):
        raise UndefinedPrrError("all quality values are equal; oracle area is 0")
    unc_area = pr_curve(q, uncertainty).auc_vs_random
    oracle_area = pr_curve(q, -q).auc_vs_random
    if oracle_area <= 0:
        raise UndefinedPrrError("oracle rejection area is not positive")
    return unc_area / oracle_area + 0.0  # normalizes -0.0


def quality_scores(dataset: Dataset, metric: str,
                   external_scorer: QualityFn | None = None) -> list[float]:
    """Per-record quality of the greedy output against the reference."""
    if metric == "external":
        if external_scorer is None:
            raise UnavailableInputError("quality:external", "a scorer endpoint")
        fn = external_scorer
    else:
        try:
            fn = textmetrics.QUALITY_METRICS[metric]
        except KeyError:
            raise InputError(f"unknown quality metric {metric!r}") from None
    out = []
    for record in dataset:
        if record.reference_text is None:
            raise InputError(f"record {record.id!r} has no reference_text")
        out.append(float(fn(record.output_text, record.reference_text)))
    return out


# ---------------------------------------------------------------------------
# Report assembly


@dataclass(frozen=True)
class CellResult:
    """One (estimator, quality metric) benchmark cell."""

    prr_mean: float | None
    prr_stderr: float | None
    n_used: int
    note: str = ""

    @property
    def available(self) -> bool:
        return self.prr_mean is not None


@dataclass(frozen=True)
class BenchmarkReport:
    estimator_names: tuple[str, ...]
    metric_names: tuple[str, ...]
    cells: dict[tuple[str, str], CellResult]
    record_errors: tuple[str, ...]
    metadata: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        rows = []
        for name in self.estimator_names:
            row: dict = {"estimator": name, "cells": {}}
            for metric in self.metric_names:
                cell = self.cells[(name, metric)]
                row["cells"][metric] = {
                    "prr": cell.prr_mean,
                    "stderr": cell.prr_stderr,
                    "n_used": cell.n_used,
                    "note": cell.note,
                }
            rows.append(row)
        return {"metadata": dict(sorted(self.metadata.items())),
                "metrics": list(self.metric_names),
                "rows": rows,
                "record_errors": list(self.record_errors)}

    def render_text(self) -> str:
        """Aligned table with one row per estimator, `mean±stderr` cells."""
        headers = ["estimator"] + list(self.metric_names)
        lines = [headers]
        for name in self.estimator_names:
            row = [name]
            for metric in self.metric_names:
                cell = self.cells[(name, metric)]
                if cell.available:
                    row.append(f"{cell.prr_mean:.4f}±{cell.prr_stderr:.4f}")
                else:
                    row.append(f"unavailable ({cell.note})")
            lines.append(row)
        widths = [max(len(r[i]) for r in lines) for i in range(len(headers))]
        rendered = []
        for r in lines:
            rendered.append("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
        meta = [f"# {k}: {v}" for k, v in sorted(self.metadata.items())]
        errs = [f"# record error: {e}" for e in self.record_errors]
        return "\n".join(meta + rendered + errs) + "\n"


def _bootstrap_stderr(q: np.ndarray, u: np.ndarray, n_resamples: int,
                      rng: np.random.Generator) -> float:
    values = []
    n = len(q)
    for _ in range(n_resamples):
        idx = rng.integers(0, n, size=n)
        qs = q[idx]
        if np.all(qs == qs[0]):
            continue
        values.append(prr(qs, u[idx]))
    if len(values) < 2:
        return 0.0
    return float(np.std(values, ddof=1))


def run_benchmark(dataset: Dataset,
                  estimators: list[tuple[str, Callable[[GenerationRecord], float]]],
                  metrics: list[str],
                  seed: int = 0,
                  bootstrap_samples: int = DEFAULT_BOOTSTRAP,
                  ignore_exceptions: bool = True,
                  external_scorer: QualityFn | None = None) -> BenchmarkReport:
    """Evaluate every estimator against every quality metric.

    Records an estimator cannot score (missing inputs) are skipped and
    counted; a cell with no usable records is marked unavailable rather
    than failing the run. With ignore_exceptions=False the first failure
    aborts, naming the record.
    """
    records = list(dataset)
    qualities: dict[str, list[float | None]] = {}
    record_errors: list[str] = []
    for metric in metrics:
        per_metric: list[float | None] = []
        for record in records:
            try:
                sub = Dataset(records=(record,))
                per_metric.append(quality_scores(sub, metric, external_scorer)[0])
            except GenUqError as exc:
                if not ignore_exceptions:
                    raise
                record_errors.append(f"{record.id}: quality[{metric}]: {exc}")
                per_metric.append(None)
        qualities[metric] = per_metric

    scores: dict[str, list[float | None]] = {}
    for name, fn in estimators:
        per_est: list[float | None] = []
        for record in records:
            try:
                per_est.append(float(fn(record)))
            except GenUqError as exc:
                if not ignore_exceptions:
                    raise GenUqError(f"record {record.id!r}: {exc}") from exc
                per_est.append(None)
        scores[name] = per_est

    cells: dict[tuple[str, str], CellResult] = {}
    for ei, (name, _) in enumerate(estimators):
        for mi, metric in enumerate(metrics):
            pairs = [(q, s) for q, s in zip(qualities[metric], scores[name])
                     if q is not None and s is not None]
            skipped = len(records) - len(pairs)
            note = f"skipped {skipped} records" if skipped else ""
            if len(pairs) < 2:
                cells[(name, metric)] = CellResult(
                    None, None, len(pairs), note="no usable records")
                continue
            q = np.array([p[0] for p in pairs])
            s = np.array([p[1] for p in pairs])
            try:
                mean = prr(q, s)
            except UndefinedPrrError as exc:
                cells[(name, metric)] = CellResult(
                    None, None, len(pairs), note=str(exc))
                continue
            rng = np.random.default_rng([seed, ei, mi])
            stderr = _bootstrap_stderr(q, s, bootstrap_samples, rng)
            cells[(name, metric)] = CellResult(mean, stderr, len(pairs), note)

    return BenchmarkReport(
        estimator_names=tuple(name for name, _ in estimators),
        metric_names=tuple(metrics),
        cells=cells,
        record_errors=tuple(record_errors),
        metadata={"seed": str(seed), "n_records": str(len(records)),
                  "bootstrap_samples": str(bootstrap_samples)},
    )
