"""Raw-score-to-confidence normalization by binned quality averages.

A calibration table maps an uncertainty score to the mean generation
quality observed on calibration data in the same score bin, giving a
confidence in [0, 1] a user can read directly. Bins are quantile-based
(equal-count) so every bin is populated; the outer edges are replaced by
-inf/+inf sentinels so any future score, however extreme, lands in a bin.
Bins are half-open [min, max): a score equal to an interior edge falls in
the bin to its right.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError

DEFAULT_BINS = 10
SMALL_BIN_WARN = 10


@dataclass(frozen=True)
class CalibrationTable:
    estimator_name: str
    bin_edges: tuple[float, ...]        # B+1 edges, first -inf, last +inf
    bin_confidence: tuple[float, ...]   # per-bin mean quality
    bin_counts: tuple[int, ...]
    warnings: tuple[str, ...] = ()


def _assign(edges: np.ndarray, scores: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(edges, scores, side="right") - 1
    return np.clip(idx, 0, len(edges) - 2)


def fit_bins(ue_scores, qualities, num_bins: int = DEFAULT_BINS,
             estimator_name: str = "") -> CalibrationTable:
    """Quantile-bin the calibration scores and average quality per bin.

    Duplicate quantile edges (fewer distinct scores than bins) and empty
    bins are merged away, with a warning recorded on the table.
    """
    scores = np.asarray(ue_scores, float)
    quality = np.asarray(qualities, float)
    if scores.shape != quality.shape or scores.ndim != 1:
        raise InputError("ue_scores and qualities must be equal-length 1-D lists")
    if len(scores) < num_bins:
        raise InputError(
            f"need at least num_bins={num_bins} points, got {len(scores)}")
    if num_bins < 1:
        raise InputError("num_bins must be >= 1")
    if quality.min() < -1e-9 or quality.max() > 1 + 1e-9:
        raise InputError("qualities must lie in [0, 1]")

    warnings: list[str] = []
    edges = np.quantile(scores, np.linspace(0.0, 1.0, num_bins + 1))
    interior = np.unique(edges[1:-1])
    if len(interior) < num_bins - 1:
        warnings.append(
            f"fewer distinct scores than bins: merged down to "
            f"{len(interior) + 1} bins")
    edges = np.concatenate(([-math.inf], interior, [math.inf]))

    # drop edges next to empty bins until every bin has mass
    while True:
        idx = _assign(edges, scores)
        counts = np.bincount(idx, minlength=len(edges) - 1)
        if counts.min() > 0:
            break
        empty = int(np.argmin(counts))
        drop = empty if empty > 0 else empty + 1
        edges = np.delete(edges, drop)
        warnings.append("merged an empty bin")

    confidences = [float(quality[idx == b].mean()) for b in range(len(edges) - 1)]
    if counts.min() < SMALL_BIN_WARN:
        warnings.append(
            f"smallest bin holds {int(counts.min())} points; confidence "
            f"estimates may be unstable on small calibration sets")
    return CalibrationTable(
        estimator_name=estimator_name,
        bin_edges=tuple(float(e) for e in edges),
        bin_confidence=tuple(confidences),
        bin_counts=tuple(int(c) for c in counts),
        warnings=tuple(warnings),
    )


def normalize(table: CalibrationTable, ue: float) -> float:
    """Confidence of a raw uncertainty score: its bin's mean quality.

    Total over all float inputs thanks to the sentinel edges."""
    edges = np.asarray(table.bin_edges)
    idx = int(np.clip(np.searchsorted(edges, ue, side="right") - 1,
                      0, len(edges) - 2))
    return table.bin_confidence[idx]


def save_calibration_table(table: CalibrationTable, path: str) -> None:
    obj = {
        "estimator_name": table.estimator_name,
        "bin_edges": [("-inf" if e == -math.inf else
                       "inf" if e == math.inf else e)
                      for e in table.bin_edges],
        "bin_confidence": list(table.bin_confidence),
        "bin_counts": list(table.bin_counts),
        "warnings": list(table.warnings),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_calibration_table(path: str) -> CalibrationTable:
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    edges = tuple(
        -math.inf if e == "-inf" else math.inf if e == "inf" else float(e)
        for e in obj["bin_edges"])
    return CalibrationTable(
        estimator_name=obj["estimator_name"],
        bin_edges=edges,
        bin_confidence=tuple(float(c) for c in obj["bin_confidence"]),
        bin_counts=tuple(int(c) for c in obj["bin_counts"]),
        warnings=tuple(obj.get("warnings", [])),
    )
