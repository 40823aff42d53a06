"""Meaning-diversity estimators over pairwise response similarity.

All estimators here consume K sampled responses to one prompt. Lexical
kernels (jaccard/rouge/bleu) are computed in-process; entailment and
contradiction probabilities come precomputed from an NLI provider (the
gateway fetches them, nothing in this module performs IO).

Graph measures use the symmetric normalized Laplacian
L = I - D^{-1/2} S D^{-1/2} of the symmetrized similarity matrix, whose
eigenvalues lie in [0, 2] for any valid S.

Semantic entropy follows the cluster-mean form: the probability mass of a
cluster is the MEAN of its member sequence probabilities (not the sum used
elsewhere in the semantic-entropy literature; the mean form is what this
engine standardizes on, and tests pin it).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import textmetrics
from .errors import (DegenerateSimilarityError, InsufficientSamplesError,
                     UnavailableInputError)
from .records import GenerationRecord, SampledOutput

LEXICAL_KERNELS = ("jaccard", "rouge1", "rougeL", "bleu")
NLI_KERNELS = ("nli_entail", "nli_contra")
EIG_ZERO_TOL = 1e-10
DEFAULT_ECC_THRESHOLD = 0.9


@dataclass(frozen=True)
class PairwiseScores:
    """Directional NLI probabilities for every ordered response pair."""

    entail: np.ndarray
    contra: np.ndarray

    def __post_init__(self):
        e, c = np.asarray(self.entail, float), np.asarray(self.contra, float)
        if e.shape != c.shape or e.ndim != 2 or e.shape[0] != e.shape[1]:
            raise ValueError("entail/contra must be square matrices of equal size")
        object.__setattr__(self, "entail", e)
        object.__setattr__(self, "contra", c)

    @property
    def size(self) -> int:
        return self.entail.shape[0]


@dataclass(frozen=True)
class SimilarityMatrix:
    """Symmetric K x K response-similarity scores in [0, 1]."""

    s: np.ndarray
    kernel: str

    def __post_init__(self):
        object.__setattr__(self, "s", np.asarray(self.s, float))

    @property
    def size(self) -> int:
        return self.s.shape[0]


@dataclass(frozen=True)
class ClusterAssignment:
    labels: tuple[int, ...]
    cluster_count: int


def _texts(samples) -> list[str]:
    return [s.text if isinstance(s, SampledOutput) else str(s) for s in samples]


def build_similarity_matrix(samples, kernel: str,
                            pairwise: PairwiseScores | None = None
                            ) -> SimilarityMatrix:
    """Pairwise similarity, symmetrized as (s(i,j) + s(j,i)) / 2.

    Lexical kernels get an exact unit diagonal (a response is maximally
    similar to itself even when the metric's empty-text convention says
    otherwise); NLI kernels keep the provided diagonal.
    """
    texts = _texts(samples)
    k = len(texts) if pairwise is None else pairwise.size
    if k < 2:
        raise InsufficientSamplesError(f"need at least 2 samples, got {k}")
    if kernel in NLI_KERNELS:
        if pairwise is None:
            raise UnavailableInputError(kernel, "pairwise NLI scores")
        raw = (pairwise.entail if kernel == "nli_entail"
               else 1.0 - pairwise.contra)
        s = (raw + raw.T) / 2.0
    elif kernel in LEXICAL_KERNELS:
        fn = textmetrics.SIMILARITY_KERNELS[kernel]
        toks = [textmetrics.tokenize(t) for t in texts]
        s = np.ones((k, k))
        for i in range(k):
            for j in range(i + 1, k):
                s[i, j] = s[j, i] = (fn(toks[i], toks[j]) + fn(toks[j], toks[i])) / 2.0
    else:
        raise ValueError(f"unknown similarity kernel {kernel!r}")
    return SimilarityMatrix(s=s, kernel=kernel)


def cluster_bidirectional_entailment(samples,
                                     pairwise: PairwiseScores
                                     ) -> ClusterAssignment:
    """Greedy left-to-right clustering by mutual entailment.

    A response joins the first existing cluster whose earliest member it
    mutually entails (entailment beats contradiction in both directions);
    otherwise it opens a new cluster. Raw directional probabilities are
    used, no symmetrization.
    """
    k = pairwise.size
    entail, contra = pairwise.entail, pairwise.contra
    reps: list[int] = []
    labels: list[int] = []
    for j in range(k):
        assigned = None
        for m, r in enumerate(reps):
            if entail[r, j] > contra[r, j] and entail[j, r] > contra[j, r]:
                assigned = m
                break
        if assigned is None:
            reps.append(j)
            assigned = len(reps) - 1
        labels.append(assigned)
    return ClusterAssignment(labels=tuple(labels), cluster_count=len(reps))


def num_semantic_sets(samples, pairwise: PairwiseScores) -> int:
    """Number of meaning-equivalence clusters among the samples."""
    return cluster_bidirectional_entailment(samples, pairwise).cluster_count


def semantic_entropy(record: GenerationRecord,
                     assignment: ClusterAssignment) -> float:
    """Entropy over per-cluster mean sequence probabilities."""
    if not record.samples:
        raise UnavailableInputError("semantic_entropy", "sampled outputs")
    if len(assignment.labels) != len(record.samples):
        raise ValueError("assignment does not cover all samples")
    probs = [s.probability for s in record.samples]
    out = 0.0
    for m in range(assignment.cluster_count):
        members = [p for p, lab in zip(probs, assignment.labels) if lab == m]
        p_hat = sum(members) / len(members)
        if p_hat > 0:
            out -= p_hat * np.log(p_hat)
    return float(out)


def _laplacian(matrix: SimilarityMatrix) -> np.ndarray:
    s = matrix.s
    row_sums = s.sum(axis=1)
    if np.any(row_sums <= 0):
        raise DegenerateSimilarityError(
            f"zero row sum at index {int(np.argmin(row_sums))}")
    inv_sqrt = 1.0 / np.sqrt(row_sums)
    return np.eye(s.shape[0]) - s * np.outer(inv_sqrt, inv_sqrt)


def laplacian_eigensystem(matrix: SimilarityMatrix
                          ) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues (clamped to [0, 2]) and eigenvectors of the
    symmetric normalized Laplacian."""
    vals, vecs = np.linalg.eigh(_laplacian(matrix))
    vals = np.where(np.abs(vals) < EIG_ZERO_TOL, 0.0, vals)
    return np.clip(vals, 0.0, 2.0), vecs


def eigv_laplacian(matrix: SimilarityMatrix) -> float:
    """Sum of max(0, 1 - lambda) over the Laplacian spectrum — the
    continuous analogue of the semantic-set count."""
    vals, _ = laplacian_eigensystem(matrix)
    return float(np.sum(np.maximum(0.0, 1.0 - vals)))


def degmat_uncertainty(matrix: SimilarityMatrix) -> float:
    """One minus the normalized trace of the degree matrix."""
    k = matrix.size
    return float(1.0 - matrix.s.sum() / (k * k))


def eccentricity(matrix: SimilarityMatrix,
                 eig_threshold: float = DEFAULT_ECC_THRESHOLD
                 ) -> tuple[float, list[float]]:
    """Spread of responses in the low-frequency Laplacian embedding.

    Each response j is embedded as the j-th coordinates of the kept
    eigenvectors (eigenvalues below eig_threshold, at least one kept).
    Returns the norm of all centered embeddings stacked together, plus the
    per-response centered norms (a response's own eccentricity).
    """
    vals, vecs = laplacian_eigensystem(matrix)
    kept = vals < eig_threshold
    if not np.any(kept):
        kept = np.zeros_like(kept)
        kept[int(np.argmin(vals))] = True
    emb = vecs[:, kept]
    centered = emb - emb.mean(axis=0, keepdims=True)
    per_response = np.linalg.norm(centered, axis=1)
    return float(np.linalg.norm(centered)), [float(x) for x in per_response]


def lexical_similarity(samples, kernel: str = "rougeL") -> float:
    """Negated mean pairwise lexical similarity of the samples (negated so
    higher means more uncertain, like every other estimator)."""
    if kernel not in ("rouge1", "rougeL", "bleu"):
        raise ValueError(f"unsupported lexical kernel {kernel!r}")
    texts = _texts(samples)
    if len(texts) < 2:
        raise InsufficientSamplesError(
            f"need at least 2 samples, got {len(texts)}")
    fn = textmetrics.SIMILARITY_KERNELS[kernel]
    toks = [textmetrics.tokenize(t) for t in texts]
    total, pairs = 0.0, 0
    for i in range(len(toks)):
        for j in range(i + 1, len(toks)):
            total += fn(toks[i], toks[j])
            pairs += 1
    return -total / pairs
