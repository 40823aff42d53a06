"""Estimator registry: one callable entry per supported method variant.

Entries carry the metadata the service and CLI expose (taxonomy, cost
tags, required inputs) plus a compute function over a record and an
EstimatorContext. The context holds everything that is not part of the
record itself: hyperparameters, the NLI pairwise scorer, fitted density
models, and the hybrid-score calibration.

`family` groups kernel/measure variants of one method (e.g. the three
lexical-similarity kernels share family "lexical_similarity"); the
19 families make up the full method roster. The two `diagnostic` entries
(oracle, constant) exist to validate the benchmark harness itself.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from . import density as density_mod
from . import ensemble as ensemble_mod
from . import info as info_mod
from . import meaning as meaning_mod
from . import textmetrics
from .errors import UnavailableInputError, UsageError
from .records import GenerationRecord

REQ_LOGPROBS = "token_logprobs"
REQ_ALTERNATIVES = "token_alternatives"
REQ_SAMPLES = "samples"
REQ_SAMPLE_LOGPROBS = "sample_logprobs"
REQ_UNCONDITIONAL = "unconditional_logprobs"
REQ_PTRUE = "p_true"
REQ_NLI = "nli_scores"
REQ_EMBEDDING = "embedding"
REQ_DENSITY_FIT = "density_fit"
REQ_BACKGROUND_FIT = "background_fit"
REQ_RDE_FIT = "rde_fit"
REQ_HUQ_CALIBRATION = "huq_calibration"
REQ_ENSEMBLE = "ensemble_traces"
REQ_REFERENCE = "reference_text"


@dataclass
class EstimatorContext:
    """Out-of-record resources estimators may need."""

    info_cfg: info_mod.InfoConfig = field(default_factory=info_mod.InfoConfig)
    nli: Callable[[list[str]], meaning_mod.PairwiseScores] | None = None
    density: density_mod.DensityArtifacts | None = None
    huq: density_mod.HuqConfig | None = None
    ecc_threshold: float = meaning_mod.DEFAULT_ECC_THRESHOLD
    _nli_cache: dict[str, meaning_mod.PairwiseScores] = field(default_factory=dict)

    def pairwise_for(self, record: GenerationRecord,
                     estimator: str) -> meaning_mod.PairwiseScores:
        if self.nli is None:
            raise UnavailableInputError(estimator, "an NLI provider")
        if len(record.samples) < 2:
            raise UnavailableInputError(estimator, "at least 2 samples")
        cached = self._nli_cache.get(record.id)
        if cached is None or cached.size != len(record.samples):
            cached = self.nli([s.text for s in record.samples])
            self._nli_cache[record.id] = cached
        return cached


@dataclass(frozen=True)
class EstimatorEntry:
    name: str
    display_name: str
    family: str
    estimator_type: str       # "whitebox" | "blackbox" | "diagnostic"
    category: str
    compute_cost: str         # "Low" | "Medium" | "High"
    memory_cost: str
    needs_training_data: bool
    requires: tuple[str, ...]
    fn: Callable[[GenerationRecord, EstimatorContext], float]


class Registry:
    def __init__(self, entries: list[EstimatorEntry]):
        self._entries: dict[str, EstimatorEntry] = {}
        for e in entries:
            if e.name in self._entries:
                raise ValueError(f"duplicate estimator name {e.name!r}")
            self._entries[e.name] = e

    def names(self) -> list[str]:
        return list(self._entries)

    def families(self) -> set[str]:
        return {e.family for e in self._entries.values()}

    def get(self, name: str) -> EstimatorEntry:
        try:
            return self._entries[name]
        except KeyError:
            raise UsageError(
                f"unknown estimator {name!r}; valid names: "
                f"{', '.join(sorted(self._entries))}") from None

    def entries(self) -> list[EstimatorEntry]:
        return list(self._entries.values())

    def without(self, disabled: set[str]) -> "Registry":
        return Registry([e for e in self._entries.values()
                         if e.name not in disabled])

    def compute(self, name: str, record: GenerationRecord,
                ctx: EstimatorContext) -> float:
        return self.get(name).fn(record, ctx)


def _density_fit(ctx: EstimatorContext, estimator: str,
                 need_background: bool = False) -> density_mod.DensityArtifacts:
    if ctx.density is None or ctx.density.fit is None:
        raise UnavailableInputError(estimator, "a fitted density model")
    if need_background and ctx.density.background is None:
        raise UnavailableInputError(estimator, "a background density fit")
    return ctx.density


def _embedding(record: GenerationRecord, estimator: str):
    if record.embedding is None:
        raise UnavailableInputError(estimator, "a hidden-state embedding")
    return record.embedding


def _similarity(record: GenerationRecord, ctx: EstimatorContext,
                kernel: str, estimator: str) -> meaning_mod.SimilarityMatrix:
    if len(record.samples) < 2:
        raise UnavailableInputError(estimator, "at least 2 samples")
    pairwise = None
    if kernel in meaning_mod.NLI_KERNELS:
        pairwise = ctx.pairwise_for(record, estimator)
    return meaning_mod.build_similarity_matrix(record.samples, kernel, pairwise)


def _mahalanobis(record, ctx):
    art = _density_fit(ctx, "mahalanobis")
    return density_mod.mahalanobis(art.fit, _embedding(record, "mahalanobis"))


def _relative_mahalanobis(record, ctx):
    art = _density_fit(ctx, "relative_mahalanobis", need_background=True)
    return density_mod.relative_mahalanobis(
        art.fit, art.background, _embedding(record, "relative_mahalanobis"))


def _rde(record, ctx):
    if ctx.density is None or ctx.density.rde is None:
        raise UnavailableInputError("rde", "a fitted reduced robust density model")
    return density_mod.rde_score(ctx.density.rde, _embedding(record, "rde"))


def _huq(record, ctx, density_fn, name):
    if ctx.huq is None:
        raise UnavailableInputError(name, "hybrid calibration scores")
    return density_mod.huq_combine(
        ctx.huq, density_fn(record, ctx), info_mod.perplexity(record))


def _semantic_entropy(record, ctx):
    if not record.samples:
        raise UnavailableInputError("semantic_entropy", "sampled outputs")
    assignment = meaning_mod.cluster_bidirectional_entailment(
        record.samples, ctx.pairwise_for(record, "semantic_entropy"))
    return meaning_mod.semantic_entropy(record, assignment)


def _oracle(record, ctx):
    if record.reference_text is None:
        raise UnavailableInputError("oracle", "reference_text")
    return -textmetrics.rougeL(record.output_text, record.reference_text)


def default_registry() -> Registry:
    e: list[EstimatorEntry] = []

    def add(name, display, family, etype, category, compute, memory,
            training, requires, fn):
        e.append(EstimatorEntry(name, display, family, etype, category,
                                compute, memory, training, tuple(requires), fn))

    add("msp", "Maximum sequence probability", "max_sequence_probability",
        "whitebox", "information", "Low", "Low", False,
        [REQ_LOGPROBS], lambda r, c: info_mod.msp(r))
    add("perplexity", "Perplexity", "perplexity",
        "whitebox", "information", "Low", "Low", False,
        [REQ_LOGPROBS], lambda r, c: info_mod.perplexity(r))
    add("mean_token_entropy", "Mean token entropy", "mean_token_entropy",
        "whitebox", "information", "Low", "Low", False,
        [REQ_LOGPROBS, REQ_ALTERNATIVES],
        lambda r, c: info_mod.mean_token_entropy(r, c.info_cfg))
    add("mc_sequence_entropy", "Monte Carlo sequence entropy",
        "mc_sequence_entropy", "whitebox", "information", "High", "Low", False,
        [REQ_SAMPLES, REQ_SAMPLE_LOGPROBS],
        lambda r, c: info_mod.mc_sequence_entropy(r, normalized=False))
    add("mc_normalized_sequence_entropy",
        "Monte Carlo normalized sequence entropy",
        "mc_sequence_entropy", "whitebox", "information", "High", "Low", False,
        [REQ_SAMPLES, REQ_SAMPLE_LOGPROBS],
        lambda r, c: info_mod.mc_sequence_entropy(r, normalized=True))
    add("pmi", "Pointwise mutual information", "pmi",
        "whitebox", "information", "Medium", "Low", False,
        [REQ_LOGPROBS, REQ_UNCONDITIONAL], lambda r, c: info_mod.pmi(r))
    add("cpmi", "Conditional pointwise mutual information", "conditional_pmi",
        "whitebox", "information", "Medium", "Medium", False,
        [REQ_LOGPROBS, REQ_UNCONDITIONAL, REQ_ALTERNATIVES],
        lambda r, c: info_mod.cpmi(r, c.info_cfg))

    add("semantic_entropy", "Semantic entropy", "semantic_entropy",
        "whitebox", "meaning_diversity", "High", "Low", False,
        [REQ_SAMPLES, REQ_SAMPLE_LOGPROBS, REQ_NLI], _semantic_entropy)

    add("ensemble_seq_msp", "Ensemble sequence probability",
        "sequence_ensemble", "whitebox", "ensembling", "High", "High", True,
        [REQ_ENSEMBLE], lambda r, c: ensemble_mod.seq_msp_ensemble(r))
    add("ensemble_seq_rmi", "Ensemble sequence reverse mutual information",
        "sequence_ensemble", "whitebox", "ensembling", "High", "High", True,
        [REQ_ENSEMBLE], lambda r, c: ensemble_mod.seq_rmi(r))
    for measure, label in [("total_entropy", "total entropy"),
                           ("data_uncertainty", "data uncertainty"),
                           ("mi", "mutual information"),
                           ("epkl", "expected pairwise KL divergence"),
                           ("rmi", "reverse mutual information")]:
        add(f"ensemble_token_{measure}", f"Ensemble token {label}",
            "token_ensemble", "whitebox", "ensembling", "High", "High", True,
            [REQ_ENSEMBLE],
            lambda r, c, m=measure: ensemble_mod.aggregate_token_measure(r, m))

    add("mahalanobis", "Mahalanobis distance", "mahalanobis_distance",
        "whitebox", "density", "Low", "Low", True,
        [REQ_EMBEDDING, REQ_DENSITY_FIT], _mahalanobis)
    add("rde", "Robust density estimation", "robust_density",
        "whitebox", "density", "Low", "Low", True,
        [REQ_EMBEDDING, REQ_RDE_FIT], _rde)
    add("relative_mahalanobis", "Relative Mahalanobis distance",
        "relative_mahalanobis_distance", "whitebox", "density", "Low", "Low",
        True, [REQ_EMBEDDING, REQ_DENSITY_FIT, REQ_BACKGROUND_FIT],
        _relative_mahalanobis)
    add("huq_md", "Hybrid uncertainty quantification (Mahalanobis)",
        "hybrid_uq", "whitebox", "density", "Low", "Low", True,
        [REQ_EMBEDDING, REQ_DENSITY_FIT, REQ_HUQ_CALIBRATION, REQ_LOGPROBS],
        lambda r, c: _huq(r, c, _mahalanobis, "huq_md"))
    add("huq_rmd", "Hybrid uncertainty quantification (relative Mahalanobis)",
        "hybrid_uq", "whitebox", "density", "Low", "Low", True,
        [REQ_EMBEDDING, REQ_DENSITY_FIT, REQ_BACKGROUND_FIT,
         REQ_HUQ_CALIBRATION, REQ_LOGPROBS],
        lambda r, c: _huq(r, c, _relative_mahalanobis, "huq_rmd"))

    add("p_true", "p(True) self-check", "p_true",
        "whitebox", "reflexive", "Medium", "Low", False,
        [REQ_PTRUE], lambda r, c: info_mod.p_true_uncertainty(r))

    add("num_semantic_sets", "Number of semantic sets", "num_semantic_sets",
        "blackbox", "meaning_diversity", "High", "Low", False,
        [REQ_SAMPLES, REQ_NLI],
        lambda r, c: float(meaning_mod.num_semantic_sets(
            r.samples, c.pairwise_for(r, "num_semantic_sets"))))

    kernel_specs = [("nli_entail", "NLI entailment", [REQ_SAMPLES, REQ_NLI]),
                    ("nli_contra", "NLI contradiction", [REQ_SAMPLES, REQ_NLI]),
                    ("jaccard", "Jaccard", [REQ_SAMPLES])]
    for kernel, klabel, reqs in kernel_specs:
        add(f"eigv_laplacian_{kernel}",
            f"Sum of eigenvalues of the graph Laplacian ({klabel})",
            "eigv_laplacian", "blackbox", "meaning_diversity", "High", "Low",
            False, reqs,
            lambda r, c, k=kernel, n=f"eigv_laplacian_{kernel}":
                meaning_mod.eigv_laplacian(_similarity(r, c, k, n)))
        add(f"degmat_{kernel}", f"Degree matrix ({klabel})",
            "degree_matrix", "blackbox", "meaning_diversity", "High", "Low",
            False, reqs,
            lambda r, c, k=kernel, n=f"degmat_{kernel}":
                meaning_mod.degmat_uncertainty(_similarity(r, c, k, n)))
        add(f"eccentricity_{kernel}", f"Eccentricity ({klabel})",
            "eccentricity", "blackbox", "meaning_diversity", "High", "Low",
            False, reqs,
            lambda r, c, k=kernel, n=f"eccentricity_{kernel}":
                meaning_mod.eccentricity(_similarity(r, c, k, n),
                                         c.ecc_threshold)[0])

    for kernel in ("rouge1", "rougeL", "bleu"):
        add(f"lexical_similarity_{kernel}", f"Lexical similarity ({kernel})",
            "lexical_similarity", "blackbox", "meaning_diversity", "High",
            "Low", False, [REQ_SAMPLES],
            lambda r, c, k=kernel: meaning_mod.lexical_similarity(r.samples, k))

    add("oracle", "Oracle (diagnostic)", "diagnostic",
        "diagnostic", "diagnostic", "Low", "Low", False,
        [REQ_REFERENCE], _oracle)
    add("constant", "Constant (diagnostic)", "diagnostic",
        "diagnostic", "diagnostic", "Low", "Low", False,
        [], lambda r, c: 0.0)

    return Registry(e)


#: Families that make up the complete method roster (kernel and measure
#: variants collapse onto their family).
ROSTER_FAMILIES = frozenset({
    "max_sequence_probability", "perplexity", "mean_token_entropy",
    "mc_sequence_entropy", "pmi", "conditional_pmi", "semantic_entropy",
    "sequence_ensemble", "token_ensemble", "mahalanobis_distance",
    "robust_density", "relative_mahalanobis_distance", "hybrid_uq",
    "p_true", "num_semantic_sets", "eigv_laplacian", "degree_matrix",
    "eccentricity", "lexical_similarity",
})
