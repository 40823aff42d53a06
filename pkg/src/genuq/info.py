"""White-box uncertainty estimators over a single model's probabilities.

Every function returns a scalar oriented so that higher means more
uncertain, and is a deterministic function of the record. Estimators raise
UnavailableInputError when the record lacks the probability information
they need; that is a data condition, not a bug.

Step entropies are computed from the stored top-k alternatives, which
truncate the true distribution. Two explicit treatments are supported:
`renormalize` divides the alternative masses by their sum, while
`remainder_bucket` adds one pseudo-outcome carrying the missing mass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import UnavailableInputError
from .records import GenerationRecord, TokenStep

TRUNCATION_MODES = ("renormalize", "remainder_bucket")


@dataclass(frozen=True)
class InfoConfig:
    """Hyperparameters of the entropy-thresholded PMI variant.

    cpmi_tau: step-entropy threshold (nats) above which the marginal term
        is applied; cpmi_lambda: its weight. Neither is fixed by theory,
    both are surfaced in the service/CLI config.
    """

    cpmi_tau: float = 2.0
    cpmi_lambda: float = 1.0
    truncation_mode: str = "renormalize"

    def __post_init__(self):
        if self.cpmi_tau <= 0:
            raise ValueError("cpmi_tau must be > 0")
        if self.cpmi_lambda < 0:
            raise ValueError("cpmi_lambda must be >= 0")
        if self.truncation_mode not in TRUNCATION_MODES:
            raise ValueError(f"unknown truncation_mode {self.truncation_mode!r}")


def step_entropy(step: TokenStep, mode: str = "renormalize") -> float:
    """Entropy (nats) of one step's alternative distribution."""
    if not step.alternatives:
        raise UnavailableInputError("step_entropy", "token alternatives")
    masses = [math.exp(lp) for _, lp in step.alternatives]
    total = sum(masses)
    if total <= 0:
        return 0.0
    if mode == "renormalize" or total > 1.0:
        masses = [m / total for m in masses]
    elif mode == "remainder_bucket":
        remainder = 1.0 - total
        if remainder > 0:
            masses = masses + [remainder]
    else:
        raise ValueError(f"unknown truncation_mode {mode!r}")
    return -sum(m * math.log(m) for m in masses if m > 0)


def _require_tokens(record: GenerationRecord, estimator: str) -> None:
    if not record.output_tokens:
        raise UnavailableInputError(estimator, "output tokens with logprobs")


def msp(record: GenerationRecord) -> float:
    """One minus the probability of the generated sequence."""
    _require_tokens(record, "msp")
    total = sum(s.logprob for s in record.output_tokens)
    return 1.0 - math.exp(total)


def perplexity(record: GenerationRecord) -> float:
    """exp of the mean negative token logprob; 1 for a certain sequence."""
    _require_tokens(record, "perplexity")
    lps = [s.logprob for s in record.output_tokens]
    return math.exp(-sum(lps) / len(lps))


def mean_token_entropy(record: GenerationRecord,
                       cfg: InfoConfig | None = None) -> float:
    """Average step entropy over the generated sequence."""
    cfg = cfg or InfoConfig()
    _require_tokens(record, "mean_token_entropy")
    entropies = []
    for step in record.output_tokens:
        if not step.alternatives:
            raise UnavailableInputError("mean_token_entropy",
                                        "alternatives on every step")
        entropies.append(step_entropy(step, cfg.truncation_mode))
    return sum(entropies) / len(entropies)


def mc_sequence_entropy(record: GenerationRecord,
                        normalized: bool = False) -> float:
    """Monte-Carlo sequence entropy over the sampled outputs.

    The normalized variant averages per-token log probabilities instead of
    sequence log probabilities, removing the length bias.
    """
    if not record.samples:
        raise UnavailableInputError("mc_sequence_entropy", "sampled outputs")
    acc = 0.0
    for s in record.samples:
        lp = s.total_logprob
        if normalized:
            lp /= s.length
        acc += lp
    return -acc / len(record.samples)


def pmi(record: GenerationRecord) -> float:
    """Negative mean pointwise mutual information between the input and
    the output tokens: mean of log(marginal / conditional)."""
    _require_tokens(record, "pmi")
    acc = 0.0
    for step in record.output_tokens:
        if step.unconditional_logprob is None:
            raise UnavailableInputError(
                "pmi", "unconditional_logprob on every step")
        acc += step.unconditional_logprob - step.logprob
    return acc / len(record.output_tokens)


def cpmi(record: GenerationRecord, cfg: InfoConfig | None = None) -> float:
    """Entropy-gated variant of pmi: the marginal term is applied only at
    steps whose conditional entropy reaches cfg.cpmi_tau."""
    cfg = cfg or InfoConfig()
    _require_tokens(record, "cpmi")
    length = len(record.output_tokens)
    nll = 0.0
    marginal = 0.0
    for step in record.output_tokens:
        if step.unconditional_logprob is None:
            raise UnavailableInputError(
                "cpmi", "unconditional_logprob on every step")
        if not step.alternatives:
            raise UnavailableInputError("cpmi", "alternatives on every step")
        nll -= step.logprob
        if step_entropy(step, cfg.truncation_mode) >= cfg.cpmi_tau:
            marginal += step.unconditional_logprob
    return nll / length + cfg.cpmi_lambda * marginal / length


def p_true_uncertainty(record: GenerationRecord) -> float:
    """Complement of the model's own estimate that its answer is true."""
    if record.p_true is None:
        raise UnavailableInputError("p_true", "self-check probability")
    return 1.0 - record.p_true
