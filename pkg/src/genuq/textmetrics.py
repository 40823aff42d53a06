"""Self-contained lexical similarity and generation-quality metrics.

ROUGE-1, ROUGE-L, and sentence BLEU double as quality metrics (candidate
vs. reference answer) and as similarity kernels between sampled responses;
Jaccard is a pure set-overlap similarity. All scores are in [0, 1] and all
four metrics share one tokenizer so scores are comparable across uses.

Tokenization: lowercase, punctuation replaced by spaces, whitespace split.

Sentence BLEU, exactly as implemented here:

    p_1   = clipped unigram matches / candidate unigrams   (no smoothing)
    p_n   = (clipped matches + 1) / (candidate n-grams + 1),  n = 2..4
    BP    = 1 if c > r else exp(1 - r/c)      (c, r = token counts)
    BLEU  = BP * exp(mean(log p_n))           (0 if p_1 = 0)

The add-one smoothing keeps short candidates finite; an empty candidate or
reference scores 0 for all overlap metrics, while jaccard of two empty
texts is 1 (identical degenerate responses count as similar).
"""

from __future__ import annotations

import math
import string
from dataclasses import dataclass

from . import kernels

_PUNCT_TABLE = str.maketrans({c: " " for c in string.punctuation})


@dataclass(frozen=True)
class TokenizedText:
    tokens: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.tokens)


def tokenize(text: str) -> TokenizedText:
    """Deterministic tokenizer shared by every metric in this module."""
    return TokenizedText(tuple(text.lower().translate(_PUNCT_TABLE).split()))


def _tokens(text: "TokenizedText | str") -> tuple[str, ...]:
    if isinstance(text, TokenizedText):
        return text.tokens
    return tokenize(text).tokens


def _as_ids(a: tuple[str, ...], b: tuple[str, ...]) -> tuple[list[int], list[int]]:
    vocab: dict[str, int] = {}
    return ([vocab.setdefault(t, len(vocab)) for t in a],
            [vocab.setdefault(t, len(vocab)) for t in b])


def rouge1(candidate: "TokenizedText | str",
           reference: "TokenizedText | str") -> float:
    """Unigram-overlap F1 with clipped counts.

    With precision m/|cand| and recall m/|ref|, the harmonic mean reduces
    to 2m / (|cand| + |ref|), computed in that exact form."""
    cand, ref = _tokens(candidate), _tokens(reference)
    if not cand or not ref:
        return 0.0
    ca, cb = _as_ids(cand, ref)
    matches, _ = kernels.clipped_ngram_matches(ca, cb, 1)
    return 2 * matches / (len(cand) + len(ref))


def rougeL(candidate: "TokenizedText | str",
           reference: "TokenizedText | str") -> float:
    """Longest-common-subsequence F1, as 2*lcs / (|cand| + |ref|)."""
    cand, ref = _tokens(candidate), _tokens(reference)
    if not cand or not ref:
        return 0.0
    ca, cb = _as_ids(cand, ref)
    lcs = kernels.lcs_length(ca, cb)
    return 2 * lcs / (len(cand) + len(ref))


def bleu(candidate: "TokenizedText | str",
         reference: "TokenizedText | str") -> float:
    """Sentence BLEU up to 4-grams; see the module docstring for the
    exact smoothing and brevity-penalty conventions."""
    cand, ref = _tokens(candidate), _tokens(reference)
    if not cand or not ref:
        return 0.0
    ca, cb = _as_ids(cand, ref)
    log_sum = 0.0
    for n in range(1, 5):
        matches, total = kernels.clipped_ngram_matches(ca, cb, n)
        if n == 1:
            if matches == 0:
                return 0.0
            p = matches / total
        else:
            p = (matches + 1) / (total + 1)
        log_sum += math.log(p)
    bp = 1.0 if len(cand) > len(ref) else math.exp(1.0 - len(ref) / len(cand))
    return min(1.0, bp) * math.exp(log_sum / 4.0)


def jaccard(candidate: "TokenizedText | str",
            reference: "TokenizedText | str") -> float:
    """Set Jaccard over unique tokens; 1 when both texts are empty."""
    a, b = set(_tokens(candidate)), set(_tokens(reference))
    if not a and not b:
        return 1.0
    return len(a & b) / len(a | b)


QUALITY_METRICS = {"rouge1": rouge1, "rougeL": rougeL, "bleu": bleu}
SIMILARITY_KERNELS = {"jaccard": jaccard, **QUALITY_METRICS}
