"""Text-overlap translation metrics over the shared word segmentation.

BLEU uses add-one smoothing on orders two and above; the unigram precision
stays raw so fully disjoint pairs score zero. Orders with no hypothesis
n-grams at all are left out of the geometric mean, which also caps the
order at the hypothesis length.
"""

from __future__ import annotations

import math
from collections import Counter
from collections.abc import Sequence

from forge.errors import EmptyReference
from forge.tokenizer import segment_words

DEFAULT_MAX_ORDER = 4


def content_words(text: str) -> list[str]:
    return [w for w in segment_words(text) if not w.isspace()]


def ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def reference_limits(ref_lists: Sequence[Sequence[str]], n: int) -> Counter:
    """Per n-gram, the largest count any single reference provides."""
    limits: Counter = Counter()
    for ref in ref_lists:
        for gram, count in ngram_counts(ref, n).items():
            if count > limits[gram]:
                limits[gram] = count
    return limits


def closest_ref_length(hyp_len: int, ref_lists: Sequence[Sequence[str]]) -> int:
    return min((abs(len(r) - hyp_len), len(r)) for r in ref_lists)[1]


def pair_counts(
    hyp: Sequence[str], refs: Sequence[Sequence[str]], max_order: int
) -> tuple[list[int], list[int], int, int]:
    """Clipped matches and totals per order, plus the two length terms."""
    matches = [0] * max_order
    totals = [0] * max_order
    for n in range(1, max_order + 1):
        grams = ngram_counts(hyp, n)
        if not grams:
            break
        limits = reference_limits(refs, n)
        totals[n - 1] = sum(grams.values())
        matches[n - 1] = sum(min(c, limits[g]) for g, c in grams.items())
    return matches, totals, len(hyp), closest_ref_length(len(hyp), refs)


def score_from_counts(
    matches: Sequence[int], totals: Sequence[int], hyp_len: int, ref_len: int
) -> float:
    log_sum = 0.0
    orders = 0
    for n, (m, t) in enumerate(zip(matches, totals), start=1):
        if t == 0:
            continue
        if n == 1:
            if m == 0:
                return 0.0
            p = m / t
        else:
            p = (m + 1) / (t + 1)
        log_sum += math.log(p)
        orders += 1
    if orders == 0 or hyp_len == 0:
        return 0.0
    geo = math.exp(log_sum / orders)
    bp = 1.0 if hyp_len > ref_len else math.exp(1 - ref_len / hyp_len)
    return 100.0 * bp * geo


def sentence_bleu(
    hyp: Sequence[str],
    refs: Sequence[Sequence[str]],
    max_order: int = DEFAULT_MAX_ORDER,
) -> float:
    if not hyp:
        return 0.0
    return score_from_counts(*pair_counts(hyp, refs, max_order))


def bleu(
    hypothesis: str, references: Sequence[str], max_order: int = DEFAULT_MAX_ORDER
) -> float:
    """Smoothed sentence BLEU in [0, 100] over word-segmented text."""
    if not references:
        raise EmptyReference("bleu needs at least one reference")
    return sentence_bleu(
        content_words(hypothesis), [content_words(r) for r in references], max_order
    )


def chrf(hypothesis: str, reference: str, n: int = 6, beta: float = 2.0) -> float:
    """Character n-gram F-score with whitespace removed, averaged over the
    orders that occur on either side."""
    hyp = "".join(hypothesis.split())
    ref = "".join(reference.split())
    beta_sq = beta * beta
    total = 0.0
    orders = 0
    for order in range(1, n + 1):
        hyp_grams = Counter(hyp[i : i + order] for i in range(len(hyp) - order + 1))
        ref_grams = Counter(ref[i : i + order] for i in range(len(ref) - order + 1))
        if not hyp_grams and not ref_grams:
            continue
        orders += 1
        overlap = sum((hyp_grams & ref_grams).values())
        if overlap == 0:
            continue
        precision = overlap / sum(hyp_grams.values())
        recall = overlap / sum(ref_grams.values())
        total += (1 + beta_sq) * precision * recall / (beta_sq * precision + recall)
    return 100.0 * total / orders if orders else 0.0


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_l(hypothesis: str, reference: str, beta: float = 1.0) -> float:
    """Longest-common-subsequence F-measure over word tokens."""
    hyp = content_words(hypothesis)
    ref = content_words(reference)
    if not hyp or not ref:
        return 100.0 if hyp == ref else 0.0
    lcs = _lcs_length(hyp, ref)
    if lcs == 0:
        return 0.0
    precision = lcs / len(hyp)
    recall = lcs / len(ref)
    beta_sq = beta * beta
    return 100.0 * (1 + beta_sq) * precision * recall / (recall + beta_sq * precision)
