"""Corpus-level aggregation of the translation metrics.

The headline number is corpus BLEU with n-gram counts pooled across pairs
before taking precisions, matching the usual multi-sentence convention.
Everything else (chrF, ROUGE-L, the combined code score) averages the
per-pair values, and per-pair results are kept so callers can inspect or
serialize them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from forge.errors import DataError, EmptyReference
from forge.metrics.codebleu import (
    COMPONENT_NAMES,
    DEFAULT_WEIGHTS,
    CodeBleuScore,
    codebleu,
)
from forge.metrics.ngram import (
    DEFAULT_MAX_ORDER,
    chrf,
    content_words,
    pair_counts,
    rouge_l,
    score_from_counts,
    sentence_bleu,
)


@dataclass(frozen=True)
class PairScore:
    index: int
    bleu: float
    chrf: float
    rouge_l: float
    codebleu: CodeBleuScore

    def to_json(self) -> dict:
        return {
            "index": self.index,
            "bleu": self.bleu,
            "chrf": self.chrf,
            "rouge_l": self.rouge_l,
            "codebleu": self.codebleu.score,
            "codebleu_components": self.codebleu.components(),
            "excluded": list(self.codebleu.excluded),
        }


@dataclass(frozen=True)
class MetricReport:
    language: str
    pairs: list
    corpus_bleu: float
    mean_bleu: float
    mean_chrf: float
    mean_rouge_l: float
    mean_codebleu: float
    components: dict

    def to_json(self) -> dict:
        return {
            "language": self.language,
            "corpus_bleu": self.corpus_bleu,
            "mean_bleu": self.mean_bleu,
            "mean_chrf": self.mean_chrf,
            "mean_rouge_l": self.mean_rouge_l,
            "mean_codebleu": self.mean_codebleu,
            "components": dict(self.components),
            "pairs": [pair.to_json() for pair in self.pairs],
        }


def _mean(values: Sequence[float]) -> float:
    return sum(values) / len(values)


def corpus_report(
    pairs: Sequence,
    language: str,
    weights: Sequence[float] = DEFAULT_WEIGHTS,
    max_order: int = DEFAULT_MAX_ORDER,
) -> MetricReport:
    """Score (hypothesis, reference) text pairs for one target language."""
    if not pairs:
        raise DataError("corpus_report needs at least one pair")

    scored = []
    matches = [0] * max_order
    totals = [0] * max_order
    hyp_len_sum = 0
    ref_len_sum = 0
    for index, (hypothesis, reference) in enumerate(pairs):
        if not reference.strip():
            raise EmptyReference(f"pair {index} has an empty reference")
        hyp_tokens = content_words(hypothesis)
        ref_tokens = content_words(reference)
        pair_m, pair_t, hyp_len, ref_len = pair_counts(
            hyp_tokens, [ref_tokens], max_order
        )
        for n in range(max_order):
            matches[n] += pair_m[n]
            totals[n] += pair_t[n]
        hyp_len_sum += hyp_len
        ref_len_sum += ref_len
        scored.append(
            PairScore(
                index=index,
                bleu=sentence_bleu(hyp_tokens, [ref_tokens], max_order),
                chrf=chrf(hypothesis, reference),
                rouge_l=rouge_l(hypothesis, reference),
                codebleu=codebleu(hypothesis, reference, language, weights, max_order),
            )
        )

    components = {}
    for name in COMPONENT_NAMES:
        values = [
            v for pair in scored if (v := pair.codebleu.components()[name]) is not None
        ]
        components[name] = _mean(values) if values else None

    return MetricReport(
        language=language,
        pairs=scored,
        corpus_bleu=score_from_counts(matches, totals, hyp_len_sum, ref_len_sum),
        mean_bleu=_mean([pair.bleu for pair in scored]),
        mean_chrf=_mean([pair.chrf for pair in scored]),
        mean_rouge_l=_mean([pair.rouge_l for pair in scored]),
        mean_codebleu=_mean([pair.codebleu.score for pair in scored]),
        components=components,
    )
