"""Translation quality metrics for code: BLEU, chrF, ROUGE-L, and a
four-component code score with tree and def-use views."""

from forge.metrics.codebleu import CodeBleuScore, codebleu
from forge.metrics.ngram import bleu, chrf, rouge_l
from forge.metrics.report import MetricReport, PairScore, corpus_report

__all__ = [
    "CodeBleuScore",
    "MetricReport",
    "PairScore",
    "bleu",
    "chrf",
    "codebleu",
    "corpus_report",
    "rouge_l",
]
