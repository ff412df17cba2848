"""Corpus preprocessing: filters, balancing, and quality labeling.

Every filter is a per-document predicate returning the retained documents
plus a CorpusStats record whose counts always conserve (retained + dropped
equals the input count). Token counts everywhere mean non-whitespace words
under the shared segmentation, so punctuation characters count.

The educational-value step talks to an external labeler through a plain
callable ``prompt -> response text``; with a label cache on disk, reruns
are offline and the whole pipeline is a pure function of its inputs.
"""

from __future__ import annotations

import json
import logging
import os
import time
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from forge.documents import SourceDocument, read_jsonl, write_jsonl
from forge.errors import DataError, LabelerUnavailable, MalformedVerdict
from forge.tokenizer import segment_words

log = logging.getLogger("forge.corpus")

MIN_TOKENS = 10
MAX_TOKENS = 1000

# A line with none of these characters looks like prose, not code.
CODE_PUNCTUATION = set(";{}()[]=<>#*&")
NATURAL_TEXT_LINE_RATIO = 0.4

LANGUAGE_EXTENSIONS = {
    "cpp": (".cpp", ".cc", ".cxx", ".hpp", ".hh", ".h"),
    "cuda": (".cu", ".cuh"),
    "fortran": (".f90", ".f95", ".f03", ".f", ".F90"),
}

ENV_ENDPOINT = "FORGE_LABELER_ENDPOINT"
ENV_MODEL = "FORGE_LABELER_MODEL"
ENV_API_KEY = "FORGE_LABELER_API_KEY"

QUALITY_PROMPT_TEMPLATE = (
    "Determine the educational value of the following code for a student "
    "whose goal is to learn C++ coding concepts. If it has educational value, "
    'return only "Yes", else, return "No".\n'
    "Code:{code}\n"
    "Educational value:"
)


@dataclass(frozen=True)
class CorpusStats:
    """Counts for one pipeline stage. per_language maps a language tag to
    (input, retained) document counts; the histogram buckets input documents
    by token count rounded up to a power of two."""

    stage: str
    input_count: int
    retained: int
    dropped: int
    per_language: dict
    token_counts: dict
    token_histogram: dict


@dataclass(frozen=True)
class QualityLabel:
    doc_id: str
    verdict: str  # "yes" | "no"
    source: str  # "llm" | "classifier" | "manual"

    def to_json(self) -> dict:
        return {"doc_id": self.doc_id, "verdict": self.verdict, "source": self.source}


def count_tokens(text: str) -> int:
    return sum(1 for w in segment_words(text) if not w.isspace())


def has_whole_word(text: str, words: Iterable) -> bool:
    wanted = set(words)
    return any(w in wanted for w in segment_words(text))


def _histogram_bucket(count: int) -> int:
    if count <= 0:
        return 0
    return 1 << (count - 1).bit_length()


def _stats(stage: str, docs: Sequence, kept: Sequence) -> CorpusStats:
    kept_ids = {id(d) for d in kept}
    per_language: dict = {}
    token_counts: dict = {}
    histogram: dict = {}
    for document in docs:
        n_in, n_kept = per_language.get(document.language, (0, 0))
        per_language[document.language] = (
            n_in + 1,
            n_kept + (1 if id(document) in kept_ids else 0),
        )
        tokens = count_tokens(document.text)
        token_counts[document.language] = (
            token_counts.get(document.language, 0) + tokens
        )
        bucket = _histogram_bucket(tokens)
        histogram[bucket] = histogram.get(bucket, 0) + 1
    return CorpusStats(
        stage=stage,
        input_count=len(docs),
        retained=len(kept),
        dropped=len(docs) - len(kept),
        per_language=per_language,
        token_counts=token_counts,
        token_histogram=histogram,
    )


def corpus_stats(docs: Sequence) -> CorpusStats:
    return _stats("stats", list(docs), list(docs))


# -- filters -------------------------------------------------------------------


def filter_keywords(docs, language: str, keywords) -> tuple:
    """Keep documents containing at least one keyword as a whole word."""
    wanted = set(keywords)
    if not wanted:
        raise DataError("keyword filter needs a non-empty keyword set")
    docs = list(docs)
    kept = [d for d in docs if has_whole_word(d.text, wanted)]
    return kept, _stats(f"keywords:{language}", docs, kept)


def filter_length(
    docs, min_tokens: int = MIN_TOKENS, max_tokens: int = MAX_TOKENS
) -> tuple:
    """Keep documents whose token count lies in [min_tokens, max_tokens]."""
    if min_tokens < 1 or max_tokens < min_tokens:
        raise DataError(
            f"bad length bounds [{min_tokens}, {max_tokens}]: need 1 <= min <= max"
        )
    docs = list(docs)
    kept = [d for d in docs if min_tokens <= count_tokens(d.text) <= max_tokens]
    return kept, _stats("length", docs, kept)


def balance(corpus_a, corpus_b, rng: np.random.Generator) -> tuple:
    """Downsample the larger corpus so both have equal size, keeping the
    original document order of the sampled side."""
    corpus_a = list(corpus_a)
    corpus_b = list(corpus_b)
    if not corpus_a or not corpus_b:
        raise DataError("balance needs two non-empty corpora")
    target = min(len(corpus_a), len(corpus_b))

    def sample(docs):
        if len(docs) == target:
            return docs
        picked = rng.choice(len(docs), size=target, replace=False)
        return [docs[i] for i in sorted(picked)]

    return sample(corpus_a), sample(corpus_b)


def filter_synthetic_pairs(
    pairs,
    target_keywords,
    max_natural_ratio: float = NATURAL_TEXT_LINE_RATIO,
) -> list:
    """Drop unusable (source, candidate) pairs from a synthetic batch.

    A candidate is dropped when it is empty, lacks every target-language
    keyword (skipped when the keyword set is empty), or reads like prose:
    more than max_natural_ratio of its non-empty lines has no code
    punctuation at all.
    """
    wanted = set(target_keywords)
    kept = []
    for source, candidate in pairs:
        if not candidate.strip():
            continue
        if wanted and not has_whole_word(candidate, wanted):
            continue
        lines = [line for line in candidate.splitlines() if line.strip()]
        prose = sum(1 for line in lines if not (set(line) & CODE_PUNCTUATION))
        if lines and prose / len(lines) > max_natural_ratio:
            continue
        kept.append((source, candidate))
    return kept


# -- quality labeling -------------------------------------------------------------


def quality_prompt(code: str) -> str:
    return QUALITY_PROMPT_TEMPLATE.replace("{code}", code)


def normalize_verdict(raw: str) -> str:
    verdict = raw.strip().strip('"').strip("'").rstrip(".!").strip().casefold()
    if verdict in ("yes", "no"):
        return verdict
    raise MalformedVerdict(f"labeler said {raw!r}, expected Yes or No")


def load_label_cache(path) -> dict:
    cache: dict = {}
    path = Path(path)
    if not path.exists():
        return cache
    with path.open(encoding="utf-8") as fp:
        for obj in read_jsonl(fp):
            try:
                label = QualityLabel(obj["doc_id"], obj["verdict"], obj["source"])
            except KeyError as exc:
                raise DataError(f"{path}: bad label record: {exc}") from exc
            if label.verdict not in ("yes", "no"):
                raise DataError(f"{path}: bad verdict {label.verdict!r}")
            cache[label.doc_id] = label
    return cache


def save_label_cache(cache: dict, path) -> None:
    with Path(path).open("w", encoding="utf-8") as fp:
        write_jsonl(
            (cache[doc_id].to_json() for doc_id in sorted(cache)),
            fp,
        )


def quality_filter(
    docs,
    labeler: Callable | None,
    cache_path=None,
    source: str = "llm",
    jobs: int = 1,
) -> tuple:
    """Keep documents the labeler deems educationally valuable.

    Cached labels are reused and never re-requested. Documents whose fresh
    response normalizes to neither yes nor no are dropped and logged, not
    fatal. Raises LabelerUnavailable when a document has no cached label
    and no labeler was given.
    """
    docs = list(docs)
    cache = load_label_cache(cache_path) if cache_path else {}
    missing = [d for d in docs if d.doc_id not in cache]
    if missing and labeler is None:
        raise LabelerUnavailable(
            f"{len(missing)} unlabeled documents and no labeler configured"
        )

    responses: dict = {}
    if missing:
        if jobs > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                raws = list(pool.map(lambda d: labeler(quality_prompt(d.text)), missing))
        else:
            raws = [labeler(quality_prompt(d.text)) for d in missing]
        responses = {d.doc_id: raw for d, raw in zip(missing, raws)}

    labels = []
    kept = []
    fresh: dict = {}
    for document in docs:
        if document.doc_id in cache:
            label = cache[document.doc_id]
        else:
            try:
                verdict = normalize_verdict(responses[document.doc_id])
            except MalformedVerdict as exc:
                log.warning("dropping %s: %s", document.doc_id, exc)
                continue
            label = QualityLabel(document.doc_id, verdict, source)
            fresh[document.doc_id] = label
        labels.append(label)
        if label.verdict == "yes":
            kept.append(document)

    if cache_path and fresh:
        cache.update(fresh)
        save_label_cache(cache, cache_path)
    return kept, labels


def labeler_from_env(
    retries: int = 3, backoff: float = 0.5, timeout: float = 30.0
) -> Callable:
    """HTTP labeler client configured entirely from the environment.

    POSTs ``{"model": ..., "prompt": ...}`` as JSON to the endpoint and
    expects ``{"text": ...}`` back. The API key, when set, goes in a
    Bearer Authorization header.
    """
    endpoint = os.environ.get(ENV_ENDPOINT)
    if not endpoint:
        raise LabelerUnavailable(f"{ENV_ENDPOINT} is not set")
    model = os.environ.get(ENV_MODEL, "")
    api_key = os.environ.get(ENV_API_KEY, "")

    def call(prompt: str) -> str:
        body = json.dumps({"model": model, "prompt": prompt}).encode("utf-8")
        request = urllib.request.Request(
            endpoint, data=body, headers={"Content-Type": "application/json"}
        )
        if api_key:
            request.add_header("Authorization", f"Bearer {api_key}")
        last_error: Exception | None = None
        for attempt in range(retries):
            try:
                with urllib.request.urlopen(request, timeout=timeout) as resp:
                    payload = json.loads(resp.read().decode("utf-8"))
                return str(payload["text"])
            except Exception as exc:  # noqa: BLE001 - retry then surface
                last_error = exc
                time.sleep(backoff * 2**attempt)
        raise LabelerUnavailable(f"labeler endpoint failed: {last_error}")

    return call


# -- corpus io ---------------------------------------------------------------------


def _language_for(path: Path) -> str | None:
    suffix = path.suffix
    for language, extensions in LANGUAGE_EXTENSIONS.items():
        if suffix in extensions or suffix.lower() in extensions:
            return language
    return None


def read_corpus(path, language: str | None = None) -> list:
    """Load documents from a JSONL file or a source directory tree.

    In a directory tree the language comes from the file extension and the
    doc id is the POSIX-style relative path; files with unknown extensions
    are skipped. The optional language argument keeps only that language.
    """
    path = Path(path)
    docs = []
    if path.is_dir():
        for file in sorted(p for p in path.rglob("*") if p.is_file()):
            file_language = _language_for(file)
            if file_language is None:
                continue
            docs.append(
                SourceDocument(
                    doc_id=file.relative_to(path).as_posix(),
                    language=file_language,
                    text=file.read_text(encoding="utf-8"),
                )
            )
    else:
        with path.open(encoding="utf-8") as fp:
            docs = [SourceDocument.from_json(obj) for obj in read_jsonl(fp)]
    if language is not None:
        docs = [d for d in docs if d.language == language]
    return docs


def write_corpus(docs, path) -> int:
    with Path(path).open("w", encoding="utf-8") as fp:
        return write_jsonl((d.to_json() for d in docs), fp)
