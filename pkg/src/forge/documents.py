"""Shared document and training-example records plus their JSONL forms.

These are the currency between pipeline stages; every CLI subcommand reads
and writes them as one JSON object per line.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator, TextIO

from forge.errors import DataError

# Label value used at target positions that carry no training signal
# (unmasked positions of an MLM example).
IGNORE_INDEX = -100


@dataclass
class SourceDocument:
    """Raw source text before tokenization, as read from disk."""

    doc_id: str
    language: str
    text: str

    def to_json(self) -> dict:
        return {"doc_id": self.doc_id, "language": self.language, "text": self.text}

    @classmethod
    def from_json(cls, obj: dict) -> "SourceDocument":
        try:
            return cls(doc_id=obj["doc_id"], language=obj["language"], text=obj["text"])
        except (KeyError, TypeError) as exc:
            raise DataError(f"bad source record: {exc}") from exc


@dataclass
class TokenizedDocument:
    """A tokenized source file or function."""

    tokens: list[int]
    word_spans: list[tuple[int, int]]
    language: str
    doc_id: str

    def to_json(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "language": self.language,
            "tokens": self.tokens,
            "word_spans": [list(s) for s in self.word_spans],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "TokenizedDocument":
        try:
            return cls(
                tokens=list(obj["tokens"]),
                word_spans=[tuple(s) for s in obj["word_spans"]],
                language=obj["language"],
                doc_id=obj["doc_id"],
            )
        except (KeyError, TypeError) as exc:
            raise DataError(f"bad document record: {exc}") from exc


@dataclass
class TrainingExample:
    """One model input/target pair emitted by a corruption or BT stage."""

    objective: str  # "mlm" | "aer" | "dae" | "bt" | "finetune"
    input_tokens: list[int]
    target: list[int]
    source_language: str
    target_language: str
    doc_id: str = ""
    epoch: int = 0

    def to_json(self) -> dict:
        return {
            "objective": self.objective,
            "input_tokens": self.input_tokens,
            "target": self.target,
            "source_language": self.source_language,
            "target_language": self.target_language,
            "doc_id": self.doc_id,
            "epoch": self.epoch,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "TrainingExample":
        try:
            return cls(
                objective=obj["objective"],
                input_tokens=list(obj["input_tokens"]),
                target=list(obj["target"]),
                source_language=obj["source_language"],
                target_language=obj["target_language"],
                doc_id=obj.get("doc_id", ""),
                epoch=int(obj.get("epoch", 0)),
            )
        except (KeyError, TypeError) as exc:
            raise DataError(f"bad training example: {exc}") from exc


@dataclass
class AerLabeledDocument:
    """A tokenized document with one syntax label id per token."""

    doc: TokenizedDocument
    labels: list[int] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "doc_id": self.doc.doc_id,
            "language": self.doc.language,
            "tokens": self.doc.tokens,
            "labels": self.labels,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "AerLabeledDocument":
        """Rebuild from the labeled JSONL form. Word spans are not part of
        that form, so the document comes back without them."""
        try:
            doc = TokenizedDocument(
                tokens=list(obj["tokens"]),
                word_spans=[],
                language=obj["language"],
                doc_id=obj["doc_id"],
            )
            return cls(doc=doc, labels=list(obj["labels"]))
        except (KeyError, TypeError) as exc:
            raise DataError(f"bad labeled document: {exc}") from exc


def write_jsonl(records: Iterable[dict], fp: TextIO) -> int:
    n = 0
    for rec in records:
        fp.write(json.dumps(rec, ensure_ascii=False) + "\n")
        n += 1
    return n


def read_jsonl(fp: TextIO) -> Iterator[dict]:
    for lineno, line in enumerate(fp, 1):
        line = line.strip()
        if not line:
            continue
        try:
            yield json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError(f"line {lineno}: invalid JSON: {exc}") from exc
