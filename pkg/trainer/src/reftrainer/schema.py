"""Parser for training-example records.

One record is a JSON object with the fields ``objective``,
``input_tokens``, ``target``, ``source_language``, ``target_language``,
and optionally ``doc_id`` and ``epoch``. Streams are JSONL files, one
record per line; blank lines are skipped.

Two record families share the shape:

* ``mlm`` and ``aer`` are per-position classification. Input and target
  have equal length; target positions carrying no signal hold
  :data:`IGNORE_INDEX`.
* ``dae``, ``bt``, and ``finetune`` are sequence to sequence. The input
  starts with the sentinel of the language its tokens are written in;
  the target is plain token ids.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from reftrainer.errors import SchemaError

OBJECTIVES = ("mlm", "aer", "dae", "bt", "finetune")
ALIGNED_OBJECTIVES = frozenset({"mlm", "aer"})
SEQ2SEQ_OBJECTIVES = frozenset({"dae", "bt", "finetune"})

# Target value meaning "no loss at this position".
IGNORE_INDEX = -100


def _int_list(value, name: str, where: str, allow_ignore: bool) -> list[int]:
    if not isinstance(value, list):
        raise SchemaError(f"{where}: {name} must be a list")
    out: list[int] = []
    for item in value:
        if isinstance(item, bool) or not isinstance(item, int):
            raise SchemaError(f"{where}: {name} holds non-integer {item!r}")
        if item < 0 and not (allow_ignore and item == IGNORE_INDEX):
            raise SchemaError(f"{where}: {name} holds negative id {item}")
        out.append(item)
    return out


@dataclass
class Example:
    """One validated training record."""

    objective: str
    input_tokens: list[int]
    target: list[int]
    source_language: str
    target_language: str
    doc_id: str = ""
    epoch: int = 0

    @classmethod
    def parse(cls, obj, where: str = "record") -> "Example":
        if not isinstance(obj, dict):
            raise SchemaError(f"{where}: not a JSON object")
        try:
            objective = obj["objective"]
            source_language = obj["source_language"]
            target_language = obj["target_language"]
        except KeyError as exc:
            raise SchemaError(f"{where}: missing field {exc}") from exc
        if objective not in OBJECTIVES:
            raise SchemaError(f"{where}: unknown objective {objective!r}")
        for name, value in (
            ("source_language", source_language),
            ("target_language", target_language),
        ):
            if not isinstance(value, str) or not value:
                raise SchemaError(f"{where}: {name} must be a non-empty string")
        if "input_tokens" not in obj or "target" not in obj:
            raise SchemaError(f"{where}: missing input_tokens or target")
        aligned = objective in ALIGNED_OBJECTIVES
        input_tokens = _int_list(
            obj["input_tokens"], "input_tokens", where, allow_ignore=False
        )
        target = _int_list(obj["target"], "target", where, allow_ignore=aligned)
        if aligned and len(input_tokens) != len(target):
            raise SchemaError(
                f"{where}: {objective} lengths differ, "
                f"{len(input_tokens)} input vs {len(target)} target"
            )
        doc_id = obj.get("doc_id", "")
        if not isinstance(doc_id, str):
            raise SchemaError(f"{where}: doc_id must be a string")
        epoch = obj.get("epoch", 0)
        if isinstance(epoch, bool) or not isinstance(epoch, int):
            raise SchemaError(f"{where}: epoch must be an integer")
        return cls(
            objective=objective,
            input_tokens=input_tokens,
            target=target,
            source_language=source_language,
            target_language=target_language,
            doc_id=doc_id,
            epoch=epoch,
        )

    @property
    def is_aligned(self) -> bool:
        return self.objective in ALIGNED_OBJECTIVES


def read_stream(path: str | Path) -> list[Example]:
    """Read one JSONL stream, validating every record."""
    path = Path(path)
    out: list[Example] = []
    with path.open(encoding="utf-8") as fp:
        for lineno, line in enumerate(fp, 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            out.append(Example.parse(obj, where=f"{path}:{lineno}"))
    return out


def read_streams(paths: Iterable[str | Path]) -> list[Example]:
    out: list[Example] = []
    for path in paths:
        out.extend(read_stream(path))
    return out
