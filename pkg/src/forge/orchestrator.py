"""Training-schedule orchestration over a pluggable translator port.

The schedule runs pretraining (whole-word masking, syntax-role labeling),
then alternating denoising and back-translation batches, then optional
fine-tuning on parallel pairs. The neural model stays behind
:class:`TranslatorPort`; in-process stubs cover testing, and
:class:`ExternalTranslator` adapts any child process speaking the
line-delimited JSON protocol documented on that class.

Sentinel convention: a training input starts with the ``<language>``
special of the language its tokens are written in. A back-translation
example therefore carries the sentinel of the intermediate translation,
and its target is always the original document, never model output.
"""

from __future__ import annotations

import json
import logging
import shlex
import subprocess
from abc import ABC, abstractmethod
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

import yaml

from forge.documents import AerLabeledDocument, TrainingExample
from forge.errors import (
    DataError,
    EmptyHistory,
    FormatError,
    TranslatorFailure,
    UsageError,
)
from forge.noise import NoiseConfig, NoiseEngine
from forge.rng import derive_rng
from forge.tokenizer import Vocabulary, segment_words

log = logging.getLogger("forge.orchestrator")

DEFAULT_BEAM_SIZE = 5
DEFAULT_BATCH_SIZE = 16
PHASE_KINDS = ("mlm", "aer", "dae_bt", "finetune")


class TranslatorPort(ABC):
    """What the orchestrator needs from a translation model.

    ``translate`` must be deterministic for a fixed model state, input,
    and beam size. ``train_step`` consumes one single-objective batch and
    returns its loss. ``init_decoder_from_encoder`` is a lifecycle hook
    fired once before the first translation-training phase; stubs keep it
    a no-op.
    """

    @abstractmethod
    def translate(
        self,
        tokens: Sequence[int],
        source_language: str,
        target_language: str,
        beam_size: int,
    ) -> list[int]: ...

    @abstractmethod
    def train_step(self, batch: Sequence[TrainingExample]) -> float: ...

    def init_decoder_from_encoder(self) -> None:
        return None


class StubIdentity(TranslatorPort):
    """Echoes its input; loss decays as 1/step so reports look alive."""

    def __init__(self):
        self._steps = 0

    def translate(self, tokens, source_language, target_language, beam_size):
        return list(tokens)

    def train_step(self, batch):
        self._steps += 1
        return 1.0 / self._steps


class StubDictionary(TranslatorPort):
    """Word-for-word table translator.

    Each (source, target) pair has its own table. A word is looked up at
    most once, never chained through its own replacement, and unmapped
    words pass through. Pairs without a table behave like identity.
    """

    def __init__(self, vocab: Vocabulary, tables: Mapping[tuple, Mapping[str, str]]):
        self.vocab = vocab
        self.tables = {pair: dict(words) for pair, words in tables.items()}
        self._steps = 0

    @classmethod
    def from_file(cls, path, vocab: Vocabulary) -> "StubDictionary":
        """Load ``{"src->tgt": {word: replacement, ...}, ...}`` from JSON."""
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise FormatError(f"{path}: cannot read dictionary: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: invalid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise FormatError(f"{path}: expected an object of src->tgt tables")
        tables = {}
        for key, words in raw.items():
            src, sep, tgt = str(key).partition("->")
            if not sep or not src or not tgt or not isinstance(words, dict):
                raise FormatError(f"{path}: bad language-pair key {key!r}")
            tables[(src, tgt)] = {str(a): str(b) for a, b in words.items()}
        return cls(vocab, tables)

    def translate(self, tokens, source_language, target_language, beam_size):
        table = self.tables.get((source_language, target_language))
        if not table:
            return list(tokens)
        text = self.vocab.decode(tokens)
        mapped = (table.get(word, word) for word in segment_words(text))
        return self.vocab.encode("".join(mapped))

    def train_step(self, batch):
        self._steps += 1
        return 1.0 / self._steps


# -- pretraining streams -----------------------------------------------------


def _round_robin(groups: Sequence[list]) -> Iterator:
    queues = [deque(g) for g in groups if g]
    while queues:
        still_full = []
        for q in queues:
            yield q.popleft()
            if q:
                still_full.append(q)
        queues = still_full


def _plain_doc(item):
    return item.doc if isinstance(item, AerLabeledDocument) else item


def emit_pretrain_stream(corpus, objective: str, epoch: int, engine: NoiseEngine, rng):
    """Yield MLM or AER examples, interleaving languages round-robin.

    MLM masks whole words and mixes every language into one stream. AER
    turns per-token syntax labels into targets; documents without a full
    label row are skipped with a warning.
    """
    if objective not in ("mlm", "aer"):
        raise UsageError(f"pretraining objective must be mlm or aer, got {objective!r}")
    by_language: dict[str, list] = {}
    for item in corpus:
        by_language.setdefault(_plain_doc(item).language, []).append(item)
    for item in _round_robin([by_language[l] for l in sorted(by_language)]):
        doc = _plain_doc(item)
        if objective == "mlm":
            example = engine.mlm(doc, rng)
            example.epoch = epoch
            yield example
            continue
        labels = item.labels if isinstance(item, AerLabeledDocument) else []
        if not labels or len(labels) != len(doc.tokens):
            log.warning(
                "%s: skipped for aer, %d labels for %d tokens",
                doc.doc_id, len(labels), len(doc.tokens),
            )
            continue
        yield TrainingExample(
            objective="aer",
            input_tokens=list(doc.tokens),
            target=list(labels),
            source_language=doc.language,
            target_language=doc.language,
            doc_id=doc.doc_id,
            epoch=epoch,
        )


def emit_finetune_examples(pairs, vocab: Vocabulary, epoch: int = 0):
    """Parallel-pair examples: sentinel plus source in, target out."""
    for src, tgt in pairs:
        yield TrainingExample(
            objective="finetune",
            input_tokens=[vocab.lang_id(src.language)] + list(src.tokens),
            target=list(tgt.tokens),
            source_language=src.language,
            target_language=tgt.language,
            doc_id=src.doc_id,
            epoch=epoch,
        )


# -- back translation ----------------------------------------------------------


def bt_round_trip(
    batch,
    translator: TranslatorPort,
    direction: tuple,
    beam_size: int,
    vocab: Vocabulary,
    epoch: int = 0,
) -> tuple[list[TrainingExample], int]:
    """Forward-translate each document and emit reverse training examples.

    The intermediate translation becomes the input behind its language
    sentinel; the original document is the target, so the model only ever
    trains toward real corpus text. Documents whose forward leg raises
    TranslatorFailure are skipped and counted.
    """
    source_language, target_language = direction
    sentinel = vocab.lang_id(target_language)
    examples: list[TrainingExample] = []
    failures = 0
    for doc in batch:
        try:
            intermediate = translator.translate(
                list(doc.tokens), source_language, target_language, beam_size
            )
        except TranslatorFailure as exc:
            failures += 1
            log.warning("%s: forward translation failed: %s", doc.doc_id, exc)
            continue
        examples.append(
            TrainingExample(
                objective="bt",
                input_tokens=[sentinel] + list(intermediate),
                target=list(doc.tokens),
                source_language=target_language,
                target_language=source_language,
                doc_id=doc.doc_id,
                epoch=epoch,
            )
        )
    return examples, failures


# -- epoch reports ---------------------------------------------------------------


@dataclass(frozen=True)
class BatchLog:
    """One train_step call: what went in and what it cost."""

    index: int
    objective: str
    source_language: str
    target_language: str
    size: int
    loss: float

    def to_json(self) -> dict:
        return {
            "index": self.index,
            "objective": self.objective,
            "source_language": self.source_language,
            "target_language": self.target_language,
            "size": self.size,
            "loss": self.loss,
        }


@dataclass(frozen=True)
class EpochReport:
    """Everything one epoch did, in schedule order."""

    phase: str
    epoch: int
    batches: tuple
    batch_counts: dict
    example_counts: dict
    mean_losses: dict
    translator_failures: int
    reconstruction_rate: float | None

    def to_json(self) -> dict:
        return {
            "phase": self.phase,
            "epoch": self.epoch,
            "batch_counts": dict(self.batch_counts),
            "example_counts": dict(self.example_counts),
            "mean_losses": dict(self.mean_losses),
            "translator_failures": self.translator_failures,
            "reconstruction_rate": self.reconstruction_rate,
            "batches": [b.to_json() for b in self.batches],
        }


def _chunks(seq: list, size: int) -> list[list]:
    return [seq[i : i + size] for i in range(0, len(seq), size)]


def _mean(values: list) -> float | None:
    return sum(values) / len(values) if values else None


def run_dae_bt_epoch(
    corpora: Mapping[str, list],
    translator: TranslatorPort,
    engine: NoiseEngine,
    epoch: int,
    rng,
    batch_size: int = DEFAULT_BATCH_SIZE,
    beam_size: int = DEFAULT_BEAM_SIZE,
) -> EpochReport:
    """Run one strictly alternating DAE/BT epoch over a language pair.

    Each document batch trains twice: once as a denoising batch in its own
    language, then as the back-translation batch for that language's
    direction. Directions therefore rotate with the language round-robin,
    and DAE and BT batch counts never differ by more than one.

    The report's reconstruction rate re-translates every intermediate back
    and counts exact matches against the original tokens.
    """
    if len(corpora) != 2:
        raise DataError(f"need exactly two languages, got {sorted(corpora)}")
    lang_a, lang_b = sorted(corpora)
    other = {lang_a: lang_b, lang_b: lang_a}
    chunk_stream = list(
        _round_robin(
            [
                [(lang, chunk) for chunk in _chunks(list(corpora[lang]), batch_size)]
                for lang in (lang_a, lang_b)
            ]
        )
    )

    batches: list[BatchLog] = []
    losses: dict[str, list] = {"dae": [], "bt": []}
    example_counts = {"dae": 0, "bt": 0}
    failures = 0
    recon_total = 0
    recon_matches = 0

    for lang, chunk in chunk_stream:
        dae_examples = [engine.dae(doc, epoch, rng) for doc in chunk]
        loss = translator.train_step(dae_examples)
        batches.append(BatchLog(len(batches), "dae", lang, lang, len(dae_examples), loss))
        losses["dae"].append(loss)
        example_counts["dae"] += len(dae_examples)

        direction = (lang, other[lang])
        bt_examples, failed = bt_round_trip(
            chunk, translator, direction, beam_size, engine.vocab, epoch=epoch
        )
        failures += failed
        if not bt_examples:
            continue
        loss = translator.train_step(bt_examples)
        batches.append(
            BatchLog(len(batches), "bt", direction[0], direction[1], len(bt_examples), loss)
        )
        losses["bt"].append(loss)
        example_counts["bt"] += len(bt_examples)
        for ex in bt_examples:
            recon_total += 1
            try:
                reverse = translator.translate(
                    list(ex.input_tokens[1:]),
                    ex.source_language,
                    ex.target_language,
                    beam_size,
                )
            except TranslatorFailure:
                continue
            if list(reverse) == list(ex.target):
                recon_matches += 1

    return EpochReport(
        phase="dae_bt",
        epoch=epoch,
        batches=tuple(batches),
        batch_counts={"dae": len(losses["dae"]), "bt": len(losses["bt"])},
        example_counts=example_counts,
        mean_losses={k: _mean(v) for k, v in losses.items()},
        translator_failures=failures,
        reconstruction_rate=100.0 * recon_matches / recon_total if recon_total else None,
    )


def _train_batches(
    stream: Iterable[TrainingExample],
    objective: str,
    translator: TranslatorPort,
    epoch: int,
    batch_size: int,
) -> EpochReport:
    examples = list(stream)
    batches: list[BatchLog] = []
    losses: list[float] = []
    for chunk in _chunks(examples, batch_size):
        loss = translator.train_step(chunk)
        languages = "+".join(sorted({ex.source_language for ex in chunk}))
        batches.append(BatchLog(len(batches), objective, languages, languages, len(chunk), loss))
        losses.append(loss)
    return EpochReport(
        phase=objective,
        epoch=epoch,
        batches=tuple(batches),
        batch_counts={objective: len(batches)},
        example_counts={objective: len(examples)},
        mean_losses={objective: _mean(losses)},
        translator_failures=0,
        reconstruction_rate=None,
    )


def select_checkpoint(history, criterion: str) -> int:
    """Epoch whose validation score is best; ties go to the earliest epoch."""
    entries = list(history)
    if not entries:
        raise EmptyHistory("no (epoch, score) entries to select from")
    if criterion == "min":
        return min(entries, key=lambda e: (e[1], e[0]))[0]
    if criterion == "max":
        return max(entries, key=lambda e: (e[1], -e[0]))[0]
    raise UsageError(f"criterion must be min or max, got {criterion!r}")


# -- schedule plans --------------------------------------------------------------


@dataclass(frozen=True)
class Phase:
    kind: str
    epochs: int


@dataclass(frozen=True)
class SchedulePlan:
    """A full training schedule for one language pair."""

    pair: tuple
    phases: tuple
    noise: NoiseConfig
    seed: int = 0
    beam_size: int = DEFAULT_BEAM_SIZE
    batch_size: int = DEFAULT_BATCH_SIZE


def load_plan(path) -> SchedulePlan:
    """Read a schedule plan from a YAML mapping (JSON is valid YAML)."""
    try:
        raw = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise FormatError(f"{path}: cannot read plan: {exc}") from exc
    except yaml.YAMLError as exc:
        raise FormatError(f"{path}: invalid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise FormatError(f"{path}: plan must be a mapping")
    unknown = set(raw) - {"pair", "phases", "noise", "seed", "beam_size", "batch_size"}
    if unknown:
        raise FormatError(f"{path}: unknown plan keys {sorted(unknown)}")

    pair = raw.get("pair")
    if not isinstance(pair, list) or len(pair) != 2:
        raise FormatError(f"{path}: pair must list exactly two languages")

    phases_raw = raw.get("phases")
    if not isinstance(phases_raw, list) or not phases_raw:
        raise FormatError(f"{path}: plan needs at least one phase")
    phases = []
    for entry in phases_raw:
        if not isinstance(entry, dict) or set(entry) - {"kind", "epochs"}:
            raise FormatError(f"{path}: each phase needs only kind and epochs")
        kind = str(entry.get("kind", "")).casefold().replace("+", "_")
        if kind not in PHASE_KINDS:
            raise FormatError(f"{path}: unknown phase kind {entry.get('kind')!r}")
        epochs = entry.get("epochs", 1)
        if not isinstance(epochs, int) or isinstance(epochs, bool) or epochs < 1:
            raise FormatError(f"{path}: phase epochs must be a positive integer")
        phases.append(Phase(kind, epochs))

    noise_raw = raw.get("noise") or {}
    if not isinstance(noise_raw, dict):
        raise FormatError(f"{path}: noise must be a mapping")
    try:
        noise = NoiseConfig(**noise_raw).validate()
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{path}: bad noise config: {exc}") from exc

    numbers = {
        "seed": (raw.get("seed", 0), 0),
        "beam_size": (raw.get("beam_size", DEFAULT_BEAM_SIZE), 1),
        "batch_size": (raw.get("batch_size", DEFAULT_BATCH_SIZE), 1),
    }
    for name, (value, floor) in numbers.items():
        if not isinstance(value, int) or isinstance(value, bool) or value < floor:
            raise FormatError(f"{path}: {name} must be an integer >= {floor}")

    return SchedulePlan(
        pair=(str(pair[0]), str(pair[1])),
        phases=tuple(phases),
        noise=noise,
        seed=numbers["seed"][0],
        beam_size=numbers["beam_size"][0],
        batch_size=numbers["batch_size"][0],
    )


def run_plan(
    plan: SchedulePlan,
    corpora: Mapping[str, list],
    translator: TranslatorPort,
    engine: NoiseEngine,
    labeled=None,
    pairs=None,
) -> list[EpochReport]:
    """Run every phase of the plan in order, one report per epoch.

    The engine supplies the vocabulary and language profiles; corruption
    ratios come from the plan. Epoch numbering restarts inside each phase
    so the noise schedule always climbs from its base ratios. The decoder
    initialization hook fires once, before the first phase that trains
    translation.
    """
    if set(corpora) != set(plan.pair):
        raise DataError(
            f"plan pair {sorted(plan.pair)} does not match corpora {sorted(corpora)}"
        )
    engine = NoiseEngine(engine.vocab, engine.profiles, plan.noise)
    all_docs = [doc for lang in sorted(corpora) for doc in corpora[lang]]
    reports: list[EpochReport] = []
    decoder_ready = False
    for phase_index, phase in enumerate(plan.phases):
        if phase.kind in ("dae_bt", "finetune") and not decoder_ready:
            translator.init_decoder_from_encoder()
            decoder_ready = True
        for epoch in range(phase.epochs):
            rng = derive_rng(plan.seed, "phase", phase_index, epoch)
            if phase.kind == "dae_bt":
                report = run_dae_bt_epoch(
                    corpora, translator, engine, epoch, rng,
                    batch_size=plan.batch_size, beam_size=plan.beam_size,
                )
            elif phase.kind == "mlm":
                stream = emit_pretrain_stream(all_docs, "mlm", epoch, engine, rng)
                report = _train_batches(stream, "mlm", translator, epoch, plan.batch_size)
            elif phase.kind == "aer":
                if labeled is None:
                    raise DataError("aer phase needs labeled documents")
                stream = emit_pretrain_stream(labeled, "aer", epoch, engine, rng)
                report = _train_batches(stream, "aer", translator, epoch, plan.batch_size)
            else:
                if pairs is None:
                    raise DataError("finetune phase needs parallel document pairs")
                stream = emit_finetune_examples(pairs, engine.vocab, epoch)
                report = _train_batches(stream, "finetune", translator, epoch, plan.batch_size)
            reports.append(report)
    return reports


# -- external translator processes ---------------------------------------------------


class ExternalTranslator(TranslatorPort):
    """Adapter speaking line-delimited JSON to a child translator process.

    Requests are one JSON object per line on the child's stdin, responses
    one JSON object per line on its stdout, in lockstep:

    - ``{"op": "translate", "tokens": [...], "source_language": L1,
      "target_language": L2, "beam_size": N}`` answers ``{"tokens": [...]}``
    - ``{"op": "train_step", "examples": [...]}`` answers ``{"loss": F}``,
      where each example uses the JSONL training-example fields
    - ``{"op": "init_decoder_from_encoder"}`` answers ``{"ok": true}``
    - ``{"op": "shutdown"}`` answers ``{"ok": true}`` and the child exits

    Any response containing ``"error"`` fails that call with
    TranslatorFailure, as do a dead child and malformed output.
    """

    def __init__(self, command: Sequence[str]):
        self.command = list(command)
        try:
            self._proc = subprocess.Popen(
                self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise TranslatorFailure(f"cannot start {self.command[0]!r}: {exc}") from exc

    def _call(self, request: dict) -> dict:
        proc = self._proc
        if proc.poll() is not None:
            raise TranslatorFailure(f"translator exited with code {proc.returncode}")
        try:
            proc.stdin.write(json.dumps(request) + "\n")
            proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise TranslatorFailure(f"translator pipe closed: {exc}") from exc
        line = proc.stdout.readline()
        if not line:
            raise TranslatorFailure("translator closed its output stream")
        try:
            response = json.loads(line)
        except json.JSONDecodeError as exc:
            raise TranslatorFailure(f"malformed translator response {line!r}") from exc
        if not isinstance(response, dict):
            raise TranslatorFailure(f"malformed translator response {line!r}")
        if "error" in response:
            raise TranslatorFailure(str(response["error"]))
        return response

    def translate(self, tokens, source_language, target_language, beam_size):
        response = self._call(
            {
                "op": "translate",
                "tokens": list(tokens),
                "source_language": source_language,
                "target_language": target_language,
                "beam_size": beam_size,
            }
        )
        try:
            return [int(t) for t in response["tokens"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise TranslatorFailure(f"translate response without tokens: {exc}") from exc

    def train_step(self, batch):
        response = self._call(
            {"op": "train_step", "examples": [ex.to_json() for ex in batch]}
        )
        try:
            return float(response["loss"])
        except (KeyError, TypeError, ValueError) as exc:
            raise TranslatorFailure(f"train_step response without loss: {exc}") from exc

    def init_decoder_from_encoder(self):
        self._call({"op": "init_decoder_from_encoder"})

    def close(self):
        proc = self._proc
        if proc.poll() is None:
            try:
                proc.stdin.write(json.dumps({"op": "shutdown"}) + "\n")
                proc.stdin.flush()
            except (BrokenPipeError, OSError):
                pass
        try:
            proc.stdin.close()
        except OSError:
            pass
        try:
            proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            proc.kill()
            proc.wait()

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()


def translator_from_spec(text: str, vocab: Vocabulary) -> TranslatorPort:
    """Build a translator from its command-line spelling.

    ``stub-identity`` | ``stub-dict:TABLE.json`` | ``external:COMMAND``
    """
    if text == "stub-identity":
        return StubIdentity()
    if text.startswith("stub-dict:"):
        path = text[len("stub-dict:") :]
        if not path:
            raise UsageError("stub-dict needs a table path, e.g. stub-dict:words.json")
        return StubDictionary.from_file(path, vocab)
    if text.startswith("external:"):
        command = shlex.split(text[len("external:") :])
        if not command:
            raise UsageError("external needs a command, e.g. external:python serve.py")
        return ExternalTranslator(command)
    raise UsageError(
        f"unknown translator {text!r}; use stub-identity, stub-dict:FILE, or external:CMD"
    )
