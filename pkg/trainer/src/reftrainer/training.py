"""Phase-ordered training over example streams.

Streams may mix objectives; training groups examples by objective and
runs the groups as phases in the canonical order masking, labeling,
denoising, back-translation, fine-tuning. The decoder is seeded from
the encoder once, right before the first sequence-to-sequence phase.

Every tenth example of a group is held out for a per-epoch validation
perplexity; groups too small to split train on everything. The model
kept at the end is the final phase's epoch with the lowest validation
perplexity (perplexities are only comparable within one objective, so
earlier phases never compete for the checkpoint).
"""

from __future__ import annotations

import argparse
import copy
import json
import math
import random
import sys
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import torch

from reftrainer.errors import SchemaError
from reftrainer.model import ToyModelConfig, ToySeq2Seq, make_optimizer
from reftrainer.schema import SEQ2SEQ_OBJECTIVES, Example, read_streams
from reftrainer.vocabfile import VocabFile

PHASE_ORDER = ("mlm", "aer", "dae", "bt", "finetune")
VAL_EVERY = 10

# Cap on the validation loss fed to exp(), keeping perplexity finite.
_PPL_CLAMP = 20.0


def smoothed(values: Sequence[float], window: int = 3) -> list[float]:
    """Trailing-window moving average; early points average what exists."""
    out = []
    for i in range(len(values)):
        chunk = values[max(0, i - window + 1) : i + 1]
        out.append(sum(chunk) / len(chunk))
    return out


def _batches(items: list, size: int) -> Iterator[list]:
    for start in range(0, len(items), size):
        yield items[start : start + size]


def select_checkpoint(entries: Iterable[tuple[int, float]]) -> int:
    """Epoch with the lowest validation perplexity; ties go earliest."""
    pairs = [(int(epoch), float(ppl)) for epoch, ppl in entries]
    if not pairs:
        raise SchemaError("no (epoch, perplexity) entries to select from")
    return min(pairs, key=lambda e: (e[1], e[0]))[0]


def train_toy(
    stream_paths: Iterable[str | Path],
    cfg: ToyModelConfig,
    vocab: VocabFile,
    seed: int = 0,
    checkpoint_path: str | Path | None = None,
) -> tuple[ToySeq2Seq, dict]:
    """Train a fresh model on the streams; returns (model, history).

    The history is JSON-serializable: phase order, per-epoch mean train
    loss and validation perplexity per objective, example counts, and
    which epoch of the final phase the returned (and saved) model comes
    from. Without a validation split the final state stands.
    """
    examples = read_streams(stream_paths)
    groups: dict[str, list[Example]] = {}
    for ex in examples:
        if ex.input_tokens:
            groups.setdefault(ex.objective, []).append(ex)
    if not groups:
        raise SchemaError("streams contain no usable examples")
    phases = [o for o in PHASE_ORDER if o in groups]

    torch.manual_seed(seed)
    model = ToySeq2Seq(cfg, vocab.size, vocab.specials)
    optimizer = make_optimizer(model)
    rng = random.Random(seed)

    history: dict = {
        "phases": phases,
        "train_loss": {},
        "val_perplexity": {},
        "example_counts": {o: len(g) for o, g in groups.items()},
    }
    decoder_seeded = False
    best_state: dict | None = None
    best: tuple[float, int] | None = None
    for objective in phases:
        pool = groups[objective]
        val = [ex for i, ex in enumerate(pool) if i % VAL_EVERY == VAL_EVERY - 1]
        train = [ex for i, ex in enumerate(pool) if i % VAL_EVERY != VAL_EVERY - 1]
        if not train:
            train, val = list(pool), []
        if objective in SEQ2SEQ_OBJECTIVES and not decoder_seeded:
            model.init_decoder_from_encoder()
            decoder_seeded = True
        last_phase = objective == phases[-1]
        losses: list[float] = []
        perplexities: list[float | None] = []
        for epoch in range(cfg.epochs):
            rng.shuffle(train)
            batch_losses = [
                model.train_step(batch, optimizer)
                for batch in _batches(train, cfg.batch_size)
            ]
            losses.append(sum(batch_losses) / len(batch_losses))
            val_loss = model.eval_loss(val) if val else None
            ppl = (
                math.exp(min(val_loss, _PPL_CLAMP)) if val_loss is not None else None
            )
            perplexities.append(ppl)
            if last_phase and ppl is not None and (best is None or ppl < best[0]):
                best = (ppl, epoch)
                best_state = copy.deepcopy(model.state_dict())
        history["train_loss"][objective] = losses
        history["val_perplexity"][objective] = perplexities

    if best_state is not None:
        model.load_state_dict(best_state)
    history["checkpoint"] = {
        "phase": phases[-1],
        "epoch": best[1] if best is not None else cfg.epochs - 1,
    }
    if checkpoint_path is not None:
        model.save(checkpoint_path)
    return model, history


def main(argv: Sequence[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="toy-train",
        description="Train the reference model on example streams.",
    )
    parser.add_argument(
        "--stream",
        action="append",
        required=True,
        metavar="JSONL",
        help="training stream; repeat the flag for more",
    )
    parser.add_argument("--vocab", required=True, metavar="VOCAB")
    parser.add_argument("--checkpoint", metavar="PT", help="write the model here")
    parser.add_argument(
        "--history", metavar="JSON", help="write the loss history here"
    )
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--epochs", type=int)
    parser.add_argument("--batch-size", type=int)
    parser.add_argument("--learning-rate", type=float)
    parser.add_argument("--hidden", type=int)
    parser.add_argument("--heads", type=int)
    parser.add_argument("--layers", type=int)
    parser.add_argument("--feedforward", type=int)
    parser.add_argument("--max-len", type=int)
    args = parser.parse_args(argv)

    cfg = ToyModelConfig()
    for name in (
        "epochs",
        "batch_size",
        "learning_rate",
        "hidden",
        "heads",
        "layers",
        "feedforward",
        "max_len",
    ):
        value = getattr(args, name)
        if value is not None:
            setattr(cfg, name, value)
    try:
        cfg.validate()
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    try:
        vocab = VocabFile.load(args.vocab)
        _, history = train_toy(
            args.stream, cfg, vocab, seed=args.seed, checkpoint_path=args.checkpoint
        )
    except (SchemaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    for objective in history["phases"]:
        losses = history["train_loss"][objective]
        perplexities = history["val_perplexity"][objective]
        for epoch, (loss, ppl) in enumerate(zip(losses, perplexities)):
            tail = f" val_ppl {ppl:.3f}" if ppl is not None else ""
            print(f"{objective} epoch {epoch}: loss {loss:.4f}{tail}")
    if args.history:
        Path(args.history).write_text(
            json.dumps(history, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    if args.checkpoint:
        print(f"checkpoint written to {args.checkpoint}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
