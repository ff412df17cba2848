"""Line-JSON translator server.

Speaks the child side of the translator protocol: one JSON request per
stdin line, one JSON response per stdout line, in lockstep.

Requests and responses:

* ``{"op": "translate", "tokens": [...], "source_language": L1,
  "target_language": L2, "beam_size": N}`` answers ``{"tokens": [...]}``
* ``{"op": "train_step", "examples": [...]}`` answers ``{"loss": F}``,
  each example carrying the JSONL training-example fields
* ``{"op": "init_decoder_from_encoder"}`` answers ``{"ok": true}``
* ``{"op": "shutdown"}`` answers ``{"ok": true}`` and the process exits

A request that cannot be served answers ``{"error": "..."}`` on its own
line and the server keeps running, so one bad request never kills the
session.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence, TextIO

import torch

from reftrainer.errors import SchemaError
from reftrainer.model import ToyModelConfig, ToySeq2Seq, make_optimizer
from reftrainer.schema import Example
from reftrainer.vocabfile import VocabFile


def _handle(model: ToySeq2Seq, optimizer, request: dict) -> dict:
    op = request.get("op")
    if op == "translate":
        try:
            tokens = request["tokens"]
            source = request["source_language"]
            target = request["target_language"]
            beam_size = int(request.get("beam_size", 1))
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"bad translate request: {exc}") from exc
        out = model.greedy_translate(tokens, source, target, beam_size)
        return {"tokens": out}
    if op == "train_step":
        raw = request.get("examples")
        if not isinstance(raw, list) or not raw:
            raise SchemaError("train_step needs a non-empty examples list")
        examples = [
            Example.parse(obj, where=f"examples[{i}]") for i, obj in enumerate(raw)
        ]
        return {"loss": model.train_step(examples, optimizer)}
    if op == "init_decoder_from_encoder":
        model.init_decoder_from_encoder()
        return {"ok": True}
    if op == "shutdown":
        return {"ok": True}
    raise SchemaError(f"unknown op {op!r}")


def serve(
    model: ToySeq2Seq,
    optimizer,
    stdin: TextIO | None = None,
    stdout: TextIO | None = None,
) -> None:
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        stop = False
        try:
            request = json.loads(line)
            if not isinstance(request, dict):
                raise SchemaError("request must be a JSON object")
            response = _handle(model, optimizer, request)
            stop = request.get("op") == "shutdown"
        except (SchemaError, json.JSONDecodeError) as exc:
            response = {"error": str(exc)}
        stdout.write(json.dumps(response) + "\n")
        stdout.flush()
        if stop:
            return


def main(argv: Sequence[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="toy-translator",
        description="Serve the reference model over line-delimited JSON.",
    )
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--checkpoint", metavar="PT", help="load a trained model")
    source.add_argument(
        "--vocab", metavar="VOCAB", help="start a freshly initialized model"
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

    try:
        if args.checkpoint:
            model = ToySeq2Seq.load(args.checkpoint)
        else:
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
            cfg.validate()
            vocab = VocabFile.load(args.vocab)
            torch.manual_seed(args.seed)
            model = ToySeq2Seq(cfg, vocab.size, vocab.specials)
    except (SchemaError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    serve(model, make_optimizer(model))
    return 0


if __name__ == "__main__":
    sys.exit(main())
