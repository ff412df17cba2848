"""Reference trainer for codeforge translation streams.

This package consumes the engine strictly through its external surfaces:

* ``bpe-v1`` vocabulary files (:mod:`reftrainer.vocabfile`),
* training-example JSONL streams (:mod:`reftrainer.schema`),
* the line-JSON translator protocol (:mod:`reftrainer.server`).

It deliberately imports nothing from the engine package, so it doubles as
an executable check that those surfaces are complete enough to train
against.
"""

from reftrainer.errors import SchemaError
from reftrainer.model import ToyModelConfig, ToySeq2Seq
from reftrainer.schema import Example
from reftrainer.vocabfile import VocabFile

__all__ = [
    "Example",
    "SchemaError",
    "ToyModelConfig",
    "ToySeq2Seq",
    "VocabFile",
]

__version__ = "0.1.0"
