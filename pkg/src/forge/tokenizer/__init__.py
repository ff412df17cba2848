"""Byte-level BPE tokenizer with whole-word span tracking."""

from forge.tokenizer.bpe import (
    DEFAULT_SPECIALS,
    DEFAULT_VOCAB_SIZE,
    Vocabulary,
    load_vocab,
    save_vocab,
    segment_words,
    train_bpe,
)
from forge.tokenizer.kernels import COMPILED

__all__ = [
    "COMPILED",
    "DEFAULT_SPECIALS",
    "DEFAULT_VOCAB_SIZE",
    "Vocabulary",
    "load_vocab",
    "save_vocab",
    "segment_words",
    "train_bpe",
]
