"""A two-dialect toy language for exercising the trainer end to end.

Both dialects share identifiers, numbers, and punctuation; they differ
only in their five keywords, mapped one to one by :data:`DICTIONARY`.
A sentence translates word for word, so a perfect translator is a copy
that substitutes keywords, and translation quality can be scored by
checking keyword positions.

Dialect names are ``toya`` and ``toyb``.
"""

from __future__ import annotations

import random

DIALECT_A = "toya"
DIALECT_B = "toyb"

# Keyword mapping, dialect A to dialect B.
DICTIONARY = {
    "let": "def",
    "add": "plus",
    "mul": "times",
    "show": "print",
    "end": "stop",
}
_REVERSE = {b: a for a, b in DICTIONARY.items()}

_IDENTS = ["ax", "bx", "cy", "dz", "ek", "fm", "gn", "hp"]
_NUMBERS = ["0", "1", "2", "3", "5", "7", "9", "11"]


def translate_word(word: str, source: str, target: str) -> str:
    if source == target:
        return word
    table = DICTIONARY if source == DIALECT_A else _REVERSE
    return table.get(word, word)


def translate_text(text: str, source: str = DIALECT_A, target: str = DIALECT_B) -> str:
    return " ".join(translate_word(w, source, target) for w in text.split())


def make_sentences(count: int, seed: int) -> list[str]:
    """Deterministic dialect-A sentences, single-space separated."""
    rng = random.Random(seed)
    out: list[str] = []
    for _ in range(count):
        shape = rng.randrange(4)
        if shape == 0:
            out.append(
                f"let {rng.choice(_IDENTS)} = add "
                f"{rng.choice(_NUMBERS)} {rng.choice(_NUMBERS)} ;"
            )
        elif shape == 1:
            out.append(
                f"let {rng.choice(_IDENTS)} = mul "
                f"{rng.choice(_IDENTS)} {rng.choice(_NUMBERS)} ;"
            )
        elif shape == 2:
            out.append(f"show {rng.choice(_IDENTS)} ;")
        else:
            out.append(f"show {rng.choice(_NUMBERS)} ; end")
    return out


def make_pairs(count: int, seed: int) -> list[tuple[str, str]]:
    """(dialect A, dialect B) sentence pairs."""
    return [(s, translate_text(s)) for s in make_sentences(count, seed)]


def keyword_accuracy(source_a: str, hypothesis_b: str) -> tuple[int, int]:
    """(correct, total) over keyword positions of one translated sentence.

    A keyword position counts as correct when the hypothesis has the
    mapped dialect-B word at the same word index.
    """
    src_words = source_a.split()
    hyp_words = hypothesis_b.split()
    correct = 0
    total = 0
    for i, word in enumerate(src_words):
        if word not in DICTIONARY:
            continue
        total += 1
        if i < len(hyp_words) and hyp_words[i] == DICTIONARY[word]:
            correct += 1
    return correct, total
