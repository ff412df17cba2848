"""Per-language token statistics used by corruption and corpus filtering.

A profile pairs a keyword list with a frequency table of word strings seen
in a tokenized corpus. Whitespace words carry no signal and are not counted.
"""

from __future__ import annotations

import bisect
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable

import numpy as np

from forge.documents import TokenizedDocument
from forge.errors import FormatError
from forge.tokenizer import Vocabulary


@dataclass
class LanguageProfile:
    language: str
    keywords: set[str]
    freq: Counter[str] = field(default_factory=Counter)
    total: int = 0

    # Lazily built cumulative table for sampling.
    _cum_words: list[str] = field(default_factory=list, repr=False)
    _cum_counts: list[int] = field(default_factory=list, repr=False)

    def _cumulative(self) -> tuple[list[str], list[int]]:
        if not self._cum_words and self.freq:
            running = 0
            words, cums = [], []
            for w, c in sorted(self.freq.items()):
                running += c
                words.append(w)
                cums.append(running)
            self._cum_words, self._cum_counts = words, cums
        return self._cum_words, self._cum_counts


def build_profile(
    corpus: Iterable[TokenizedDocument],
    language: str,
    keywords: set[str],
    vocab: Vocabulary,
) -> LanguageProfile:
    """Count surface word strings over the corpus's word spans."""
    freq: Counter[str] = Counter()
    for doc in corpus:
        for s, e in doc.word_spans:
            word = vocab.decode(doc.tokens[s:e])
            if word.strip():
                freq[word] += 1
    return LanguageProfile(language, set(keywords), freq, sum(freq.values()))


def merge_profiles(a: LanguageProfile, b: LanguageProfile) -> LanguageProfile:
    if a.language != b.language:
        raise ValueError(f"cannot merge {a.language} with {b.language}")
    freq = a.freq + b.freq
    return LanguageProfile(
        a.language, a.keywords | b.keywords, freq, sum(freq.values())
    )


def sample_word(profile: LanguageProfile, rng: np.random.Generator) -> str:
    """Draw one word with probability freq/total."""
    words, cums = profile._cumulative()
    if not words:
        raise ValueError(f"profile for {profile.language} is empty")
    pick = int(rng.integers(0, cums[-1]))
    return words[bisect.bisect_right(cums, pick)]


def save_profile(profile: LanguageProfile, path: str | Path) -> None:
    lines = [f"lang {profile.language}"]
    for kw in sorted(profile.keywords):
        lines.append(f"keyword {kw}")
    for word, count in sorted(profile.freq.items()):
        lines.append(f"freq {word} {count}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_profile(path: str | Path) -> LanguageProfile:
    language = None
    keywords: set[str] = set()
    freq: Counter[str] = Counter()
    for lineno, line in enumerate(
        Path(path).read_text(encoding="utf-8").splitlines(), 1
    ):
        if not line.strip():
            continue
        parts = line.split(" ")
        if parts[0] == "lang" and len(parts) == 2:
            language = parts[1]
        elif parts[0] == "keyword" and len(parts) == 2:
            keywords.add(parts[1])
        elif parts[0] == "freq" and len(parts) == 3:
            try:
                freq[parts[1]] += int(parts[2])
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: bad count") from exc
        else:
            raise FormatError(f"{path}:{lineno}: unrecognized record {line!r}")
    if language is None:
        raise FormatError(f"{path}: missing lang record")
    return LanguageProfile(language, keywords, freq, sum(freq.values()))


def load_keywords(language: str) -> set[str]:
    """Keyword list shipped with the package for cpp, cuda, or fortran."""
    res = resources.files("forge") / "data" / "keywords" / f"{language}.txt"
    if not res.is_file():
        raise FormatError(f"no keyword list for language {language!r}")
    words = set()
    for line in res.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.add(line)
    return words
