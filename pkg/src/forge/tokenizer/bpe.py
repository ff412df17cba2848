"""Byte-level BPE trained from scratch.

Every byte is in the base alphabet, so any file tokenizes without an unknown
token and ``decode(encode(s)) == s`` holds for arbitrary text. Merges never
cross word boundaries, where a word is a maximal identifier run
([A-Za-z0-9_]+), a single punctuation character, or a whitespace run.

Training is fully deterministic: pair counts break ties by the
lexicographically smallest (left bytes, right bytes) pair.
"""

from __future__ import annotations

import re
from collections import Counter
from pathlib import Path
from typing import Iterable, Sequence

from forge.documents import TokenizedDocument
from forge.errors import FormatError, UnknownId, VocabTooSmall
from forge.tokenizer import kernels as _default_kernels

_WORD_RE = re.compile(r"\s+|[A-Za-z0-9_]+|[^A-Za-z0-9_\s]")

# Text rendering of raw bytes for the serialized vocab: printable ASCII
# (except space) stands for itself, everything else is shifted into a
# private range so merge lines never contain spaces or control characters.
_BYTE_CHARS = [
    chr(b) if 0x21 <= b <= 0x7E else chr(0x100 + b) for b in range(256)
]
_CHAR_BYTES = {c: b for b, c in enumerate(_BYTE_CHARS)}

_WS_BYTES = frozenset(b" \t\n\r\x0b\x0c")

DEFAULT_VOCAB_SIZE = 32000
DEFAULT_SPECIALS = ["<pad>", "<mask>", "<bos>", "<eos>"]

_ENCODE_CACHE_LIMIT = 1 << 16


def segment_words(text: str) -> list[str]:
    """Split text into words; concatenating the result restores the text."""
    return _WORD_RE.findall(text)


def bytes_to_text(bs: bytes) -> str:
    return "".join(_BYTE_CHARS[b] for b in bs)


def text_to_bytes(text: str) -> bytes:
    try:
        return bytes(_CHAR_BYTES[c] for c in text)
    except KeyError as exc:
        raise FormatError(f"invalid vocab token text {text!r}") from exc


class Vocabulary:
    """A trained BPE vocabulary: specials, byte alphabet, merge products."""

    def __init__(self, specials: Sequence[str], kernels=None):
        self.specials = list(specials)
        self._kernels = kernels or _default_kernels
        off = len(self.specials)
        self._special_ids = {s: i for i, s in enumerate(self.specials)}
        if len(self._special_ids) != off:
            raise FormatError("duplicate special tokens")
        # id -> raw bytes; specials carry no bytes.
        self._sym_bytes: list[bytes | None] = [None] * off
        self._sym_bytes.extend(bytes([b]) for b in range(256))
        self._bytes_to_id = {bytes([b]): off + b for b in range(256)}
        self.merges: list[tuple[int, int]] = []
        self._ranks: dict[tuple[int, int], int] = {}
        self._products: dict[tuple[int, int], int] = {}
        self._encode_cache: dict[str, list[int]] = {}
        self._ws_cache: frozenset[int] | None = None

    # -- construction ---------------------------------------------------

    def _add_merge(self, pair: tuple[int, int]) -> int:
        """Record a merge; returns the product id (reused if the byte
        string already names a token, keeping token texts unique)."""
        a, b = pair
        joined = self._sym_bytes[a] + self._sym_bytes[b]
        prod = self._bytes_to_id.get(joined)
        if prod is None:
            prod = len(self._sym_bytes)
            self._sym_bytes.append(joined)
            self._bytes_to_id[joined] = prod
            if bytes_to_text(joined) in self._special_ids:
                raise FormatError(
                    f"merge product collides with special token {joined!r}"
                )
        self._ranks[pair] = len(self.merges)
        self._products[pair] = prod
        self.merges.append(pair)
        self._ws_cache = None
        return prod

    # -- basic queries ----------------------------------------------------

    @property
    def size(self) -> int:
        return len(self._sym_bytes)

    def token_text(self, token_id: int) -> str:
        if not 0 <= token_id < self.size:
            raise UnknownId(f"token id {token_id} out of range")
        bs = self._sym_bytes[token_id]
        if bs is None:
            return self.specials[token_id]
        return bytes_to_text(bs)

    def special_id(self, text: str) -> int:
        try:
            return self._special_ids[text]
        except KeyError as exc:
            raise UnknownId(f"no special token {text!r}") from exc

    def lang_id(self, language: str) -> int:
        """Id of the language sentinel ``<language>``."""
        return self.special_id(f"<{language}>")

    def is_special(self, token_id: int) -> bool:
        return 0 <= token_id < len(self.specials)

    def whitespace_ids(self) -> frozenset[int]:
        """Ids whose byte content is entirely whitespace (memoized)."""
        if self._ws_cache is None:
            out = set()
            for tid, bs in enumerate(self._sym_bytes):
                if bs is not None and bs and all(b in _WS_BYTES for b in bs):
                    out.add(tid)
            self._ws_cache = frozenset(out)
        return self._ws_cache

    # -- encode / decode --------------------------------------------------

    def _encode_word(self, word: str) -> list[int]:
        cached = self._encode_cache.get(word)
        if cached is not None:
            return cached
        off = len(self.specials)
        syms = [off + b for b in word.encode("utf-8")]
        ids = self._kernels.encode_greedy(syms, self._ranks, self._products)
        if len(self._encode_cache) < _ENCODE_CACHE_LIMIT:
            self._encode_cache[word] = ids
        return ids

    def encode(self, text: str) -> list[int]:
        out: list[int] = []
        for word in segment_words(text):
            out.extend(self._encode_word(word))
        return out

    def tokenize(self, text: str, language: str, doc_id: str) -> TokenizedDocument:
        tokens: list[int] = []
        spans: list[tuple[int, int]] = []
        for word in segment_words(text):
            ids = self._encode_word(word)
            spans.append((len(tokens), len(tokens) + len(ids)))
            tokens.extend(ids)
        return TokenizedDocument(
            tokens=tokens, word_spans=spans, language=language, doc_id=doc_id
        )

    def decode(self, token_ids: Iterable[int]) -> str:
        buf = bytearray()
        for tid in token_ids:
            if not 0 <= tid < self.size:
                raise UnknownId(f"token id {tid} out of range")
            bs = self._sym_bytes[tid]
            if bs is not None:
                buf.extend(bs)
        return buf.decode("utf-8", errors="replace")


def train_bpe(
    corpus: Iterable[str],
    vocab_size: int = DEFAULT_VOCAB_SIZE,
    specials: Sequence[str] = (),
    _kernels=None,
) -> Vocabulary:
    """Train a vocabulary of (at most) ``vocab_size`` entries.

    The size is exact whenever the corpus supplies enough mergeable pairs;
    training stops early on tiny corpora. Identical corpus and arguments
    always yield an identical vocabulary.
    """
    kern = _kernels or _default_kernels
    floor = 256 + len(specials)
    if vocab_size < floor:
        raise VocabTooSmall(
            f"vocab_size {vocab_size} cannot hold 256 bytes + "
            f"{len(specials)} specials"
        )
    vocab = Vocabulary(specials, kernels=kern)
    off = len(vocab.specials)

    word_counts: Counter[str] = Counter()
    for doc in corpus:
        word_counts.update(segment_words(doc))
    items = sorted(word_counts.items())
    words = [[off + b for b in w.encode("utf-8")] for w, _ in items]
    counts = [c for _, c in items]

    pair_counts: dict[tuple[int, int], int] = kern.count_pairs(words, counts)
    pair_locs: dict[tuple[int, int], set[int]] = {}
    for wi, word in enumerate(words):
        for i in range(len(word) - 1):
            pair_locs.setdefault((word[i], word[i + 1]), set()).add(wi)

    sym_bytes = vocab._sym_bytes
    merges_since_prune = 0
    while vocab.size < vocab_size:
        # Highest count wins; ties break on the pair's byte strings, then
        # on the id pair itself, so the pick is independent of dict order.
        best = None
        best_c = 0
        best_bytes = None
        for pair, c in pair_counts.items():
            if c <= 0 or c < best_c:
                continue
            if c > best_c:
                best = pair
                best_c = c
                best_bytes = None
                continue
            if best_bytes is None:
                best_bytes = (sym_bytes[best[0]], sym_bytes[best[1]], best)
            candidate = (sym_bytes[pair[0]], sym_bytes[pair[1]], pair)
            if candidate < best_bytes:
                best = pair
                best_bytes = candidate
        if best is None:
            break
        new_id = vocab._add_merge(best)
        for wi in sorted(pair_locs.get(best, ())):
            old = words[wi]
            merged = kern.merge_word(old, best[0], best[1], new_id)
            if len(merged) == len(old):
                continue
            c = counts[wi]
            for i in range(len(old) - 1):
                pair_counts[(old[i], old[i + 1])] -= c
            for i in range(len(merged) - 1):
                p = (merged[i], merged[i + 1])
                pair_counts[p] = pair_counts.get(p, 0) + c
                pair_locs.setdefault(p, set()).add(wi)
            words[wi] = merged
        merges_since_prune += 1
        if merges_since_prune >= 64:
            pair_counts = {p: c for p, c in pair_counts.items() if c > 0}
            merges_since_prune = 0
    return vocab


def save_vocab(vocab: Vocabulary, path: str | Path) -> None:
    """Write the versioned text form: header, merge lines, special table."""
    lines = [f"bpe-v1 {vocab.size}"]
    for a, b in vocab.merges:
        lines.append(f"{vocab.token_text(a)} {vocab.token_text(b)}")
    lines.append("specials")
    lines.extend(vocab.specials)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_vocab(path: str | Path) -> Vocabulary:
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines or not lines[0].startswith("bpe-v1 "):
        raise FormatError(f"{path}: not a bpe-v1 vocabulary file")
    try:
        declared = int(lines[0].split()[1])
    except (IndexError, ValueError) as exc:
        raise FormatError(f"{path}: bad header {lines[0]!r}") from exc

    try:
        sep = lines.index("specials")
    except ValueError as exc:
        raise FormatError(f"{path}: missing specials table") from exc
    merge_lines = lines[1:sep]
    specials = lines[sep + 1 :]

    vocab = Vocabulary(specials)
    text_ids = {vocab.token_text(i): i for i in range(vocab.size)}
    for lineno, line in enumerate(merge_lines, 2):
        parts = line.split(" ")
        if len(parts) != 2:
            raise FormatError(f"{path}:{lineno}: bad merge line {line!r}")
        try:
            a, b = text_ids[parts[0]], text_ids[parts[1]]
        except KeyError as exc:
            raise FormatError(
                f"{path}:{lineno}: merge references unknown token {exc}"
            ) from exc
        prod = vocab._add_merge((a, b))
        text_ids[vocab.token_text(prod)] = prod
    if vocab.size != declared:
        raise FormatError(
            f"{path}: header declares {declared} entries, found {vocab.size}"
        )
    return vocab
