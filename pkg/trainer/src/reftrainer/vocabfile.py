"""Reader for versioned ``bpe-v1`` vocabulary files.

File layout: a header line ``bpe-v1 <size>``, one line per merge
(``left right``, both rendered token texts), a ``specials`` separator
line, then one special token per line.

Ids are assigned in three blocks: the specials in file order, the 256
single bytes, then merge products in file order. A product whose byte
string already names a token reuses that token's id instead of minting
a new one, so the header size can be smaller than ``specials + 256 +
merges``.

Token texts render printable ASCII (except space) as the character
itself and shift every other byte value ``b`` to ``chr(0x100 + b)``, so
merge lines always split on exactly one space.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Sequence

from reftrainer.errors import SchemaError

_BYTE_CHARS = [
    chr(b) if 0x21 <= b <= 0x7E else chr(0x100 + b) for b in range(256)
]


def bytes_to_text(bs: bytes) -> str:
    return "".join(_BYTE_CHARS[b] for b in bs)


class VocabFile:
    """An id table parsed from a ``bpe-v1`` file.

    The trainer never tokenizes text, so this class only answers id
    queries and decodes token streams back to text; there is no encoder.
    """

    def __init__(
        self,
        specials: Sequence[str],
        token_bytes: list[bytes | None],
        merges: list[tuple[int, int]],
    ):
        self.specials = list(specials)
        self._special_ids = {s: i for i, s in enumerate(self.specials)}
        self._token_bytes = token_bytes
        self.merges = merges

    @classmethod
    def load(cls, path: str | Path) -> "VocabFile":
        path = Path(path)
        lines = path.read_text(encoding="utf-8").splitlines()
        if not lines or not lines[0].startswith("bpe-v1 "):
            raise SchemaError(f"{path}: not a bpe-v1 vocabulary file")
        parts = lines[0].split()
        if len(parts) != 2 or not parts[1].isdigit():
            raise SchemaError(f"{path}: bad header {lines[0]!r}")
        declared = int(parts[1])
        try:
            sep = lines.index("specials")
        except ValueError as exc:
            raise SchemaError(f"{path}: missing specials table") from exc
        merge_lines = lines[1:sep]
        specials = lines[sep + 1 :]
        if len(set(specials)) != len(specials):
            raise SchemaError(f"{path}: duplicate special tokens")

        off = len(specials)
        token_bytes: list[bytes | None] = [None] * off
        token_bytes.extend(bytes([b]) for b in range(256))
        bytes_to_id = {bytes([b]): off + b for b in range(256)}
        # Later entries win on a text collision, matching the id order.
        text_to_id = {s: i for i, s in enumerate(specials)}
        for b in range(256):
            text_to_id[_BYTE_CHARS[b]] = off + b

        merges: list[tuple[int, int]] = []
        for lineno, line in enumerate(merge_lines, 2):
            halves = line.split(" ")
            if len(halves) != 2:
                raise SchemaError(f"{path}:{lineno}: bad merge line {line!r}")
            try:
                a, b = text_to_id[halves[0]], text_to_id[halves[1]]
            except KeyError as exc:
                raise SchemaError(
                    f"{path}:{lineno}: merge references unknown token {exc}"
                ) from exc
            ba, bb = token_bytes[a], token_bytes[b]
            if ba is None or bb is None:
                raise SchemaError(
                    f"{path}:{lineno}: merge references a special token"
                )
            joined = ba + bb
            prod = bytes_to_id.get(joined)
            if prod is None:
                prod = len(token_bytes)
                token_bytes.append(joined)
                bytes_to_id[joined] = prod
            text_to_id[bytes_to_text(joined)] = prod
            merges.append((a, b))

        if len(token_bytes) != declared:
            raise SchemaError(
                f"{path}: header declares {declared} entries, "
                f"found {len(token_bytes)}"
            )
        return cls(specials, token_bytes, merges)

    @property
    def size(self) -> int:
        return len(self._token_bytes)

    def special_id(self, text: str) -> int:
        try:
            return self._special_ids[text]
        except KeyError as exc:
            raise SchemaError(f"no special token {text!r}") from exc

    def lang_id(self, language: str) -> int:
        """Id of the language sentinel ``<language>``."""
        return self.special_id(f"<{language}>")

    def is_special(self, token_id: int) -> bool:
        return 0 <= token_id < len(self.specials)

    def token_text(self, token_id: int) -> str:
        if not 0 <= token_id < self.size:
            raise SchemaError(f"token id {token_id} out of range")
        bs = self._token_bytes[token_id]
        if bs is None:
            return self.specials[token_id]
        return bytes_to_text(bs)

    def decode(self, token_ids: Iterable[int]) -> str:
        """Concatenate token bytes; specials contribute nothing."""
        buf = bytearray()
        for tid in token_ids:
            if not 0 <= tid < self.size:
                raise SchemaError(f"token id {tid} out of range")
            bs = self._token_bytes[tid]
            if bs is not None:
                buf.extend(bs)
        return buf.decode("utf-8", errors="replace")
