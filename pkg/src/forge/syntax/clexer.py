"""Lexer for the C family (C, C++, CUDA)."""

from __future__ import annotations

import re
from typing import NamedTuple


class Tok(NamedTuple):
    kind: str  # ident | number | string | char | comment | preproc | punct
    start: int
    end: int
    text: str


_WS = re.compile(r"\s+")
_COMMENT = re.compile(r"//[^\n]*|/\*.*?(?:\*/|\Z)", re.S)
_PREPROC = re.compile(r"#[^\n]*(?:\\\n[^\n]*)*")
_STRING = re.compile(r'"(?:\\.|[^"\\\n])*(?:"|(?=\n)|\Z)')
_CHAR = re.compile(r"'(?:\\.|[^'\\\n])*(?:'|(?=\n)|\Z)")
# pp-number shape: covers ints, floats, hex, exponents, suffixes, separators.
_NUMBER = re.compile(r"\.?\d(?:[eEpP][+-]|[0-9a-zA-Z_.'])*")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")

_PUNCT3 = ("<<=", ">>=", "...", "->*")
_PUNCT2 = (
    "::", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=",
    "&&", "||", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "##",
)


def lex(source: str, cuda_launch: bool = False) -> list[Tok]:
    """Tokenize; every character lands in exactly one token or whitespace."""
    toks: list[Tok] = []
    i = 0
    n = len(source)
    line_start = True
    while i < n:
        m = _WS.match(source, i)
        if m:
            if "\n" in m.group():
                line_start = True
            i = m.end()
            continue
        ch = source[i]
        if ch == "/" and i + 1 < n and source[i + 1] in "/*":
            m = _COMMENT.match(source, i)
            toks.append(Tok("comment", i, m.end(), m.group()))
            i = m.end()
            continue
        if ch == "#" and line_start:
            m = _PREPROC.match(source, i)
            toks.append(Tok("preproc", i, m.end(), m.group()))
            i = m.end()
            line_start = True
            continue
        line_start = False
        if ch == '"':
            m = _STRING.match(source, i)
            toks.append(Tok("string", i, m.end(), m.group()))
            i = m.end()
            continue
        if ch == "'":
            m = _CHAR.match(source, i)
            toks.append(Tok("char", i, m.end(), m.group()))
            i = m.end()
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and source[i + 1].isdigit()):
            m = _NUMBER.match(source, i)
            toks.append(Tok("number", i, m.end(), m.group()))
            i = m.end()
            continue
        if ch.isalpha() or ch == "_":
            m = _IDENT.match(source, i)
            toks.append(Tok("ident", i, m.end(), m.group()))
            i = m.end()
            continue
        if cuda_launch and source.startswith("<<<", i):
            toks.append(Tok("punct", i, i + 3, "<<<"))
            i += 3
            continue
        if cuda_launch and source.startswith(">>>", i):
            toks.append(Tok("punct", i, i + 3, ">>>"))
            i += 3
            continue
        three = source[i : i + 3]
        if three in _PUNCT3:
            toks.append(Tok("punct", i, i + 3, three))
            i += 3
            continue
        two = source[i : i + 2]
        if two in _PUNCT2:
            toks.append(Tok("punct", i, i + 2, two))
            i += 2
            continue
        toks.append(Tok("punct", i, i + 1, ch))
        i += 1
    return toks
