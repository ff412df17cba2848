"""Language dispatch for the syntax parsers."""

from __future__ import annotations

from forge.errors import GrammarUnavailable
from forge.syntax.cparser import parse_c_family
from forge.syntax.fortran import parse_fortran
from forge.syntax.tree import Node

_LANGUAGES = ("c", "cpp", "cuda", "fortran")


def supported_languages() -> tuple[str, ...]:
    return _LANGUAGES


def parse_source(source: str, language: str) -> Node:
    if language in ("c", "cpp"):
        return parse_c_family(source, cuda=False)
    if language == "cuda":
        return parse_c_family(source, cuda=True)
    if language == "fortran":
        return parse_fortran(source)
    raise GrammarUnavailable(f"no parser for language {language!r}")


def is_parse_failure(root: Node) -> bool:
    """True when nothing parsed: no structural node outside ERROR regions."""
    for child in root.children:
        if child.kind not in ("ERROR", "comment") and child.children:
            return False
    return True
