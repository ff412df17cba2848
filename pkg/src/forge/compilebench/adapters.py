"""Compiler adapters: declarative command templates per language.

An adapter names an executable, its flags (with a ``{source}`` placeholder
for the temp file), and a regex that lifts error lines out of the tool's
output. Configs ship as JSON package data so toolchains can be swapped
without code changes; ``FORGE_<NAME>_BIN`` overrides the executable.

The stub adapter runs no external tool at all: compile_source recognizes
it and applies the built-in static checks instead, so classification and
repair stay testable on machines with no compilers.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, replace
from importlib import resources

from forge.errors import FormatError


@dataclass(frozen=True)
class CompilerAdapter:
    name: str
    language: str
    command: tuple
    error_pattern: str
    timeout_s: float = 60.0
    source_suffix: str = ".cpp"
    prelude: str = ""
    builtin: bool = False


def _data_dir():
    return resources.files("forge") / "data" / "compilers"


def load_adapter(name: str) -> CompilerAdapter:
    """Load a shipped adapter config by name (cpp, cuda, nvcc, fortran)."""
    res = _data_dir() / f"{name}.json"
    if not res.is_file():
        raise FormatError(f"no compiler adapter named {name!r}")
    try:
        obj = json.loads(res.read_text(encoding="utf-8"))
        prelude_file = obj.pop("prelude_file", None)
        adapter = CompilerAdapter(
            name=obj["name"],
            language=obj["language"],
            command=tuple(obj["command"]),
            error_pattern=obj["error_pattern"],
            timeout_s=float(obj.get("timeout_s", 60.0)),
            source_suffix=obj.get("source_suffix", ".cpp"),
        )
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        raise FormatError(f"bad adapter config {name!r}: {exc}") from exc
    if prelude_file:
        prelude = (_data_dir() / prelude_file).read_text(encoding="utf-8")
        adapter = replace(adapter, prelude=prelude)
    override = os.environ.get(f"FORGE_{name.upper()}_BIN")
    if override:
        adapter = replace(adapter, command=(override,) + adapter.command[1:])
    return adapter


def stub_adapter(language: str) -> CompilerAdapter:
    """The built-in static checker posing as a compiler."""
    return CompilerAdapter(
        name="stub",
        language=language,
        command=("builtin",),
        error_pattern="",
        builtin=True,
    )
