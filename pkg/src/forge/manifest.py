"""Reproducibility manifests written beside command outputs.

Every file a command writes gets a sibling ``<name>.manifest.json`` that
records the exact invocation, the seed, the config digest, and SHA-256
digests of all inputs and outputs. Two runs over the same inputs with the
same seed must agree on every output digest; the manifest is what makes
that claim checkable after the fact.

Input digests are taken when a file is registered, before the command can
touch it; output digests are taken at write time, after the command has
finished. Commands that only print to stdout leave no manifest because
there is nowhere to put one.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path


def sha256_file(path) -> str:
    """Digest a file, or a directory tree by relative path and content."""
    path = Path(path)
    digest = hashlib.sha256()
    if path.is_dir():
        for file in sorted(p for p in path.rglob("*") if p.is_file()):
            digest.update(file.relative_to(path).as_posix().encode("utf-8"))
            digest.update(b"\x00")
            digest.update(bytes.fromhex(sha256_file(file)))
        return digest.hexdigest()
    with open(path, "rb") as handle:
        for block in iter(lambda: handle.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


def manifest_path(output) -> Path:
    return Path(f"{output}.manifest.json")


@dataclass
class RunManifest:
    """Collects the files one command invocation touches."""

    tool: str
    command: list
    seed: int
    config_digest: str | None = None
    inputs: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)
    started: float = field(default_factory=time.monotonic)

    def read(self, path) -> str:
        """Register an input and digest it before it can change."""
        key = str(path)
        if key not in self.inputs:
            self.inputs[key] = sha256_file(path)
        return key

    def wrote(self, path) -> str:
        key = str(path)
        if key not in self.outputs:
            self.outputs.append(key)
        return key

    def to_json(self) -> dict:
        return {
            "tool": self.tool,
            "command": list(self.command),
            "seed": self.seed,
            "config": self.config_digest,
            "inputs": dict(self.inputs),
            "outputs": {path: sha256_file(path) for path in self.outputs},
            "wall_time_s": round(time.monotonic() - self.started, 6),
        }

    def write(self) -> None:
        """Write one manifest beside each registered output."""
        if not self.outputs:
            return
        payload = json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"
        for output in self.outputs:
            manifest_path(output).write_text(payload, encoding="utf-8")
