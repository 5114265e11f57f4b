"""Run manifests: every CLI subcommand writes one next to its outputs so a
result can be traced to the exact config and input bytes that produced it.
Timestamps are the only non-reproducible field.
"""

from __future__ import annotations

import hashlib
import json
from datetime import datetime, timezone
from pathlib import Path
from typing import Mapping, Sequence

from .config import PipelineConfig


def sha256_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def config_hash(config: PipelineConfig) -> str:
    return hashlib.sha256(config.to_canonical_json().encode("utf-8")).hexdigest()


def write_manifest(path: str | Path, command: str, config: PipelineConfig,
                   inputs: Sequence[str | Path] = (),
                   outputs: Sequence[str | Path] = (),
                   extra: Mapping[str, object] | None = None) -> dict:
    manifest = {
        "command": command,
        "config_hash": config_hash(config),
        "seed": config.seed,
        "inputs": {str(p): sha256_file(p) for p in sorted(map(str, inputs))},
        "outputs": sorted(str(p) for p in outputs),
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    if extra:
        manifest["extra"] = dict(extra)
    Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True),
                          encoding="utf-8")
    return manifest


def manifest_path(output: str | Path) -> Path:
    out = Path(output)
    return out.with_name(out.name + ".manifest.json")
