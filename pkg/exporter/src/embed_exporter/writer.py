"""Writer for the downstream toolkit's binary feature format.

Layout: 4 magic bytes `CAFF`, uint32 little-endian header length, UTF-8 JSON
header (version, dim, count, language, encoder, layer, created, extra), then
per record: uint16 LE key length, UTF-8 key bytes, dim float32 LE values.
This module is the producing side of that contract and shares no code with
the consumer.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Sequence

import numpy as np

MAGIC = b"CAFF"
FORMAT_VERSION = 1


def write_feature_file(path: str | Path, *, dim: int, language: str,
                       encoder: str, layer: str,
                       vectors: Sequence[tuple[str, np.ndarray]],
                       extra: dict | None = None) -> None:
    """Write keyed float32 vectors. Keys must be unique, vectors finite and
    of length `dim`. `created` stays empty so identical inputs produce
    identical bytes."""
    seen: set[str] = set()
    for key, vector in vectors:
        if key in seen:
            raise ValueError(f"duplicate key {key!r}")
        seen.add(key)
        if len(key.encode("utf-8")) > 0xFFFF:
            raise ValueError(f"key too long: {key[:40]!r}...")
        vector = np.asarray(vector)
        if vector.shape != (dim,):
            raise ValueError(f"key {key!r}: vector shape {vector.shape}, "
                             f"expected ({dim},)")
        if not np.all(np.isfinite(vector)):
            raise ValueError(f"key {key!r}: non-finite values")

    header = {"version": FORMAT_VERSION, "dim": dim, "count": len(vectors),
              "language": language, "encoder": encoder, "layer": layer,
              "created": "", "extra": extra or {}}
    header_bytes = json.dumps(header, ensure_ascii=False,
                              sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(header_bytes)))
        fh.write(header_bytes)
        for key, vector in vectors:
            key_bytes = key.encode("utf-8")
            fh.write(struct.pack("<H", len(key_bytes)))
            fh.write(key_bytes)
            fh.write(np.asarray(vector, dtype="<f4").tobytes())


def write_skipped_manifest(path: str | Path, skipped: dict[str, str],
                           n_written: int) -> None:
    payload = {"written": n_written, "skipped": dict(sorted(skipped.items()))}
    Path(path).write_text(json.dumps(payload, ensure_ascii=False, indent=2,
                                     sort_keys=True), encoding="utf-8")
