"""Binary feature-file format linking the embedding exporter to the classifier.

Layout: 4 magic bytes, a uint32 little-endian length, a UTF-8 JSON header
(version, dim, count, language, encoder, layer, created), then one record per
key: uint16 LE key length, UTF-8 key bytes, dim float32 LE values. Values are
stored and round-tripped as float32 bit-exactly.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import FeatureFormatError

MAGIC = b"CAFF"
FORMAT_VERSION = 1


def parameter_count(dim: int, n_classes: int = 3) -> int:
    """Parameters of an n-class linear model over dim features (weights + biases)."""
    return n_classes * (dim + 1)


@dataclass(frozen=True)
class FeatureHeader:
    dim: int
    language: str
    encoder: str
    layer: str = "last"
    created: str = ""
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"version": FORMAT_VERSION, "dim": self.dim, "language": self.language,
                "encoder": self.encoder, "layer": self.layer, "created": self.created,
                "extra": self.extra}


@dataclass
class FeatureRecord:
    """A fixed-dimension float32 vector for one keyed verb-in-context."""

    key: str
    language: str
    vector: np.ndarray

    def __post_init__(self):
        self.vector = np.asarray(self.vector, dtype=np.float32)

    def __eq__(self, other) -> bool:
        return (isinstance(other, FeatureRecord)
                and self.key == other.key
                and self.language == other.language
                and self.vector.shape == other.vector.shape
                and bool(np.all(self.vector.view(np.uint32) == other.vector.view(np.uint32))))


@dataclass
class FeatureFile:
    header: FeatureHeader
    records: list[FeatureRecord] = field(default_factory=list)

    def validate(self) -> None:
        seen: set[str] = set()
        for idx, rec in enumerate(self.records):
            if rec.key in seen:
                raise FeatureFormatError(f"duplicate key {rec.key!r}", record_index=idx)
            seen.add(rec.key)
            if rec.vector.shape != (self.header.dim,):
                raise FeatureFormatError(
                    f"key {rec.key!r} has dimension {rec.vector.shape}, header says "
                    f"{self.header.dim}", record_index=idx)
            if not np.all(np.isfinite(rec.vector)):
                raise FeatureFormatError(f"key {rec.key!r} has non-finite values",
                                         record_index=idx)

    def keys(self) -> list[str]:
        return [r.key for r in self.records]

    def as_mapping(self) -> dict[str, np.ndarray]:
        return {r.key: r.vector for r in self.records}

    def matrix(self) -> tuple[list[str], np.ndarray]:
        if not self.records:
            return [], np.zeros((0, self.header.dim), dtype=np.float32)
        return self.keys(), np.stack([r.vector for r in self.records])


def write_features(ffile: FeatureFile, path: str | Path) -> None:
    ffile.validate()
    header = dict(ffile.header.to_dict())
    header["count"] = len(ffile.records)
    header_bytes = json.dumps(header, ensure_ascii=False, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(header_bytes)))
        fh.write(header_bytes)
        for rec in ffile.records:
            key_bytes = rec.key.encode("utf-8")
            if len(key_bytes) > 0xFFFF:
                raise FeatureFormatError(f"key too long ({len(key_bytes)} bytes)")
            fh.write(struct.pack("<H", len(key_bytes)))
            fh.write(key_bytes)
            fh.write(rec.vector.astype("<f4", copy=False).tobytes())


def read_features(path: str | Path) -> FeatureFile:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise FeatureFormatError(f"{path}: bad magic {magic!r}")
        (header_len,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(header_len).decode("utf-8"))
        if header.get("version") != FORMAT_VERSION:
            raise FeatureFormatError(f"{path}: unsupported version {header.get('version')!r}")
        dim = int(header["dim"])
        count = int(header["count"])
        language = header["language"]
        records = []
        row_bytes = 4 * dim
        for idx in range(count):
            len_bytes = fh.read(2)
            if len(len_bytes) < 2:
                raise FeatureFormatError(
                    f"file ends after {idx} of {count} records", record_index=idx)
            (key_len,) = struct.unpack("<H", len_bytes)
            key = fh.read(key_len).decode("utf-8")
            raw = fh.read(row_bytes)
            if len(raw) < row_bytes:
                raise FeatureFormatError(f"truncated vector for key {key!r}", record_index=idx)
            vector = np.frombuffer(raw, dtype="<f4").copy()
            records.append(FeatureRecord(key=key, language=language, vector=vector))
        if fh.read(1):
            raise FeatureFormatError(
                f"trailing bytes after {count} records (header count wrong?)")
    ffile = FeatureFile(
        header=FeatureHeader(dim=dim, language=language, encoder=header["encoder"],
                             layer=header.get("layer", "last"),
                             created=header.get("created", ""),
                             extra=header.get("extra", {})),
        records=records)
    ffile.validate()
    return ffile


def write_sidecar_manifest(path: str | Path, items: Mapping[str, dict]) -> None:
    """JSON audit sidecar: key -> {"text": ..., "token_index": ...}."""
    Path(path).write_text(
        json.dumps(dict(sorted(items.items())), ensure_ascii=False, indent=2, sort_keys=True),
        encoding="utf-8")


def read_sidecar_manifest(path: str | Path) -> dict[str, dict]:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def merge_feature_files(files: Sequence[FeatureFile]) -> tuple[list[str], np.ndarray, str]:
    """Concatenate feature files (e.g. across languages) for augmented training.

    All files must share dim and encoder id; keys must stay unique. Returns
    (keys, matrix, encoder).
    """
    if not files:
        raise ValueError("no feature files given")
    dim = files[0].header.dim
    encoder = files[0].header.encoder
    keys: list[str] = []
    blocks = []
    seen: set[str] = set()
    for ffile in files:
        if ffile.header.dim != dim:
            raise FeatureFormatError(
                f"dimension mismatch: {ffile.header.dim} vs {dim}")
        if ffile.header.encoder != encoder:
            raise FeatureFormatError(
                f"refusing to mix encoders: {ffile.header.encoder!r} vs {encoder!r}")
        for rec in ffile.records:
            if rec.key in seen:
                raise FeatureFormatError(f"duplicate key across files: {rec.key!r}")
            seen.add(rec.key)
            keys.append(rec.key)
        blocks.append(ffile.matrix()[1])
    return keys, np.concatenate(blocks, axis=0), encoder


def decontextualize_embeddings(records: Iterable[FeatureRecord],
                               verb_of: Mapping[str, str]) -> list[FeatureRecord]:
    """Collapse context-level vectors to one record per verb lemma (elementwise mean).

    Every record key must appear in verb_of. Lemmas named in verb_of that end
    up with no records are skipped. Output is sorted by lemma.
    """
    records = list(records)
    languages = {r.language for r in records}
    if len(languages) > 1:
        raise ValueError(f"records mix languages {sorted(languages)}")
    grouped: dict[str, list[np.ndarray]] = {}
    for rec in records:
        if rec.key not in verb_of:
            raise KeyError(f"no verb lemma known for key {rec.key!r}")
        grouped.setdefault(verb_of[rec.key], []).append(rec.vector)
    language = languages.pop() if languages else "xx"
    out = []
    for lemma in sorted(set(verb_of.values())):
        if lemma not in grouped:
            continue  # lemma had no feature records; skip
        mean = np.mean(np.stack(grouped[lemma]).astype(np.float64), axis=0)
        out.append(FeatureRecord(key=lemma, language=language,
                                 vector=mean.astype(np.float32)))
    return out
