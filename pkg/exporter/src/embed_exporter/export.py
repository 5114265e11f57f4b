"""Batched encoder inference and subword mean pooling.

Sentences are pre-tokenized on whitespace; the tokenizer's word alignment
maps each subword piece back to its whitespace token. An item's vector is
the mean of its verb's piece vectors at the selected hidden layer. Items
whose verb retains no pieces (for example truncated away) are skipped and
reported, not fatal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from transformers import AutoModel, AutoTokenizer

from .requests import ExportRequest, RequestItem
from .writer import write_feature_file, write_skipped_manifest


class ExportError(RuntimeError):
    pass


@dataclass
class ExportResult:
    path: Path
    manifest_path: Path
    dim: int
    written: list[str] = field(default_factory=list)
    skipped: dict[str, str] = field(default_factory=dict)


def layer_name(layer: int) -> str:
    return "last" if layer == -1 else f"hidden:{layer}"


def skipped_manifest_path(out_path: str | Path) -> Path:
    out = Path(out_path)
    return out.with_name(out.name + ".skipped.json")


def _load_encoder(spec: str):
    try:
        tokenizer = AutoTokenizer.from_pretrained(spec)
        model = AutoModel.from_pretrained(spec)
    except (OSError, ValueError) as exc:
        raise ExportError(f"cannot load encoder {spec!r}: {exc}") from exc
    if not tokenizer.is_fast:
        raise ExportError(f"encoder {spec!r} has no fast tokenizer; "
                          "word alignment needs one")
    model.eval()
    return tokenizer, model


def _batches(items: list[RequestItem], size: int):
    for start in range(0, len(items), size):
        yield items[start:start + size]


def export(request: ExportRequest, out_path: str | Path) -> ExportResult:
    """Run inference and write the feature file plus the skipped-item manifest.

    Output order follows request order. Deterministic for fixed encoder
    weights, items, layer, and batch size.
    """
    tokenizer, model = _load_encoder(request.encoder)
    n_layers = model.config.num_hidden_layers + 1  # embeddings included
    if not -n_layers <= request.layer < n_layers:
        raise ExportError(f"layer {request.layer} outside the encoder's "
                          f"{n_layers} hidden states")

    vectors: list[tuple[str, np.ndarray]] = []
    skipped: dict[str, str] = {}
    with torch.inference_mode():
        for batch in _batches(request.items, request.batch_size):
            encoded = tokenizer([item.words() for item in batch],
                                is_split_into_words=True, padding=True,
                                truncation=True, return_tensors="pt")
            hidden = model(**encoded,
                           output_hidden_states=True).hidden_states[request.layer]
            for row, item in enumerate(batch):
                pieces = [pos for pos, word in enumerate(encoded.word_ids(row))
                          if word == item.verb_index]
                if not pieces:
                    skipped[item.key] = (f"verb token {item.verb_index} has no "
                                         "subword pieces after alignment")
                    continue
                pooled = hidden[row, pieces].mean(dim=0)
                vectors.append((item.key,
                                pooled.numpy().astype(np.float32, copy=False)))

    dim = int(model.config.hidden_size)
    write_feature_file(out_path, dim=dim, language=request.language,
                       encoder=request.encoder, layer=layer_name(request.layer),
                       vectors=vectors,
                       extra={"pooling": "mean",
                              "batch_size": request.batch_size})
    manifest = skipped_manifest_path(out_path)
    write_skipped_manifest(manifest, skipped, n_written=len(vectors))
    return ExportResult(path=Path(out_path), manifest_path=manifest, dim=dim,
                        written=[key for key, _ in vectors], skipped=skipped)
