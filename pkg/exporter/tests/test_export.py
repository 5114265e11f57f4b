"""Exporter behaviour plus the integration contract with the consuming
toolkit: files written here must be readable by `caa.features` with every
key recovered bit-exactly.
"""

from __future__ import annotations

import json

import numpy as np
import pytest

from embed_exporter import (ExportError, ExportRequest, RequestError,
                            export, load_request_items, skipped_manifest_path)
from embed_exporter.cli import main

from conftest import write_requests

# ten sentences over the fixture vocabulary, one unicode key
TEN_ITEMS = [
    {"key": "en_power_000", "sentence": "they thanked the mayor", "verb_index": 1},
    {"key": "en_power_001", "sentence": "the mayor thanked the volunteers",
     "verb_index": 2},
    {"key": "en_power_002", "sentence": "they praise the crowd", "verb_index": 1},
    {"key": "en_power_003", "sentence": "the crowd praised the mayor",
     "verb_index": 2},
    {"key": "en_power_004", "sentence": "they betray the mayor", "verb_index": 1},
    {"key": "en_power_005", "sentence": "the rescuers thanked the crowd",
     "verb_index": 2},
    {"key": "en_power_006", "sentence": "a volunteer rescued the mayor",
     "verb_index": 2},
    {"key": "en_power_007", "sentence": "the storm betrayed the volunteers",
     "verb_index": 2},
    {"key": "en_power_008", "sentence": "they won the crowd", "verb_index": 1},
    {"key": "ключ_009", "sentence": "the mayor won", "verb_index": 2},
]


def items_with_language(rows, language="en"):
    return [dict(row, language=language) for row in rows]


def request_for(tmp_path, encoder, rows, **kwargs) -> ExportRequest:
    path = write_requests(tmp_path / "requests.jsonl",
                          items_with_language(rows))
    return ExportRequest(items=load_request_items(path), encoder=str(encoder),
                         **kwargs)


class TestRoundTrip:
    def test_reader_recovers_every_key(self, tiny_encoder, tmp_path):
        from caa.features import read_features

        request = request_for(tmp_path, tiny_encoder, TEN_ITEMS)
        result = export(request, tmp_path / "en_power.bin")
        assert result.skipped == {}

        ffile = read_features(tmp_path / "en_power.bin")
        assert ffile.keys() == [row["key"] for row in TEN_ITEMS]
        assert ffile.header.dim == result.dim == 32
        assert ffile.header.language == "en"
        assert ffile.header.encoder == str(tiny_encoder)
        assert ffile.header.layer == "last"
        assert ffile.header.extra["pooling"] == "mean"
        for vector in ffile.as_mapping().values():
            assert vector.dtype == np.float32
            assert np.all(np.isfinite(vector))

    def test_downstream_parameter_count(self, tiny_encoder, tmp_path):
        from caa.features import parameter_count, read_features

        request = request_for(tmp_path, tiny_encoder, TEN_ITEMS[:3])
        result = export(request, tmp_path / "small.bin")
        dim = read_features(tmp_path / "small.bin").header.dim
        assert parameter_count(dim) == 3 * (result.dim + 1) == 99
        # the reference encoder is 1024-wide
        assert parameter_count(1024) == 3075


class TestDeterminism:
    def test_repeated_export_bit_identical(self, tiny_encoder, tmp_path):
        request = request_for(tmp_path, tiny_encoder, TEN_ITEMS)
        export(request, tmp_path / "one.bin")
        export(request, tmp_path / "two.bin")
        assert (tmp_path / "one.bin").read_bytes() == \
            (tmp_path / "two.bin").read_bytes()
        assert skipped_manifest_path(tmp_path / "one.bin").read_bytes() == \
            skipped_manifest_path(tmp_path / "two.bin").read_bytes()

    def test_identical_sentences_identical_vectors(self, tiny_encoder, tmp_path):
        rows = [
            {"key": "first", "sentence": "they praise the crowd", "verb_index": 1},
            {"key": "second", "sentence": "they praise the crowd", "verb_index": 1},
        ]
        request = request_for(tmp_path, tiny_encoder, rows)
        export(request, tmp_path / "twins.bin")

        from caa.features import read_features
        mapping = read_features(tmp_path / "twins.bin").as_mapping()
        assert mapping["first"].tobytes() == mapping["second"].tobytes()


class TestPooling:
    def test_mean_over_verb_pieces(self, tiny_encoder, tmp_path):
        """Independent recomputation: the vector for a two-piece verb is the
        mean of those piece rows in the last hidden state."""
        import torch
        from transformers import AutoModel, AutoTokenizer

        rows = [{"key": "only", "sentence": "the mayor thanked the volunteers",
                 "verb_index": 2}]
        request = request_for(tmp_path, tiny_encoder, rows, batch_size=1)
        export(request, tmp_path / "pooled.bin")

        tokenizer = AutoTokenizer.from_pretrained(str(tiny_encoder))
        model = AutoModel.from_pretrained(str(tiny_encoder))
        model.eval()
        encoded = tokenizer([["the", "mayor", "thanked", "the", "volunteers"]],
                            is_split_into_words=True, return_tensors="pt")
        with torch.inference_mode():
            hidden = model(**encoded).last_hidden_state[0]
        pieces = [pos for pos, word in enumerate(encoded.word_ids(0))
                  if word == 2]
        assert len(pieces) == 2  # thank + ##ed
        expected = hidden[pieces].mean(dim=0).numpy()

        from caa.features import read_features
        got = read_features(tmp_path / "pooled.bin").as_mapping()["only"]
        np.testing.assert_allclose(got, expected, atol=1e-6)

    def test_layer_selector_changes_output(self, tiny_encoder, tmp_path):
        from caa.features import read_features

        rows = TEN_ITEMS[:2]
        export(request_for(tmp_path, tiny_encoder, rows),
               tmp_path / "last.bin")
        export(request_for(tmp_path, tiny_encoder, rows, layer=0),
               tmp_path / "embed.bin")
        last = read_features(tmp_path / "last.bin")
        embed = read_features(tmp_path / "embed.bin")
        assert embed.header.layer == "hidden:0"
        key = rows[0]["key"]
        assert last.as_mapping()[key].tobytes() != embed.as_mapping()[key].tobytes()

    def test_layer_out_of_range(self, tiny_encoder, tmp_path):
        request = request_for(tmp_path, tiny_encoder, TEN_ITEMS[:1], layer=9)
        with pytest.raises(ExportError, match="layer 9"):
            export(request, tmp_path / "never.bin")


class TestSkipping:
    def test_truncated_verb_listed_not_fatal(self, tiny_encoder, tmp_path):
        long_tail = "the " * 19 + "won"  # 20 words, verb past max_length 16
        rows = TEN_ITEMS[:2] + [
            {"key": "gone", "sentence": long_tail, "verb_index": 19}]
        request = request_for(tmp_path, tiny_encoder, rows)
        result = export(request, tmp_path / "partial.bin")

        assert result.written == ["en_power_000", "en_power_001"]
        assert set(result.skipped) == {"gone"}
        manifest = json.loads(
            skipped_manifest_path(tmp_path / "partial.bin").read_text())
        assert manifest["written"] == 2
        assert "no subword pieces" in manifest["skipped"]["gone"]


class TestRequestValidation:
    def test_problems_reported_together(self, tmp_path):
        path = write_requests(tmp_path / "bad.jsonl", [
            {"key": "dup", "sentence": "the mayor won", "verb_index": 2,
             "language": "en"},
            {"key": "dup", "sentence": "they praise the crowd", "verb_index": 1,
             "language": "en"},
            {"key": "far", "sentence": "the mayor won", "verb_index": 7,
             "language": "en"},
        ])
        with pytest.raises(RequestError) as exc:
            load_request_items(path)
        problems = exc.value.problems
        assert any("duplicate key 'dup'" in p for p in problems)
        assert any("verb_index 7 outside" in p for p in problems)

    def test_mixed_languages_rejected(self, tmp_path):
        items = load_request_items(write_requests(tmp_path / "mixed.jsonl", [
            {"key": "a", "sentence": "the mayor won", "verb_index": 2,
             "language": "en"},
            {"key": "b", "sentence": "the mayor won", "verb_index": 2,
             "language": "es"},
        ]))
        with pytest.raises(RequestError, match="mix languages"):
            ExportRequest(items=items, encoder="anywhere")

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        path.write_text("\n")
        with pytest.raises(RequestError, match="no request items"):
            load_request_items(path)


class TestCli:
    def test_export_run(self, tiny_encoder, tmp_path, capsys):
        requests = write_requests(tmp_path / "req.jsonl",
                                  items_with_language(TEN_ITEMS))
        out = tmp_path / "cli.bin"
        rc = main(["--requests", str(requests), "--encoder", str(tiny_encoder),
                   "--out", str(out)])
        assert rc == 0
        assert out.exists()
        assert skipped_manifest_path(out).exists()
        assert "wrote 10 vectors (dim 32)" in capsys.readouterr().out

    def test_invalid_requests_exit_2(self, tiny_encoder, tmp_path, capsys):
        requests = write_requests(tmp_path / "req.jsonl", [
            {"key": "x", "sentence": "the mayor won", "verb_index": 5,
             "language": "en"}])
        rc = main(["--requests", str(requests), "--encoder", str(tiny_encoder),
                   "--out", str(tmp_path / "no.bin")])
        assert rc == 2
        assert "request error" in capsys.readouterr().err

    def test_missing_encoder_exit_1(self, tmp_path, capsys):
        requests = write_requests(tmp_path / "req.jsonl",
                                  items_with_language(TEN_ITEMS[:1]))
        rc = main(["--requests", str(requests),
                   "--encoder", str(tmp_path / "no_such_checkpoint"),
                   "--out", str(tmp_path / "no.bin")])
        assert rc == 1
        assert "cannot load encoder" in capsys.readouterr().err
