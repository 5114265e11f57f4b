"""Export request parsing.

A request file is JSON lines, one object per item:

    {"key": "en_power_001", "sentence": "they praised the mayor",
     "verb_index": 1, "language": "en"}

`verb_index` counts whitespace tokens of `sentence`, zero-based. Keys must
be unique within a file; every problem found is reported at once.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path


class RequestError(ValueError):
    """Invalid request file; `problems` lists every issue found."""

    def __init__(self, problems: list[str]):
        super().__init__("; ".join(problems))
        self.problems = problems


@dataclass(frozen=True)
class RequestItem:
    key: str
    sentence: str
    verb_index: int
    language: str

    def words(self) -> list[str]:
        return self.sentence.split()


@dataclass
class ExportRequest:
    """Everything one export run needs: items plus inference settings."""

    items: list[RequestItem]
    encoder: str
    layer: int = -1
    batch_size: int = 8

    def __post_init__(self):
        if not self.items:
            raise RequestError(["no request items"])
        if self.batch_size < 1:
            raise RequestError([f"batch_size must be >= 1, got {self.batch_size}"])
        languages = {item.language for item in self.items}
        if len(languages) > 1:
            raise RequestError(
                [f"items mix languages {sorted(languages)}; "
                 "run one export per language"])

    @property
    def language(self) -> str:
        return self.items[0].language


def load_request_items(path: str | Path) -> list[RequestItem]:
    items: list[RequestItem] = []
    problems: list[str] = []
    seen: set[str] = set()
    for lineno, line in enumerate(
            Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
        except json.JSONDecodeError as exc:
            problems.append(f"line {lineno}: not valid JSON ({exc.msg})")
            continue
        missing = [name for name in ("key", "sentence", "verb_index", "language")
                   if name not in row]
        if missing:
            problems.append(f"line {lineno}: missing {', '.join(missing)}")
            continue
        item = RequestItem(key=str(row["key"]), sentence=str(row["sentence"]),
                           verb_index=int(row["verb_index"]),
                           language=str(row["language"]))
        if not item.key:
            problems.append(f"line {lineno}: empty key")
        elif item.key in seen:
            problems.append(f"line {lineno}: duplicate key {item.key!r}")
        seen.add(item.key)
        if not item.language:
            problems.append(f"line {lineno}: empty language")
        n_words = len(item.words())
        if not 0 <= item.verb_index < n_words:
            problems.append(
                f"line {lineno}: verb_index {item.verb_index} outside "
                f"sentence of {n_words} tokens")
        items.append(item)
    if problems:
        raise RequestError(problems)
    if not items:
        raise RequestError([f"{path}: no request items"])
    return items
