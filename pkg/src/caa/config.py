"""Pipeline configuration: one INI file, flag overrides win.

Sections: [pipeline] (languages, seed, folds), [lexicon], [classifier],
[matching], [scoring]. Validation collects every problem before failing.
"""

from __future__ import annotations

import configparser
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from .errors import ConfigError


@dataclass
class PipelineConfig:
    languages: tuple[str, ...] = ("en", "es", "ru")
    seed: int = 0
    n_folds: int = 5
    ternary_threshold: float = 0.35
    filter_threshold_sds: float = 1.0
    l2: float = 1e-4
    class_weight_grid: tuple[float, ...] = (0.5, 1.0, 2.0, 4.0)
    max_iter: int = 10_000
    tol: float = 1e-6
    slope_grid: tuple[float, ...] = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5)
    pivot: float | None = None  # None: mean category count of the pool
    min_analyzable_sentences: int = 3
    min_verbs: int = 280
    top_k: int = 10
    paths: dict[str, str] = field(default_factory=dict)

    def to_canonical_json(self) -> str:
        data = asdict(self)
        data["paths"] = dict(sorted(self.paths.items()))
        return json.dumps(data, sort_keys=True)

    def validate(self, required_paths: Sequence[str] = ()) -> None:
        problems = []
        for lang in self.languages:
            if len(lang) != 2 or not lang.isascii() or not lang.islower():
                problems.append(f"language {lang!r} is not a 2-letter lowercase code")
        if self.n_folds < 2:
            problems.append(f"n_folds must be >= 2, got {self.n_folds}")
        if not 0 < self.ternary_threshold < 1:
            problems.append(f"ternary_threshold must be in (0, 1), "
                            f"got {self.ternary_threshold}")
        if self.l2 < 0:
            problems.append(f"l2 must be >= 0, got {self.l2}")
        if not self.class_weight_grid or any(w <= 0 for w in self.class_weight_grid):
            problems.append(f"class_weight_grid must be positive, "
                            f"got {self.class_weight_grid}")
        if not self.slope_grid or any(not 0 <= s <= 1 for s in self.slope_grid):
            problems.append(f"slope_grid values must lie in [0, 1], "
                            f"got {self.slope_grid}")
        if self.pivot is not None and self.pivot <= 0:
            problems.append(f"pivot must be positive, got {self.pivot}")
        if self.min_verbs < 0:
            problems.append(f"min_verbs must be >= 0, got {self.min_verbs}")
        if self.min_analyzable_sentences < 1:
            problems.append("min_analyzable_sentences must be >= 1")
        if self.top_k < 1:
            problems.append(f"top_k must be >= 1, got {self.top_k}")
        for name in required_paths:
            if name not in self.paths:
                problems.append(f"missing path entry {name!r}")
            elif not Path(self.paths[name]).exists():
                problems.append(f"path {name!r} = {self.paths[name]!r} does not exist")
        if problems:
            raise ConfigError(problems)


_FLOAT_TUPLE_KEYS = {"class_weight_grid", "slope_grid"}


def _parse_float_tuple(raw: str) -> tuple[float, ...]:
    return tuple(float(x) for x in raw.replace(",", " ").split())


def load_config(path: str | Path | None = None,
                overrides: Mapping[str, str] | None = None) -> PipelineConfig:
    """Defaults <- INI file <- overrides. Override keys use the field names;
    path entries use 'paths.<name>'."""
    cfg = PipelineConfig()
    values: dict[str, str] = {}
    paths: dict[str, str] = {}
    if path is not None:
        parser = configparser.ConfigParser()
        read = parser.read(str(path))
        if not read:
            raise ConfigError([f"config file {path} not found or unreadable"])
        for section in parser.sections():
            for key, value in parser.items(section):
                if section == "paths":
                    paths[key] = value
                else:
                    values[key] = value
    for key, value in (overrides or {}).items():
        if key.startswith("paths."):
            paths[key[len("paths."):]] = value
        else:
            values[key] = value

    problems = []
    for key, raw in values.items():
        if not hasattr(cfg, key) or key == "paths":
            problems.append(f"unknown config key {key!r}")
            continue
        try:
            if key == "languages":
                cfg.languages = tuple(x for x in raw.replace(",", " ").split())
            elif key in _FLOAT_TUPLE_KEYS:
                setattr(cfg, key, _parse_float_tuple(raw))
            elif key == "pivot":
                cfg.pivot = None if raw.strip().lower() in ("", "none", "auto") \
                    else float(raw)
            elif key in ("seed", "n_folds", "max_iter", "min_verbs", "top_k",
                         "min_analyzable_sentences"):
                setattr(cfg, key, int(raw))
            elif key in ("ternary_threshold", "filter_threshold_sds", "l2", "tol"):
                setattr(cfg, key, float(raw))
            else:
                problems.append(f"unknown config key {key!r}")
        except ValueError:
            problems.append(f"config key {key!r}: cannot parse {raw!r}")
    if problems:
        raise ConfigError(problems)
    cfg.paths.update(paths)
    return cfg
