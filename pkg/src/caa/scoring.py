"""Entity-level affect scoring and paired diff statistics.

Verbs are scored only where the person occupies the subject slot; predicted
ternary labels (-1/0/+1), not probabilities, are averaged into entity scores.
Diff = treatment minus control; significance via two-sided paired t-test with
a t-distribution confidence interval.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from ._stats import paired_t
from .classifier import Model, predict
from .corpus import BiographyEntry, analyzable_verb_slots
from .errors import ScoringError, SubgroupTooSmall
from .matching import MatchedPair
from .types import SCORED_DIMENSIONS, Dimension

DEFAULT_MIN_VERBS = 280


def feature_key(person_id: str, language: str, sent_idx: int, verb_idx: int) -> str:
    return f"{person_id}:{language}:{sent_idx}:{verb_idx}"


def select_sentences(entry: BiographyEntry, language: str) -> list[tuple[int, int]]:
    """(sentence index, verb token index) pairs with the person as grammatical
    subject. Object-slot occurrences are excluded from scoring."""
    return analyzable_verb_slots(entry, language, subject_only=True)


@dataclass(frozen=True)
class EntityScore:
    person_id: str
    language: str
    dimension: Dimension
    mean_label: float
    n_verbs: int

    def __post_init__(self):
        if not -1.0 <= self.mean_label <= 1.0:
            raise ScoringError(f"mean label {self.mean_label} outside [-1, 1]")
        if self.n_verbs < 1:
            raise ScoringError("entity score needs at least one verb")


ScoreTable = dict[tuple[str, str, Dimension], EntityScore]


def score_entity(entry: BiographyEntry, language: str,
                 models: Mapping[Dimension, Model],
                 features: Mapping[str, np.ndarray],
                 dimensions: Sequence[Dimension] = SCORED_DIMENSIONS
                 ) -> list[EntityScore]:
    """Mean predicted label per dimension over the person's subject-slot verbs.

    Returns [] when no sentences qualify (the caller flags the entry). A
    selected verb without a feature record is an error, not a skip.
    """
    slots = select_sentences(entry, language)
    if not slots:
        return []
    keys = [feature_key(entry.person_id, language, s, v) for s, v in slots]
    missing = [k for k in keys if k not in features]
    if missing:
        raise ScoringError(f"{entry.person_id}/{language}: no feature vector for "
                           f"{missing[:3]!r}" + ("..." if len(missing) > 3 else ""))
    x = np.stack([np.asarray(features[k], dtype=np.float64) for k in keys])
    out = []
    for dim in dimensions:
        if dim not in models:
            raise ScoringError(f"no model for dimension {dim.value!r}")
        labels = predict(models[dim], x)
        out.append(EntityScore(person_id=entry.person_id, language=language,
                               dimension=dim, mean_label=float(np.mean(labels)),
                               n_verbs=len(labels)))
    return out


def score_entities(entries: Sequence[BiographyEntry], language: str,
                   models: Mapping[Dimension, Model],
                   features: Mapping[str, np.ndarray],
                   dimensions: Sequence[Dimension] = SCORED_DIMENSIONS
                   ) -> tuple[ScoreTable, list[str]]:
    """Score every entry; returns (score table, ids with zero scored verbs)."""
    table: ScoreTable = {}
    unscored = []
    for entry in entries:
        scores = score_entity(entry, language, models, features, dimensions)
        if not scores:
            unscored.append(entry.person_id)
            continue
        for s in scores:
            table[(s.person_id, s.language, s.dimension)] = s
    return table, unscored


@dataclass(frozen=True)
class DiffReport:
    language: str
    dimension: Dimension
    subgroup: str
    mean_diff: float
    ci_low: float
    ci_high: float
    t: float
    p: float
    n_pairs: int
    total_verbs: int
    zero_variance: bool = False

    def to_dict(self) -> dict:
        return {"language": self.language, "dimension": self.dimension.value,
                "subgroup": self.subgroup, "mean_diff": self.mean_diff,
                "ci_low": self.ci_low, "ci_high": self.ci_high, "t": self.t,
                "p": self.p, "n_pairs": self.n_pairs, "total_verbs": self.total_verbs,
                "zero_variance": self.zero_variance}


def _paired_diffs(pairs: Sequence[MatchedPair], scores: ScoreTable,
                  language: str, dimension: Dimension) -> tuple[list[float], int]:
    """Treatment-minus-control diffs over pairs scored on both sides, plus the
    retained verb total. Pairs missing either member's score drop pairwise."""
    diffs = []
    total_verbs = 0
    for pair in pairs:
        ts = scores.get((pair.treatment_id, language, dimension))
        cs = scores.get((pair.control_id, language, dimension))
        if ts is None or cs is None:
            continue
        diffs.append(ts.mean_label - cs.mean_label)
        total_verbs += ts.n_verbs + cs.n_verbs
    return diffs, total_verbs


def diff_scores(pairs: Sequence[MatchedPair], scores: ScoreTable, language: str,
                dimension: Dimension, subgroup: str = "all",
                min_verbs: int = DEFAULT_MIN_VERBS) -> DiffReport:
    """Paired treatment-minus-control statistics. Subgroups whose retained
    verb total falls below min_verbs are refused."""
    diffs, total_verbs = _paired_diffs(pairs, scores, language, dimension)
    if total_verbs < min_verbs:
        raise SubgroupTooSmall(subgroup=subgroup, total_verbs=total_verbs,
                               min_verbs=min_verbs, n_pairs=len(diffs))
    if len(diffs) < 2:
        raise ScoringError(f"subgroup {subgroup!r}: {len(diffs)} scored pairs; "
                           "need at least 2 for paired statistics")
    stats = paired_t(diffs)
    return DiffReport(language=language, dimension=dimension, subgroup=subgroup,
                      mean_diff=stats.mean_diff, ci_low=stats.ci_low,
                      ci_high=stats.ci_high, t=stats.t, p=stats.p,
                      n_pairs=stats.n, total_verbs=total_verbs,
                      zero_variance=stats.zero_variance)


@dataclass(frozen=True)
class Facet:
    """Named partition of pairs, keyed off the treatment entry's attributes."""
    name: str
    value_of: Callable[[BiographyEntry], str]


def _nationality_value(entry: BiographyEntry) -> str:
    nat = entry.attributes.get("nationality")
    if nat is None:
        return "unknown"
    return "American" if str(nat).strip().lower() == "american" else "non-American"


def _birth_value(entry: BiographyEntry) -> str:
    year = entry.attributes.get("birth_year")
    if year is None:
        return "unknown"
    year = int(year)
    if year < 1900:
        return "pre-1900"
    if year <= 1960:
        return "1900-1960"
    return "post-1960"


def _occupation_value(entry: BiographyEntry) -> str:
    occ = str(entry.attributes.get("occupation", "")).strip().lower()
    if occ == "entertainer":
        return "entertainer"
    if occ == "artist":
        return "artist"
    return "other"


def default_facets() -> list[Facet]:
    return [Facet("nationality", _nationality_value),
            Facet("birth", _birth_value),
            Facet("occupation", _occupation_value)]


@dataclass(frozen=True)
class SubgroupRefusal:
    subgroup: str
    total_verbs: int
    min_verbs: int
    n_pairs: int


def subgroup_report(pairs: Sequence[MatchedPair], scores: ScoreTable,
                    entries_by_id: Mapping[str, BiographyEntry],
                    languages: Sequence[str],
                    dimensions: Sequence[Dimension] = SCORED_DIMENSIONS,
                    facets: Sequence[Facet] | None = None,
                    min_verbs: int = DEFAULT_MIN_VERBS
                    ) -> tuple[list[DiffReport], list[SubgroupRefusal]]:
    """One DiffReport per (facet value, language, dimension); facet values come
    from the treatment entry. Undersized subgroups land in the refusal list."""
    if facets is None:
        facets = default_facets()
    buckets: dict[tuple[str, str], list[MatchedPair]] = {}
    for pair in pairs:
        entry = entries_by_id.get(pair.treatment_id)
        if entry is None:
            raise ScoringError(f"no entry for treatment id {pair.treatment_id!r}")
        for facet in facets:
            key = (facet.name, facet.value_of(entry))
            buckets.setdefault(key, []).append(pair)
    reports = []
    refused = []
    for (facet_name, value) in sorted(buckets):
        subgroup = f"{facet_name}={value}"
        bucket = buckets[(facet_name, value)]
        for language in languages:
            for dim in dimensions:
                diffs, total_verbs = _paired_diffs(bucket, scores, language, dim)
                # one-pair buckets are refused, not fatal, unlike direct calls
                if total_verbs < min_verbs or len(diffs) < 2:
                    refused.append(SubgroupRefusal(subgroup=subgroup,
                                                   total_verbs=total_verbs,
                                                   min_verbs=min_verbs,
                                                   n_pairs=len(diffs)))
                    continue
                reports.append(diff_scores(bucket, scores, language, dim,
                                           subgroup=subgroup, min_verbs=min_verbs))
    return reports, refused


@dataclass(frozen=True)
class ImbalanceEntry:
    person_id: str
    language_a: str
    language_b: str
    dimension: Dimension
    score_a: float
    score_b: float

    @property
    def differential(self) -> float:
        return self.score_a - self.score_b


@dataclass
class ImbalanceRanking:
    language_a: str
    language_b: str
    dimension: Dimension
    requested_k: int
    entries: list[ImbalanceEntry] = field(default_factory=list)
    truncated: bool = False  # True when fewer than k cross-language pairs exist


def rank_imbalance(scores: ScoreTable, language_a: str, language_b: str,
                   dimension: Dimension, k: int = 10,
                   person_ids: Sequence[str] | None = None) -> ImbalanceRanking:
    """Top-k persons by score(language_a) - score(language_b), descending.
    Only persons scored in both languages participate; ties order by id."""
    if person_ids is None:
        person_ids = sorted({pid for (pid, lang, dim) in scores
                             if dim == dimension and lang in (language_a, language_b)})
    rows = []
    for pid in person_ids:
        sa = scores.get((pid, language_a, dimension))
        sb = scores.get((pid, language_b, dimension))
        if sa is None or sb is None:
            continue
        rows.append(ImbalanceEntry(person_id=pid, language_a=language_a,
                                   language_b=language_b, dimension=dimension,
                                   score_a=sa.mean_label, score_b=sb.mean_label))
    rows.sort(key=lambda r: (-r.differential, r.person_id))
    truncated = len(rows) < k
    return ImbalanceRanking(language_a=language_a, language_b=language_b,
                            dimension=dimension, requested_k=k,
                            entries=rows[:k], truncated=truncated)


def write_diff_reports_csv(reports: Sequence[DiffReport], path: str | Path) -> None:
    """Long format: one row per subgroup x language x dimension."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["language", "dimension", "subgroup", "mean_diff", "ci_low",
                         "ci_high", "t", "p", "n_pairs", "total_verbs",
                         "zero_variance"])
        for r in reports:
            writer.writerow([r.language, r.dimension.value, r.subgroup,
                             f"{r.mean_diff:.9f}", f"{r.ci_low:.9f}",
                             f"{r.ci_high:.9f}", f"{r.t:.9f}", f"{r.p:.9f}",
                             r.n_pairs, r.total_verbs, int(r.zero_variance)])


def write_scores_json(scores: ScoreTable, path: str | Path) -> None:
    rows = [{"person_id": pid, "language": lang, "dimension": dim.value,
             "mean_label": s.mean_label, "n_verbs": s.n_verbs}
            for (pid, lang, dim), s in sorted(scores.items(),
                                              key=lambda kv: (kv[0][0], kv[0][1],
                                                              kv[0][2].value))]
    Path(path).write_text(json.dumps(rows, indent=2, sort_keys=True),
                          encoding="utf-8")


def read_scores_json(path: str | Path) -> ScoreTable:
    table: ScoreTable = {}
    for row in json.loads(Path(path).read_text(encoding="utf-8")):
        dim = Dimension(row["dimension"])
        score = EntityScore(person_id=row["person_id"], language=row["language"],
                            dimension=dim, mean_label=row["mean_label"],
                            n_verbs=row["n_verbs"])
        table[(score.person_id, score.language, dim)] = score
    return table


def write_imbalance_csv(ranking: ImbalanceRanking, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["person_id", "language_a", "language_b", "dimension",
                         "score_a", "score_b", "differential"])
        for e in ranking.entries:
            writer.writerow([e.person_id, e.language_a, e.language_b,
                             e.dimension.value, f"{e.score_a:.9f}",
                             f"{e.score_b:.9f}", f"{e.differential:.9f}"])
