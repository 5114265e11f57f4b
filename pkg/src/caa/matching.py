"""Control-group construction: pivoted TF-IDF category vectors, cosine
similarity, greedy without-replacement matching, and slope tuning.

Categories are deduplicated per person after normalization; tf is therefore
0/1 and idf = ln(pool size / document frequency). The length-normalization
divisor is (1 - slope) * pivot + slope * (person's category count).
"""

from __future__ import annotations

import csv
import math
import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import TREATMENT, BiographyEntry
from .errors import MatchingError

DEFAULT_SLOPE_GRID = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5)


def normalize_category(category: str) -> str:
    return " ".join(category.replace("_", " ").split()).casefold()


def load_exclusion_list(path: str | Path) -> frozenset[str]:
    """One category per line, #-comments allowed; stored normalized."""
    out = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            out.add(normalize_category(line))
    return frozenset(out)


def person_categories(entry: BiographyEntry, excluded: frozenset[str]) -> frozenset[str]:
    """Distinct normalized categories minus the exclusion list."""
    return frozenset(normalize_category(c) for c in entry.categories) - excluded


@dataclass
class CategoryVector:
    person_id: str
    weights: dict[str, float] = field(default_factory=dict)
    n_categories: int = 0

    def norm(self) -> float:
        return math.sqrt(sum(w * w for w in self.weights.values()))


def cosine(a: CategoryVector, b: CategoryVector) -> float:
    na, nb = a.norm(), b.norm()
    if na == 0.0 or nb == 0.0:
        return 0.0
    shared = a.weights.keys() & b.weights.keys()
    return sum(a.weights[k] * b.weights[k] for k in shared) / (na * nb)


def mean_category_count(entries: Sequence[BiographyEntry],
                        excluded: frozenset[str]) -> float:
    if not entries:
        raise MatchingError("cannot take mean category count of an empty pool")
    return statistics.fmean(len(person_categories(e, excluded)) for e in entries)


def build_category_vectors(entries: Sequence[BiographyEntry],
                           excluded: frozenset[str],
                           pivot: float, slope: float
                           ) -> dict[str, CategoryVector]:
    """Pivoted TF-IDF over the given pool. IDF uses the pool itself."""
    if not 0.0 <= slope <= 1.0:
        raise MatchingError(f"slope must be in [0, 1], got {slope}")
    if pivot <= 0:
        raise MatchingError(f"pivot must be positive, got {pivot}")
    cat_sets = {e.person_id: person_categories(e, excluded) for e in entries}
    n = len(entries)
    df: dict[str, int] = {}
    for cats in cat_sets.values():
        for c in cats:
            df[c] = df.get(c, 0) + 1
    vectors = {}
    for entry in entries:
        cats = cat_sets[entry.person_id]
        divisor = (1.0 - slope) * pivot + slope * len(cats)
        weights = {}
        if divisor > 0:
            for c in cats:
                idf = math.log(n / df[c])
                if idf > 0:
                    weights[c] = idf / divisor
        vectors[entry.person_id] = CategoryVector(person_id=entry.person_id,
                                                  weights=weights,
                                                  n_categories=len(cats))
    return vectors


@dataclass(frozen=True)
class MatchedPair:
    treatment_id: str
    control_id: str
    similarity: float
    low_similarity: bool = False


def match_controls(treatment_ids: Sequence[str], candidate_ids: Sequence[str],
                   vectors: Mapping[str, CategoryVector],
                   similarity_floor: float = 1e-9) -> list[MatchedPair]:
    """Greedy without replacement. Treatments are processed in descending
    order of their best candidate similarity (over the full pool); each takes
    the most similar still-unmatched candidate. Ties break by id."""
    treatment_ids = list(treatment_ids)
    candidate_ids = list(candidate_ids)
    if len(candidate_ids) < len(treatment_ids):
        raise MatchingError(f"{len(candidate_ids)} candidates for "
                            f"{len(treatment_ids)} treatment entries")
    overlap = set(treatment_ids) & set(candidate_ids)
    if overlap:
        raise MatchingError(f"ids in both pools: {sorted(overlap)[:5]}")
    for pid in treatment_ids + candidate_ids:
        if pid not in vectors:
            raise MatchingError(f"no category vector for {pid!r}")
    sims = {t: {c: cosine(vectors[t], vectors[c]) for c in candidate_ids}
            for t in treatment_ids}
    order = sorted(treatment_ids,
                   key=lambda t: (-max(sims[t].values(), default=0.0), t))
    remaining = set(candidate_ids)
    pairs = []
    for t in order:
        best = min(remaining, key=lambda c: (-sims[t][c], c))
        remaining.discard(best)
        score = sims[t][best]
        pairs.append(MatchedPair(treatment_id=t, control_id=best, similarity=score,
                                 low_similarity=score < similarity_floor))
    pairs.sort(key=lambda p: p.treatment_id)
    return pairs


@dataclass
class SlopeTuneResult:
    best_slope: float
    pivot: float
    gaps: list[tuple[float, float]] = field(default_factory=list)


def tune_slope(treatment: Sequence[BiographyEntry],
               candidates: Sequence[BiographyEntry],
               excluded: frozenset[str],
               grid: Sequence[float] = DEFAULT_SLOPE_GRID,
               pivot: float | None = None) -> SlopeTuneResult:
    """Pick the grid slope minimizing the absolute gap between the mean
    category counts of the treatment set and of its matched controls
    (exclusion-list categories not counted). Ties go to the smaller slope."""
    if not grid:
        raise MatchingError("slope grid is empty")
    pool = list(treatment) + list(candidates)
    if pivot is None:
        pivot = mean_category_count(pool, excluded)
    treatment_ids = [e.person_id for e in treatment]
    candidate_ids = [e.person_id for e in candidates]
    count_of = {e.person_id: len(person_categories(e, excluded)) for e in pool}
    treat_mean = statistics.fmean(count_of[t] for t in treatment_ids) \
        if treatment_ids else 0.0
    gaps = []
    for slope in sorted(grid):
        vectors = build_category_vectors(pool, excluded, pivot=pivot, slope=slope)
        pairs = match_controls(treatment_ids, candidate_ids, vectors)
        control_mean = statistics.fmean(count_of[p.control_id] for p in pairs)
        gaps.append((slope, abs(treat_mean - control_mean)))
    best_slope = min(gaps, key=lambda sg: (sg[1], sg[0]))[0]
    return SlopeTuneResult(best_slope=best_slope, pivot=pivot, gaps=gaps)


def split_pools(entries: Iterable[BiographyEntry]
                ) -> tuple[list[BiographyEntry], list[BiographyEntry]]:
    treatment = [e for e in entries if e.group == TREATMENT]
    candidates = [e for e in entries if e.group != TREATMENT]
    return treatment, candidates


def write_pairs_csv(pairs: Sequence[MatchedPair], path: str | Path,
                    slope: float, pivot: float) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["treatment_id", "control_id", "similarity", "slope", "pivot"])
        for p in pairs:
            writer.writerow([p.treatment_id, p.control_id, f"{p.similarity:.9f}",
                             slope, f"{pivot:.6f}"])


def read_pairs_csv(path: str | Path) -> list[MatchedPair]:
    pairs = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            pairs.append(MatchedPair(treatment_id=row["treatment_id"],
                                     control_id=row["control_id"],
                                     similarity=float(row["similarity"])))
    return pairs
