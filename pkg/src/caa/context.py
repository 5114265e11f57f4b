"""Decontextualization and translation loss analyses.

Measures how much label information disappears when context-level scores are
collapsed to verb level, and when translated English verb annotations stand
in for in-language ones.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ContextError
from .types import Dimension, Lexicon, TernaryLabel, ternarize


@dataclass(frozen=True)
class VerbLevelScore:
    """A verb's score collapsed across its annotated contexts."""

    verb_lemma: str
    language: str
    dimension: Dimension
    score: float
    label: TernaryLabel
    n_contexts: int


def decontextualize(lexicon: Lexicon) -> list[VerbLevelScore]:
    """One VerbLevelScore per verb: unweighted mean over context-level scores,
    then ternarized. Requires an aggregated lexicon."""
    by_verb: dict[str, list[float]] = {}
    for inst in lexicon.instances:
        if inst.aggregate_score is None:
            raise ContextError(
                f"instance {inst.instance_id!r} has no aggregate score; aggregate first")
        by_verb.setdefault(inst.verb_lemma, []).append(inst.aggregate_score)
    out = []
    for lemma in sorted(by_verb):
        scores = by_verb[lemma]
        mean = sum(scores) / len(scores)
        out.append(VerbLevelScore(lemma, lexicon.language, lexicon.dimension,
                                  mean, ternarize(mean), len(scores)))
    return out


def context_loss(lexicon: Lexicon) -> float:
    """Percentage of instances whose context-level label differs from the
    verb-level label of their verb."""
    verb_labels = {v.verb_lemma: v.label for v in decontextualize(lexicon)}
    total = 0
    mismatched = 0
    for inst in lexicon.instances:
        if inst.label is None:
            raise ContextError(f"instance {inst.instance_id!r} has no label; aggregate first")
        total += 1
        if inst.label != verb_labels[inst.verb_lemma]:
            mismatched += 1
    if total == 0:
        return 0.0
    return 100.0 * mismatched / total


@dataclass
class TranslationTable:
    """Static verb translation pairs; rejected entries are kept but never used."""

    entries: list[tuple[str, str, str]] = field(default_factory=list)  # (src, src_lang, tgt)
    rejected: list[tuple[str, str, str]] = field(default_factory=list)

    def __post_init__(self):
        seen: set[tuple[str, str]] = set()
        for lemma, lang, _ in self.entries:
            if (lemma, lang) in seen:
                raise ValueError(f"duplicate translation entry for ({lemma!r}, {lang!r})")
            seen.add((lemma, lang))

    def lookup(self, lemma: str, language: str) -> str | None:
        for src, lang, tgt in self.entries:
            if src == lemma and lang == language:
                return tgt
        return None

    def mapping_for(self, language: str) -> dict[str, str]:
        return {src: tgt for src, lang, tgt in self.entries if lang == language}


_TRUE = {"1", "true", "yes", "y", "accepted"}
_FALSE = {"0", "false", "no", "n", "rejected"}


def load_translation_table(path: str | Path) -> TranslationTable:
    """Read a delimited table with columns
    source_lemma, source_language, target_lemma, accepted_flag."""
    entries, rejected = [], []
    with open(path, encoding="utf-8", newline="") as fh:
        for row_no, row in enumerate(csv.DictReader(fh), start=1):
            flag = str(row["accepted_flag"]).strip().lower()
            if flag in _TRUE:
                accepted = True
            elif flag in _FALSE:
                accepted = False
            else:
                raise ValueError(f"{path}: row {row_no}: bad accepted_flag {flag!r}")
            item = (row["source_lemma"].strip(), row["source_language"].strip(),
                    row["target_lemma"].strip())
            (entries if accepted else rejected).append(item)
    return TranslationTable(entries=entries, rejected=rejected)


def translation_loss(source_lexicon: Lexicon, english_lexicon: Lexicon,
                     table: TranslationTable) -> tuple[float, int]:
    """How often translated English verb-level labels differ from in-language ones.

    Returns (percentage over the intersection, intersection size). The
    intersection is source verbs with an accepted translation whose English
    lemma is annotated in the English lexicon.
    """
    source_scores = {v.verb_lemma: v.label for v in decontextualize(source_lexicon)}
    english_scores = {v.verb_lemma: v.label for v in decontextualize(english_lexicon)}
    translations = table.mapping_for(source_lexicon.language)

    total = 0
    mismatched = 0
    for lemma in sorted(source_scores):
        target = translations.get(lemma)
        if target is None or target not in english_scores:
            continue
        total += 1
        if english_scores[target] != source_scores[lemma]:
            mismatched += 1
    if total == 0:
        raise ContextError(
            f"no overlap between {source_lexicon.language} verbs and English annotations")
    return 100.0 * mismatched / total, total
