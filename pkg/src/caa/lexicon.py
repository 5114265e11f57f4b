"""Turning raw crowdsourced judgement rows into aggregated, ternarized lexicons.

Stages: ingest (map judgement strings onto {-1, 0, +1} and group rows into
instances), annotator filtering (drop workers whose disagreement rate exceeds
mean + 1 SD), aggregation (mean of surviving judgements) and ternarization
(+/-0.35 closed polar intervals).
"""

from __future__ import annotations

import csv
import json
import statistics
from dataclasses import dataclass, field
from pathlib import Path

from .errors import AggregationError, IngestError
from .types import (
    ConnotationInstance,
    Dimension,
    Judgement,
    Lexicon,
    TernaryLabel,
    ternarize,
    validate_language,
)

ANNOTATION_COLUMNS = (
    "instance_id",
    "language",
    "dimension",
    "verb_lemma",
    "sentence",
    "verb_token_index",
    "annotator_id",
    "judgement",
)

# Declared judgement-string mapping, per dimension. Keys are normalized
# (lowercased, whitespace collapsed); numeric strings are accepted everywhere.
DEFAULT_JUDGEMENT_MAPS: dict[Dimension, dict[str, int]] = {
    Dimension.POWER: {
        "less": -1, "equal": 0, "more": 1,
        "less power": -1, "equal power": 0, "more power": 1,
        "subject has less power": -1,
        "subject has equal power": 0,
        "subject has more power": 1,
    },
    Dimension.AGENCY: {
        "low": -1, "moderate": 0, "high": 1,
        "low agency": -1, "moderate agency": 0, "high agency": 1,
    },
    Dimension.SENT_SUBJ: {"negative": -1, "neutral": 0, "positive": 1},
    Dimension.SENT_OBJ: {"negative": -1, "neutral": 0, "positive": 1},
}

_NUMERIC_JUDGEMENTS = {"-1": -1, "0": 0, "1": 1, "+1": 1}


def normalize_judgement_string(text: str) -> str:
    return " ".join(text.strip().lower().split())


def map_judgement_string(text: str, dimension: Dimension,
                         mapping: dict[Dimension, dict[str, int]] | None = None) -> int:
    key = normalize_judgement_string(text)
    table = (mapping or DEFAULT_JUDGEMENT_MAPS)[dimension]
    if key in table:
        return table[key]
    if key in _NUMERIC_JUDGEMENTS:
        return _NUMERIC_JUDGEMENTS[key]
    raise KeyError(key)


def ingest_judgements(rows, mapping: dict[Dimension, dict[str, int]] | None = None,
                      provenance: str = "") -> Lexicon:
    """Group raw judgement rows (dicts keyed by ANNOTATION_COLUMNS) into a lexicon.

    All rows must share one (language, dimension). No aggregation happens here.
    Raises IngestError listing every bad row (unknown judgement string,
    duplicate (instance, annotator), inconsistent instance fields).
    """
    problems: list[str] = []
    instances: dict[str, ConnotationInstance] = {}
    seen_annotators: dict[str, set[str]] = {}
    lang_dim: tuple[str, Dimension] | None = None

    for row_no, row in enumerate(rows, start=1):
        missing = [c for c in ANNOTATION_COLUMNS if not str(row.get(c, "") or "").strip()]
        if missing:
            problems.append(f"row {row_no}: missing column(s) {', '.join(missing)}")
            continue
        try:
            language = validate_language(row["language"].strip())
            dimension = Dimension.parse(row["dimension"])
            token_index = int(row["verb_token_index"])
        except ValueError as exc:
            problems.append(f"row {row_no}: {exc}")
            continue

        if lang_dim is None:
            lang_dim = (language, dimension)
        elif (language, dimension) != lang_dim:
            problems.append(
                f"row {row_no}: ({language}, {dimension}) does not match "
                f"the file's ({lang_dim[0]}, {lang_dim[1]})"
            )
            continue

        try:
            value = map_judgement_string(row["judgement"], dimension, mapping)
        except KeyError:
            problems.append(f"row {row_no}: unknown judgement string {row['judgement']!r}")
            continue

        iid = row["instance_id"].strip()
        annotator = row["annotator_id"].strip()
        if iid not in instances:
            instances[iid] = ConnotationInstance(
                instance_id=iid,
                verb_lemma=row["verb_lemma"].strip(),
                context_sentence=row["sentence"],
                verb_token_index=token_index,
                language=language,
                dimension=dimension,
            )
            seen_annotators[iid] = set()
        else:
            inst = instances[iid]
            if (inst.verb_lemma != row["verb_lemma"].strip()
                    or inst.context_sentence != row["sentence"]
                    or inst.verb_token_index != token_index):
                problems.append(f"row {row_no}: instance {iid!r} fields disagree with earlier rows")
                continue
        if annotator in seen_annotators[iid]:
            problems.append(f"row {row_no}: duplicate judgement by {annotator!r} on {iid!r}")
            continue
        seen_annotators[iid].add(annotator)
        instances[iid].judgements.append(Judgement(annotator, value))

    if problems:
        raise IngestError(problems)
    if lang_dim is None:
        # Empty input: a lexicon with zero instances and no fixed language.
        return Lexicon(language="xx", dimension=Dimension.POWER, instances=[],
                       provenance=provenance or "empty input")
    lex = Lexicon(language=lang_dim[0], dimension=lang_dim[1],
                  instances=list(instances.values()), provenance=provenance)
    lex.validate()
    return lex


def read_annotation_rows(path: str | Path) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def ingest_annotation_file(path: str | Path,
                           mapping: dict[Dimension, dict[str, int]] | None = None) -> list[Lexicon]:
    """Read an annotation CSV and return one lexicon per (language, dimension)."""
    rows = read_annotation_rows(path)
    groups: dict[tuple[str, str], list[tuple[int, dict]]] = {}
    for row_no, row in enumerate(rows, start=1):
        key = (str(row.get("language", "")).strip(), str(row.get("dimension", "")).strip())
        groups.setdefault(key, []).append((row_no, row))

    lexicons = []
    problems: list[str] = []
    for key in sorted(groups):
        group_rows = [r for _, r in groups[key]]
        try:
            lexicons.append(ingest_judgements(
                group_rows, mapping, provenance=f"ingested from {Path(path).name}"))
        except IngestError as exc:
            # Re-anchor row numbers to the original file.
            numbers = [n for n, _ in groups[key]]
            for problem in exc.problems:
                local, _, rest = problem.partition(":")
                idx = int(local.split()[1])
                problems.append(f"row {numbers[idx - 1]}:{rest}")
    if problems:
        raise IngestError(sorted(problems, key=lambda p: int(p.split()[1].rstrip(":"))))
    return lexicons


@dataclass
class AnnotatorReport:
    """Outcome of the disagreement-rate filter."""

    rates: dict[str, float] = field(default_factory=dict)
    mean_rate: float = 0.0
    sd_rate: float = 0.0
    threshold: float = 0.0
    removed: dict[str, float] = field(default_factory=dict)
    dropped_instances: list[tuple[str, str, str]] = field(default_factory=list)

    @property
    def fraction_removed(self) -> float:
        return len(self.removed) / len(self.rates) if self.rates else 0.0

    def to_dict(self) -> dict:
        return {
            "rates": dict(sorted(self.rates.items())),
            "mean_rate": self.mean_rate,
            "sd_rate": self.sd_rate,
            "threshold": self.threshold,
            "removed": dict(sorted(self.removed.items())),
            "dropped_instances": [list(t) for t in self.dropped_instances],
            "fraction_removed": self.fraction_removed,
        }


def _disagreements(lexicons) -> tuple[dict[str, int], dict[str, int]]:
    """Count, per annotator, instances judged (with peers) and instances where
    the annotator differed while all peers agreed with each other."""
    judged: dict[str, int] = {}
    against: dict[str, int] = {}
    for lex in lexicons:
        for inst in lex.instances:
            if len(inst.judgements) < 2:
                continue
            for j in inst.judgements:
                judged[j.annotator_id] = judged.get(j.annotator_id, 0) + 1
                against.setdefault(j.annotator_id, 0)
                peers = [p.value for p in inst.judgements if p.annotator_id != j.annotator_id]
                if len(set(peers)) == 1 and j.value != peers[0]:
                    against[j.annotator_id] += 1
    return judged, against


def filter_annotators(lexicons: list[Lexicon], threshold_sds: float = 1.0
                      ) -> tuple[list[Lexicon], AnnotatorReport]:
    """Remove annotators whose disagreement rate exceeds mean + threshold_sds * SD.

    Rates are pooled over all given lexicons (population SD). After removal,
    instances left with fewer than two judgements are dropped. Returns new
    lexicons (aggregate fields cleared) and a report.
    """
    judged, against = _disagreements(lexicons)
    report = AnnotatorReport()
    if not judged:
        return [Lexicon(lx.language, lx.dimension, [i.copy() for i in lx.instances],
                        lx.provenance) for lx in lexicons], report

    report.rates = {a: against[a] / judged[a] for a in judged}
    report.mean_rate = statistics.fmean(report.rates.values())
    report.sd_rate = statistics.pstdev(report.rates.values())
    report.threshold = report.mean_rate + threshold_sds * report.sd_rate
    report.removed = {a: r for a, r in report.rates.items() if r > report.threshold}

    filtered: list[Lexicon] = []
    for lex in lexicons:
        kept_instances = []
        for inst in lex.instances:
            kept = [j for j in inst.judgements if j.annotator_id not in report.removed]
            if len(kept) < 2:
                report.dropped_instances.append(
                    (lex.language, lex.dimension.value, inst.instance_id))
                continue
            new = inst.copy()
            new.judgements = kept
            new.aggregate_score = None
            new.label = None
            kept_instances.append(new)
        filtered.append(Lexicon(lex.language, lex.dimension, kept_instances,
                                provenance=(lex.provenance + "; annotators filtered").strip("; ")))
    return filtered, report


def aggregate_and_ternarize(lexicon: Lexicon) -> Lexicon:
    """Set aggregate_score (mean of judgements) and ternary label on every instance."""
    out = []
    for inst in lexicon.instances:
        if len(inst.judgements) < 2:
            raise AggregationError(
                f"instance {inst.instance_id!r} has {len(inst.judgements)} judgement(s); "
                "need at least two to aggregate"
            )
        new = inst.copy()
        new.aggregate_score = sum(j.value for j in new.judgements) / len(new.judgements)
        new.label = ternarize(new.aggregate_score)
        out.append(new)
    result = Lexicon(lexicon.language, lexicon.dimension, out,
                     provenance=(lexicon.provenance + "; aggregated").strip("; "))
    result.validate()
    return result


# ---------------------------------------------------------------------------
# Lexicon JSON serialization: one document per (language, dimension).

def lexicon_to_dict(lexicon: Lexicon) -> dict:
    return {
        "language": lexicon.language,
        "dimension": lexicon.dimension.value,
        "provenance": lexicon.provenance,
        "instances": [
            {
                "instance_id": i.instance_id,
                "verb_lemma": i.verb_lemma,
                "sentence": i.context_sentence,
                "verb_token_index": i.verb_token_index,
                "judgements": [{"annotator_id": j.annotator_id, "value": j.value}
                               for j in i.judgements],
                "aggregate_score": i.aggregate_score,
                "label": None if i.label is None else int(i.label),
            }
            for i in lexicon.instances
        ],
    }


def lexicon_from_dict(doc: dict) -> Lexicon:
    dimension = Dimension.parse(doc["dimension"])
    language = doc["language"]
    instances = [
        ConnotationInstance(
            instance_id=i["instance_id"],
            verb_lemma=i["verb_lemma"],
            context_sentence=i["sentence"],
            verb_token_index=int(i["verb_token_index"]),
            language=language,
            dimension=dimension,
            judgements=[Judgement(j["annotator_id"], int(j["value"]))
                        for j in i["judgements"]],
            aggregate_score=i.get("aggregate_score"),
            label=None if i.get("label") is None else TernaryLabel(int(i["label"])),
        )
        for i in doc["instances"]
    ]
    lex = Lexicon(language=language, dimension=dimension, instances=instances,
                  provenance=doc.get("provenance", ""))
    lex.validate()
    return lex


def lexicon_filename(language: str, dimension: Dimension) -> str:
    return f"{language}_{dimension.value}.json"


def save_lexicon(lexicon: Lexicon, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(lexicon_to_dict(lexicon), ensure_ascii=False, indent=2, sort_keys=True),
        encoding="utf-8")


def load_lexicon(path: str | Path) -> Lexicon:
    return lexicon_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
