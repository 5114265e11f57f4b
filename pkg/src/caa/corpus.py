"""Biography corpus handling: dump loading, dependency-parse access, pronoun
inference, analyzability filters, and transitive-tuple extraction.

Input is a pre-scraped JSON-lines dump, one record per (person, language):
{"person_id", "language", "group", "names": [...], "categories": [...],
 "attributes": {...}, "sentences": [{"text", "conllu"}, ...]}.
Parses use the 10-column CoNLL-U layout; only FORM, LEMMA, UPOS, HEAD and
DEPREL are consumed.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import CorpusError

TREATMENT = "treatment"
CONTROL_CANDIDATE = "control_candidate"

# Dependency relation sets marking the slots we treat as subject / object.
# Label sets are configurable per language; these cover UD plus older
# Stanford-style tags seen in legacy parses.
SUBJECT_RELATIONS = frozenset({"nsubj", "nsubj:pass", "nsubjpass", "csubj"})
OBJECT_RELATIONS = frozenset({"obj", "dobj", "iobj", "obj:pass"})

# Nominative third-person pronoun surface forms used for gender inference and
# subject matching, keyed by language.
PRONOUN_FORMS: dict[str, tuple[frozenset[str], frozenset[str]]] = {
    "en": (frozenset({"he"}), frozenset({"she"})),
    "es": (frozenset({"él"}), frozenset({"ella"})),
    "ru": (frozenset({"он"}), frozenset({"она"})),
}


class PronounTag(Enum):
    HE = "he"
    SHE = "she"
    UNRESOLVED = "unresolved"


@dataclass(frozen=True)
class Token:
    index: int          # 1-based CoNLL-U position
    form: str
    lemma: str
    upos: str
    head: int           # 0 means root
    deprel: str


@dataclass
class ParsedSentence:
    text: str
    tokens: list[Token] = field(default_factory=list)

    def verbs(self) -> list[Token]:
        return [t for t in self.tokens if t.upos == "VERB"]

    def children(self, head_index: int) -> list[Token]:
        return [t for t in self.tokens if t.head == head_index]


def parse_conllu(block: str) -> list[Token]:
    """Parse one sentence's CoNLL-U block. Multiword ranges (1-2) and empty
    nodes (1.1) are skipped; comments ignored."""
    tokens = []
    for raw in block.splitlines():
        line = raw.rstrip("\n")
        if not line.strip() or line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) != 10:
            raise CorpusError(f"expected 10 tab-separated columns, got {len(cols)}: {line!r}")
        if "-" in cols[0] or "." in cols[0]:
            continue
        try:
            idx = int(cols[0])
            head = int(cols[6]) if cols[6] != "_" else 0
        except ValueError:
            raise CorpusError(f"bad token/head index in line {line!r}")
        tokens.append(Token(index=idx, form=cols[1], lemma=cols[2], upos=cols[3],
                            head=head, deprel=cols[7]))
    return tokens


@dataclass
class BiographyEntry:
    person_id: str
    group: str
    names: dict[str, list[str]] = field(default_factory=dict)
    sentences: dict[str, list[ParsedSentence]] = field(default_factory=dict)
    categories: list[str] = field(default_factory=list)
    attributes: dict = field(default_factory=dict)
    pronouns: dict[str, PronounTag] = field(default_factory=dict)

    def languages(self) -> set[str]:
        return set(self.sentences)

    def name_tokens(self, language: str, match_final_surname: bool = True) -> set[str]:
        """Lowercased token forms that count as the person's name: every
        single-token alias plus (optionally) the final token of each alias."""
        out: set[str] = set()
        for alias in self.names.get(language, []):
            parts = alias.split()
            if len(parts) == 1:
                out.add(parts[0].lower())
            elif parts:
                if match_final_surname:
                    out.add(parts[-1].lower())
        return out


def load_corpus_dump(path: str | Path) -> list[BiographyEntry]:
    """Read the JSON-lines dump and merge per-language records by person_id."""
    entries: dict[str, BiographyEntry] = {}
    problems: list[str] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                rec = json.loads(raw)
            except json.JSONDecodeError as exc:
                problems.append(f"line {lineno}: invalid JSON ({exc.msg})")
                continue
            try:
                pid = rec["person_id"]
                language = rec["language"]
                group = rec["group"]
            except KeyError as exc:
                problems.append(f"line {lineno}: missing field {exc.args[0]}")
                continue
            if group not in (TREATMENT, CONTROL_CANDIDATE):
                problems.append(f"line {lineno}: unknown group {group!r}")
                continue
            entry = entries.get(pid)
            if entry is None:
                entry = BiographyEntry(person_id=pid, group=group,
                                       attributes=rec.get("attributes", {}) or {})
                entries[pid] = entry
            elif entry.group != group:
                problems.append(f"line {lineno}: person {pid} changes group "
                                f"{entry.group} -> {group}")
                continue
            if language in entry.sentences:
                problems.append(f"line {lineno}: duplicate article for "
                                f"({pid}, {language})")
                continue
            entry.names[language] = list(rec.get("names", []))
            entry.categories.extend(rec.get("categories", []))
            for key, value in (rec.get("attributes") or {}).items():
                entry.attributes.setdefault(key, value)
            sentences = []
            for s in rec.get("sentences", []):
                sentences.append(ParsedSentence(text=s["text"],
                                                tokens=parse_conllu(s.get("conllu", ""))))
            entry.sentences[language] = sentences
    if problems:
        raise CorpusError("corpus dump rejected:\n" + "\n".join(problems))
    return sorted(entries.values(), key=lambda e: e.person_id)


def infer_pronoun(entry: BiographyEntry, language: str,
                  pronoun_forms: Mapping[str, tuple[frozenset[str], frozenset[str]]]
                  = PRONOUN_FORMS) -> PronounTag:
    """Pick he vs she by token frequency over the article; ties unresolved."""
    if language not in pronoun_forms:
        return PronounTag.UNRESOLVED
    he_forms, she_forms = pronoun_forms[language]
    he_count = she_count = 0
    for sent in entry.sentences.get(language, []):
        for tok in sent.tokens:
            form = tok.form.lower()
            if form in he_forms:
                he_count += 1
            elif form in she_forms:
                she_count += 1
    if he_count > she_count:
        return PronounTag.HE
    if she_count > he_count:
        return PronounTag.SHE
    return PronounTag.UNRESOLVED


def resolve_pronouns(entries: Iterable[BiographyEntry]) -> None:
    for entry in entries:
        for language in entry.sentences:
            entry.pronouns[language] = infer_pronoun(entry, language)


def _person_forms(entry: BiographyEntry, language: str,
                  match_final_surname: bool = True) -> set[str]:
    """Token forms referring to the person: name tokens plus the resolved
    pronoun's forms. Unresolved pronouns contribute nothing."""
    forms = entry.name_tokens(language, match_final_surname)
    tag = entry.pronouns.get(language, PronounTag.UNRESOLVED)
    if tag is not PronounTag.UNRESOLVED and language in PRONOUN_FORMS:
        he_forms, she_forms = PRONOUN_FORMS[language]
        forms |= he_forms if tag is PronounTag.HE else she_forms
    return forms


def analyzable_verb_slots(entry: BiographyEntry, language: str,
                          subject_relations: frozenset[str] = SUBJECT_RELATIONS,
                          object_relations: frozenset[str] = OBJECT_RELATIONS,
                          subject_only: bool = False,
                          match_final_surname: bool = True
                          ) -> list[tuple[int, int]]:
    """(sentence index, verb token index) pairs where a person token fills a
    subject slot (or, unless subject_only, an object slot) of that verb."""
    forms = _person_forms(entry, language, match_final_surname)
    if not forms:
        return []
    relations = subject_relations if subject_only else (subject_relations | object_relations)
    hits = []
    for sent_idx, sent in enumerate(entry.sentences.get(language, [])):
        verb_indices = {t.index for t in sent.verbs()}
        for tok in sent.tokens:
            if tok.deprel in relations and tok.head in verb_indices \
                    and tok.form.lower() in forms:
                hits.append((sent_idx, tok.head))
    # one hit per (sentence, verb) even if both name and pronoun appear
    return sorted(set(hits))


def count_analyzable_sentences(entry: BiographyEntry, language: str) -> int:
    return len({sent_idx for sent_idx, _ in analyzable_verb_slots(entry, language)})


def filter_entries(entries: Iterable[BiographyEntry], languages: Sequence[str],
                   min_sentences: int = 3) -> list[BiographyEntry]:
    """Keep entries having an article in every target language with at least
    min_sentences analyzable sentences there. Boundary is inclusive."""
    kept = []
    for entry in entries:
        if not all(lang in entry.sentences for lang in languages):
            continue
        if all(count_analyzable_sentences(entry, lang) >= min_sentences
               for lang in languages):
            kept.append(entry)
    return kept


@dataclass(frozen=True)
class SovTuple:
    subject_lemma: str
    verb_lemma: str
    object_lemma: str
    frequency: int
    sample_sentences: tuple[str, ...] = ()


def load_person_nouns(path: str | Path) -> frozenset[str]:
    """One lemma per line; blank lines and #-comments skipped; lowercased."""
    nouns = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            nouns.add(line.lower())
    return frozenset(nouns)


def extract_candidate_tuples(sentences: Sequence[ParsedSentence],
                             person_nouns: frozenset[str],
                             k_verbs: int = 300, k_contexts: int = 3,
                             max_samples: int = 3,
                             subject_relations: frozenset[str] = SUBJECT_RELATIONS,
                             object_relations: frozenset[str] = OBJECT_RELATIONS
                             ) -> list[SovTuple]:
    """Rank transitive verbs by frequency, keep the top k_verbs, and for each
    keep the k_contexts most frequent (subject, object) lemma pairs that have a
    human participant (subject or object lemma in person_nouns)."""
    if any(not s.tokens for s in sentences):
        raise CorpusError("corpus contains sentences without parses")
    verb_freq: Counter[str] = Counter()
    tuple_freq: Counter[tuple[str, str, str]] = Counter()
    samples: dict[tuple[str, str, str], list[str]] = {}
    for sent in sentences:
        for verb in sent.verbs():
            children = sent.children(verb.index)
            subjects = [t for t in children if t.deprel in subject_relations]
            objects = [t for t in children if t.deprel in object_relations]
            if not subjects or not objects:
                continue
            verb_freq[verb.lemma.lower()] += 1
            for subj in subjects:
                for obj in objects:
                    s_lemma, o_lemma = subj.lemma.lower(), obj.lemma.lower()
                    if s_lemma not in person_nouns and o_lemma not in person_nouns:
                        continue
                    key = (s_lemma, verb.lemma.lower(), o_lemma)
                    tuple_freq[key] += 1
                    bucket = samples.setdefault(key, [])
                    if len(bucket) < max_samples:
                        bucket.append(sent.text)
    top_verbs = [v for v, _ in sorted(verb_freq.items(), key=lambda kv: (-kv[1], kv[0]))[:k_verbs]]
    out: list[SovTuple] = []
    for verb in top_verbs:
        candidates = [(key, n) for key, n in tuple_freq.items() if key[1] == verb]
        candidates.sort(key=lambda kn: (-kn[1], kn[0]))
        for (s, v, o), n in candidates[:k_contexts]:
            out.append(SovTuple(subject_lemma=s, verb_lemma=v, object_lemma=o,
                                frequency=n, sample_sentences=tuple(samples[(s, v, o)])))
    return out
