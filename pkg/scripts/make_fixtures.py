#!/usr/bin/env python3
"""Regenerate the committed test fixtures under tests/fixtures/.

Everything is seeded; rerunning must reproduce the same bytes. The synthetic
world: three ternary affect axes encoded in disjoint 5-dim blocks of a 16-dim
embedding space, annotation instances with 3 noisy annotators, and a 22-person
two-language biography corpus (20 survive the analyzability filter).
"""

from __future__ import annotations

import csv
import random
import sys
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from caa.corpus import load_corpus_dump, resolve_pronouns, filter_entries  # noqa: E402
from caa.features import FeatureFile, FeatureHeader, FeatureRecord, write_features  # noqa: E402
from caa.lexicon import (aggregate_and_ternarize, filter_annotators,  # noqa: E402
                         ingest_annotation_file)
from caa.scoring import feature_key, select_sentences  # noqa: E402
from caa.types import Dimension, ternarize  # noqa: E402

FIXTURES = ROOT / "tests" / "fixtures"
DATA = ROOT / "data"
DIM = 16
ENCODER = "fixture-encoder-v1"
LANGS = ("en", "es")
BLOCK = {Dimension.POWER: 0, Dimension.AGENCY: 5,
         Dimension.SENT_SUBJ: 10, Dimension.SENT_OBJ: 10}
LABELS = (-1, 0, 1)

EN_VERBS = ["praise", "condemn", "lead", "follow", "rescue",
            "betray", "support", "ignore", "inspire", "dismiss"]
ES_VERBS = ["elogiar", "condenar", "dirigir", "seguir", "rescatar",
            "traicionar", "apoyar", "ignorar", "inspirar", "descartar"]


def class_means(rng: np.random.Generator) -> dict:
    """One 5-dim mean per (language, dimension, label), block-embedded."""
    mu = {}
    for lang in LANGS:
        for dim in (Dimension.POWER, Dimension.AGENCY, Dimension.SENT_SUBJ,
                    Dimension.SENT_OBJ):
            for label in LABELS:
                mu[(lang, dim, label)] = rng.normal(size=5) * 2.0
    return mu


def embed(mu: dict, lang: str, labels: dict, rng: np.random.Generator,
          noise: float) -> np.ndarray:
    """Compose a 16-dim vector carrying one label per scorable dimension."""
    vec = rng.normal(size=DIM) * noise
    for dim in (Dimension.POWER, Dimension.AGENCY, Dimension.SENT_SUBJ):
        off = BLOCK[dim]
        vec[off:off + 5] += mu[(lang, dim, labels[dim])]
    return vec


def annotation_rows(rng: random.Random) -> list[dict]:
    """Noisy 3-annotator judgements over 30 instances per (language, dimension)."""
    rows = []
    annotators = {"en": ["a1", "a2", "a3"], "es": ["b1", "b2", "b3"]}
    dims = {"en": [Dimension.POWER, Dimension.AGENCY, Dimension.SENT_SUBJ,
                   Dimension.SENT_OBJ],
            "es": [Dimension.POWER, Dimension.AGENCY, Dimension.SENT_SUBJ]}
    verbs = {"en": EN_VERBS, "es": ES_VERBS}
    for lang in LANGS:
        for dim in dims[lang]:
            for i in range(30):
                verb = verbs[lang][i % 10]
                inst = f"{lang}_{dim.value}_{i:03d}"
                latent = rng.choice(LABELS)
                judgements = []
                for ann in annotators[lang]:
                    value = latent if rng.random() > 0.15 \
                        else rng.choice([l for l in LABELS if l != latent])
                    judgements.append((ann, value))
                for ann, value in judgements:
                    rows.append({
                        "instance_id": inst, "language": lang,
                        "dimension": dim.value, "verb_lemma": verb,
                        "sentence": f"the agent did {verb} the patient ({i})",
                        "verb_token_index": 3, "annotator_id": ann,
                        "judgement": str(value)})
    return rows


def write_annotations(rows, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)


def conllu(tokens) -> str:
    """tokens: (form, lemma, upos, head, deprel) with 1-based heads, 0 = root."""
    lines = []
    for i, (form, lemma, upos, head, deprel) in enumerate(tokens, start=1):
        lines.append(f"{i}\t{form}\t{lemma}\t{upos}\t_\t_\t{head}\t{deprel}\t_\t_")
    return "\n".join(lines)


def svo(subj_form, subj_lemma, subj_upos, verb_form, verb_lemma,
        det, obj_form, obj_lemma):
    tokens = [(subj_form, subj_lemma, subj_upos, 2, "nsubj"),
              (verb_form, verb_lemma, "VERB", 0, "root"),
              (det, det.lower(), "DET", 4, "det"),
              (obj_form, obj_lemma, "NOUN", 2, "obj")]
    return {"text": " ".join(t[0] for t in tokens), "conllu": conllu(tokens)}


def ovs(det, subj_form, subj_lemma, verb_form, verb_lemma, obj_form, obj_lemma):
    """Person in the object slot: 'The board honored X'."""
    tokens = [(det, det.lower(), "DET", 2, "det"),
              (subj_form, subj_lemma, "NOUN", 3, "nsubj"),
              (verb_form, verb_lemma, "VERB", 0, "root"),
              (obj_form, obj_lemma, "PROPN", 3, "obj")]
    return {"text": " ".join(t[0] for t in tokens), "conllu": conllu(tokens)}


PEOPLE = [
    # (pid, group, surname, gender, nationality, birth_year, occupation)
    ("T01", "treatment", "Romero", "she", "American", 1965, "entertainer"),
    ("T02", "treatment", "Calder", "he", "American", 1948, "artist"),
    ("T03", "treatment", "Ibsen", "he", "Norwegian", 1890, "writer"),
    ("T04", "treatment", "Quiros", "she", "Spanish", 1972, "entertainer"),
    ("T05", "treatment", "Malek", "he", "American", 1981, "politician"),
    ("T06", "treatment", "Sandoval", "she", "Mexican", 1955, "artist"),
    ("T07", "treatment", "Brandt", "he", "German", 1895, "writer"),
    ("T08", "treatment", "Okafor", "she", "American", 1990, "entertainer"),
    ("C01", "control_candidate", "Whitfield", "he", "American", 1962, "entertainer"),
    ("C02", "control_candidate", "Arnesen", "she", "Norwegian", 1950, "artist"),
    ("C03", "control_candidate", "Duarte", "he", "Spanish", 1888, "writer"),
    ("C04", "control_candidate", "Kessler", "she", "American", 1975, "entertainer"),
    ("C05", "control_candidate", "Varga", "he", "Hungarian", 1983, "politician"),
    ("C06", "control_candidate", "Pineda", "she", "Mexican", 1958, "artist"),
    ("C07", "control_candidate", "Lindqvist", "he", "Swedish", 1893, "writer"),
    ("C08", "control_candidate", "Moss", "she", "American", 1988, "entertainer"),
    ("C09", "control_candidate", "Abara", "he", "American", 1970, "politician"),
    ("C10", "control_candidate", "Reyes", "she", "Spanish", 1940, "entertainer"),
    ("C11", "control_candidate", "Holt", "he", "American", 1935, "artist"),
    ("C12", "control_candidate", "Natsuki", "she", "Japanese", 1979, "writer"),
    # Filtered out downstream: X01 lacks a Spanish page, X02 has too few
    # analyzable Spanish sentences.
    ("X01", "control_candidate", "Orlov", "he", "Russian", 1960, "writer"),
    ("X02", "control_candidate", "Tanaka", "she", "Japanese", 1968, "artist"),
]

OCCUPATION_CATEGORY = {
    "entertainer": "Television entertainers",
    "artist": "Contemporary painters",
    "writer": "Essayists",
    "politician": "Municipal politicians",
}

LGBT_CATEGORIES = ["LGBT entertainers", "LGBT artists", "LGBT writers",
                   "LGBT politicians", "Lesbian musicians", "Gay politicians"]

EN_SUBJ = [("led", "lead", "the", "team", "team"),
           ("praised", "praise", "the", "committee", "committee"),
           ("challenged", "challenge", "the", "board", "board"),
           ("defended", "defend", "the", "policy", "policy")]
ES_SUBJ = [("dirigió", "dirigir", "el", "equipo", "equipo"),
           ("elogió", "elogiar", "el", "comité", "comité"),
           ("desafió", "desafiar", "el", "consejo", "consejo"),
           ("defendió", "defender", "la", "política", "política")]
PRONOUN = {("en", "he"): ("He", "he"), ("en", "she"): ("She", "she"),
           ("es", "he"): ("Él", "él"), ("es", "she"): ("Ella", "ella")}


def person_sentences(lang: str, surname: str, gender: str, rng: random.Random,
                     n_subject: int = 4, with_object: bool = True):
    """n_subject subject-slot sentences (half via pronoun), one object-slot
    sentence, and one sentence mentioning nobody."""
    patterns = EN_SUBJ if lang == "en" else ES_SUBJ
    pro_form, pro_lemma = PRONOUN[(lang, gender)]
    sents = []
    for k in range(n_subject):
        verb_form, verb_lemma, det, obj, obj_lemma = patterns[(k + rng.randrange(4)) % 4]
        if k % 2 == 0:
            sents.append(svo(surname, surname.lower(), "PROPN",
                             verb_form, verb_lemma, det, obj, obj_lemma))
        else:
            sents.append(svo(pro_form, pro_lemma, "PRON",
                             verb_form, verb_lemma, det, obj, obj_lemma))
    if with_object:
        if lang == "en":
            sents.append(ovs("The", "board", "board", "honored", "honor",
                             surname, surname.lower()))
        else:
            sents.append(ovs("El", "consejo", "consejo", "honró", "honrar",
                             surname, surname.lower()))
    # filler with common-noun humans, feeds tuple extraction
    if lang == "en":
        sents.append({"text": "The mayor thanked the volunteers",
                      "conllu": conllu([("The", "the", "DET", 2, "det"),
                                        ("mayor", "mayor", "NOUN", 3, "nsubj"),
                                        ("thanked", "thank", "VERB", 0, "root"),
                                        ("the", "the", "DET", 5, "det"),
                                        ("volunteers", "volunteer", "NOUN", 3, "obj")])})
    else:
        sents.append({"text": "El alcalde agradeció a los voluntarios",
                      "conllu": conllu([("El", "el", "DET", 2, "det"),
                                        ("alcalde", "alcalde", "NOUN", 3, "nsubj"),
                                        ("agradeció", "agradecer", "VERB", 0, "root"),
                                        ("a", "a", "ADP", 6, "case"),
                                        ("los", "el", "DET", 6, "det"),
                                        ("voluntarios", "voluntario", "NOUN", 3, "obj")])})
    return sents


def build_corpus(rng: random.Random) -> list[dict]:
    base_pool = ["Living people", "University alumni", "Radio personalities",
                 "Award winners", "Expatriate authors", "Stage actors",
                 "Column writers", "Festival founders"]
    records = []
    for pid, group, surname, gender, nationality, birth_year, occupation in PEOPLE:
        cats = ["Living people" if birth_year > 1930 else "19th-century people",
                OCCUPATION_CATEGORY[occupation],
                f"{nationality} {occupation}s"]
        cats += rng.sample(base_pool, 2)
        if group == "treatment":
            cats += rng.sample(LGBT_CATEGORIES, 2)
        langs = ("en",) if pid == "X01" else LANGS
        for lang in langs:
            if pid == "X02" and lang == "es":
                sents = person_sentences(lang, surname, gender, rng, n_subject=2,
                                         with_object=False)
            else:
                sents = person_sentences(lang, surname, gender, rng)
            records.append({
                "person_id": pid, "language": lang, "group": group,
                "names": [f"{'Ana' if gender == 'she' else 'Leo'} {surname}"],
                "categories": cats,
                "attributes": {"nationality": nationality,
                               "birth_year": birth_year,
                               "occupation": occupation},
                "sentences": sents})
    return records


def latent_slot_labels(group: str, rng: random.Random) -> dict:
    """Treatment articles skew positive on every axis; controls sit lower."""
    if group == "treatment":
        weights = {Dimension.POWER: ([1, 0, -1], [0.6, 0.3, 0.1]),
                   Dimension.AGENCY: ([1, 0, -1], [0.5, 0.4, 0.1]),
                   Dimension.SENT_SUBJ: ([1, 0, -1], [0.45, 0.35, 0.2])}
    else:
        weights = {Dimension.POWER: ([1, 0, -1], [0.25, 0.5, 0.25]),
                   Dimension.AGENCY: ([1, 0, -1], [0.25, 0.45, 0.3]),
                   Dimension.SENT_SUBJ: ([1, 0, -1], [0.3, 0.4, 0.3])}
    return {dim: rng.choices(vals, probs)[0]
            for dim, (vals, probs) in weights.items()}


def main() -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)
    (FIXTURES / "features").mkdir(exist_ok=True)
    DATA.mkdir(exist_ok=True)
    rng = random.Random(20260814)
    nrng = np.random.default_rng(20260814)
    mu = class_means(nrng)

    rows = annotation_rows(rng)
    write_annotations(rows, FIXTURES / "annotations.csv")
    lexicons = ingest_annotation_file(FIXTURES / "annotations.csv")
    filtered, report = filter_annotators(lexicons)
    aggregated = [aggregate_and_ternarize(lex) for lex in filtered]
    gold = {inst.instance_id: int(inst.label)
            for lex in aggregated for inst in lex.instances}

    # annotation features, one file per (language, dimension); vectors encode
    # the post-filter aggregate labels so classifiers can recover them
    for lex in aggregated:
        recs = []
        for inst in lex.instances:
            labels = {d: rng.choice(LABELS) for d in BLOCK}
            labels[lex.dimension] = gold[inst.instance_id]
            if lex.dimension is Dimension.SENT_OBJ:
                # block 10:15 must carry this file's own signal
                labels[Dimension.SENT_SUBJ] = gold[inst.instance_id]
                vec = nrng.normal(size=DIM) * 0.3
                for d in (Dimension.POWER, Dimension.AGENCY):
                    vec[BLOCK[d]:BLOCK[d] + 5] += mu[(lex.language, d, labels[d])]
                vec[10:15] += mu[(lex.language, Dimension.SENT_OBJ,
                                  gold[inst.instance_id])]
            else:
                vec = embed(mu, lex.language, labels, nrng, noise=0.3)
            recs.append(FeatureRecord(key=inst.instance_id, language=lex.language,
                                      vector=vec.astype(np.float32)))
        ffile = FeatureFile(header=FeatureHeader(dim=DIM, language=lex.language,
                                                 encoder=ENCODER), records=recs)
        write_features(ffile, FIXTURES / "features" /
                       f"{lex.language}_{lex.dimension.value}.bin")

    # machine-translated Spanish instances: English-space vectors, noisier,
    # with a slice of corrupted labels so the MT route scores worse
    for lex in aggregated:
        if lex.language != "es":
            continue
        recs = []
        for inst in lex.instances:
            label = gold[inst.instance_id]
            if rng.random() < 0.25:
                label = rng.choice([l for l in LABELS if l != label])
            labels = {d: rng.choice(LABELS) for d in BLOCK}
            labels[lex.dimension] = label
            vec = embed(mu, "en", labels, nrng, noise=0.7)
            recs.append(FeatureRecord(key=inst.instance_id, language="es",
                                      vector=vec.astype(np.float32)))
        ffile = FeatureFile(header=FeatureHeader(dim=DIM, language="es",
                                                 encoder=ENCODER,
                                                 extra={"route": "translated"}),
                            records=recs)
        write_features(ffile, FIXTURES / "features" /
                       f"translated_es_{lex.dimension.value}.bin")

    # corpus dump + per-language corpus features over subject-slot verbs
    records = build_corpus(rng)
    dump_path = FIXTURES / "corpus.jsonl"
    import json
    with open(dump_path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")
    entries = load_corpus_dump(dump_path)
    resolve_pronouns(entries)
    kept = filter_entries(entries, LANGS)
    assert len(kept) == 20, f"expected 20 kept entries, got {len(kept)}"
    for lang in LANGS:
        recs = []
        for entry in kept:
            for sent_idx, verb_idx in select_sentences(entry, lang):
                labels = latent_slot_labels(entry.group, rng)
                vec = embed(mu, lang, labels, nrng, noise=0.25)
                recs.append(FeatureRecord(
                    key=feature_key(entry.person_id, lang, sent_idx, verb_idx),
                    language=lang, vector=vec.astype(np.float32)))
        ffile = FeatureFile(header=FeatureHeader(dim=DIM, language=lang,
                                                 encoder=ENCODER,
                                                 extra={"route": "corpus"}),
                            records=recs)
        write_features(ffile, FIXTURES / "features" / f"corpus_{lang}.bin")

    # translation table: Spanish to English verb lemmas
    with open(FIXTURES / "translations_es_en.csv", "w", newline="",
              encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["source_lemma", "source_language", "target_lemma",
                         "accepted_flag"])
        for es, en in zip(ES_VERBS, EN_VERBS):
            accepted = es not in ("traicionar", "descartar")
            writer.writerow([es, "es", en, str(accepted).lower()])

    (FIXTURES / "pipeline.cfg").write_text(
        "[pipeline]\n"
        "languages = en, es\n"
        "seed = 7\n"
        "n_folds = 5\n"
        "\n"
        "[classifier]\n"
        "l2 = 1e-4\n"
        "class_weight_grid = 1, 2\n"
        "max_iter = 400\n"
        "\n"
        "[scoring]\n"
        "min_verbs = 10\n"
        "top_k = 5\n",
        encoding="utf-8")

    # repo data files (shipped, editable)
    (DATA / "lgbt_category_exclusions.txt").write_text(
        "# Categories marking LGBT group membership; stripped before\n"
        "# TF-IDF weighting so matching balances on everything else.\n"
        + "\n".join(LGBT_CATEGORIES + ["LGBT rights activists",
                                       "Bisexual writers",
                                       "Transgender entertainers"]) + "\n",
        encoding="utf-8")
    (DATA / "person_nouns_en.txt").write_text(
        "\n".join(["mayor", "volunteer", "firefighter", "boy", "leader",
                   "critic", "teacher", "nurse"]) + "\n", encoding="utf-8")
    (DATA / "person_nouns_es.txt").write_text(
        "\n".join(["alcalde", "voluntario", "bombero", "niño", "líder",
                   "crítico", "maestro", "enfermera"]) + "\n", encoding="utf-8")
    print(f"fixtures written under {FIXTURES}")


if __name__ == "__main__":
    main()
