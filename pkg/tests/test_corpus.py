import json
import random
from collections import defaultdict

import pytest

from caa.corpus import (CONTROL_CANDIDATE, OBJECT_RELATIONS,
                        SUBJECT_RELATIONS, TREATMENT, BiographyEntry,
                        ParsedSentence, PronounTag, analyzable_verb_slots,
                        count_analyzable_sentences, extract_candidate_tuples,
                        filter_entries, infer_pronoun, load_corpus_dump,
                        load_person_nouns, parse_conllu, resolve_pronouns)
from caa.errors import CorpusError


def block(*rows):
    """rows of (form, lemma, upos, head, deprel) -> a CoNLL-U sentence block."""
    lines = []
    for i, (form, lemma, upos, head, deprel) in enumerate(rows, start=1):
        lines.append(f"{i}\t{form}\t{lemma}\t{upos}\t_\t_\t{head}\t{deprel}\t_\t_")
    return "\n".join(lines)


def sent(text, *rows):
    return ParsedSentence(text=text, tokens=parse_conllu(block(*rows)))


RESCUE = [("Serrano", "Serrano", "PROPN", 2, "nsubj"),
          ("rescued", "rescue", "VERB", 0, "root"),
          ("the", "the", "DET", 4, "det"),
          ("child", "child", "NOUN", 2, "obj")]


def person(sentences, names=("Ana Serrano",), pronoun=PronounTag.SHE,
           pid="P1", group=TREATMENT):
    entry = BiographyEntry(person_id=pid, group=group,
                           names={"en": list(names)},
                           sentences={"en": sentences})
    if pronoun is not None:
        entry.pronouns["en"] = pronoun
    return entry


class TestParseConllu:
    def test_basic_block(self):
        tokens = parse_conllu(block(*RESCUE))
        assert [t.form for t in tokens] == ["Serrano", "rescued", "the", "child"]
        assert tokens[0].head == 2 and tokens[0].deprel == "nsubj"
        assert tokens[1].upos == "VERB"

    def test_skips_comments_ranges_empty_nodes(self):
        raw = ("# text = vámonos\n"
              "1-2\tvámonos\t_\t_\t_\t_\t_\t_\t_\t_\n"
              "1\tvamos\tir\tVERB\t_\t_\t0\troot\t_\t_\n"
              "1.1\t_\t_\t_\t_\t_\t_\t_\t_\t_\n"
              "2\tnos\tnosotros\tPRON\t_\t_\t1\tobj\t_\t_\n")
        tokens = parse_conllu(raw)
        assert [t.index for t in tokens] == [1, 2]

    def test_wrong_column_count(self):
        with pytest.raises(CorpusError, match="10"):
            parse_conllu("1\tonly\tthree\n")

    def test_bad_head(self):
        with pytest.raises(CorpusError, match="head"):
            parse_conllu("1\ta\ta\tNOUN\t_\t_\tX\tnsubj\t_\t_\n")

    def test_underscore_head_is_root(self):
        tokens = parse_conllu("1\ta\ta\tNOUN\t_\t_\t_\tnsubj\t_\t_\n")
        assert tokens[0].head == 0

    def test_sentence_helpers(self):
        s = sent("Serrano rescued the child", *RESCUE)
        assert [v.lemma for v in s.verbs()] == ["rescue"]
        assert [t.form for t in s.children(2)] == ["Serrano", "child"]


class TestCorpusDump:
    def write_dump(self, tmp_path, lines):
        path = tmp_path / "corpus.jsonl"
        path.write_text("\n".join(json.dumps(l) if isinstance(l, dict) else l
                                  for l in lines) + "\n", encoding="utf-8")
        return path

    def record(self, pid="P1", language="en", group=TREATMENT, **kw):
        base = {"person_id": pid, "language": language, "group": group,
                "names": ["Ana Serrano"], "categories": [f"cat_{language}"],
                "attributes": {"nationality": "American"},
                "sentences": [{"text": "Serrano rescued the child",
                               "conllu": block(*RESCUE)}]}
        base.update(kw)
        return base

    def test_merges_languages(self, tmp_path):
        path = self.write_dump(tmp_path, [
            self.record(),
            self.record(language="es", categories=["cat_es"],
                        attributes={"nationality": "ignored", "birth": 1950})])
        entries = load_corpus_dump(path)
        assert len(entries) == 1
        entry = entries[0]
        assert entry.languages() == {"en", "es"}
        assert entry.categories == ["cat_en", "cat_es"]
        # first record wins on conflicting attribute keys
        assert entry.attributes == {"nationality": "American", "birth": 1950}

    def test_sorted_by_person_id(self, tmp_path):
        path = self.write_dump(tmp_path, [self.record(pid="B"),
                                          self.record(pid="A")])
        assert [e.person_id for e in load_corpus_dump(path)] == ["A", "B"]

    def test_collects_every_problem(self, tmp_path):
        path = self.write_dump(tmp_path, [
            self.record(),
            "{not json",
            self.record(pid="P2", group="bystander"),
            {"language": "en", "group": TREATMENT},
            self.record(group=CONTROL_CANDIDATE),
            self.record(language="en"),
        ])
        with pytest.raises(CorpusError) as exc:
            load_corpus_dump(path)
        message = str(exc.value)
        assert "line 2: invalid JSON" in message
        assert "line 3: unknown group 'bystander'" in message
        assert "line 4: missing field person_id" in message
        assert "line 5: person P1 changes group" in message
        assert "line 6: duplicate article" in message


class TestPronouns:
    def entry_with_forms(self, forms, language="en"):
        rows = [(f, f.lower(), "PRON", 0, "root") for f in forms]
        sentences = [sent(" ".join(forms), *rows)] if rows else []
        return BiographyEntry(person_id="P1", group=TREATMENT,
                              sentences={language: sentences})

    def test_majority_wins(self):
        assert infer_pronoun(self.entry_with_forms(["He", "he", "she"]),
                             "en") is PronounTag.HE
        assert infer_pronoun(self.entry_with_forms(["she", "she", "he"]),
                             "en") is PronounTag.SHE

    def test_tie_unresolved(self):
        assert infer_pronoun(self.entry_with_forms(["he", "she"]),
                             "en") is PronounTag.UNRESOLVED
        assert infer_pronoun(self.entry_with_forms([]), "en") \
            is PronounTag.UNRESOLVED

    def test_russian_case_folding(self):
        entry = self.entry_with_forms(["Он", "он", "она"], language="ru")
        assert infer_pronoun(entry, "ru") is PronounTag.HE

    def test_unknown_language(self):
        entry = self.entry_with_forms(["il", "il"], language="fr")
        assert infer_pronoun(entry, "fr") is PronounTag.UNRESOLVED

    def test_resolve_fills_every_language(self):
        entry = self.entry_with_forms(["he"])
        entry.sentences["ru"] = [sent("она пела",
                                      ("она", "она", "PRON", 2, "nsubj"),
                                      ("пела", "петь", "VERB", 0, "root"))]
        resolve_pronouns([entry])
        assert entry.pronouns == {"en": PronounTag.HE, "ru": PronounTag.SHE}


class TestVerbSlots:
    def test_subject_and_object_slots(self):
        sentences = [
            sent("Serrano rescued the child", *RESCUE),
            sent("She praised the team",
                 ("She", "she", "PRON", 2, "nsubj"),
                 ("praised", "praise", "VERB", 0, "root"),
                 ("the", "the", "DET", 4, "det"),
                 ("team", "team", "NOUN", 2, "obj")),
            sent("The mayor thanked Serrano",
                 ("The", "the", "DET", 2, "det"),
                 ("mayor", "mayor", "NOUN", 3, "nsubj"),
                 ("thanked", "thank", "VERB", 0, "root"),
                 ("Serrano", "Serrano", "PROPN", 3, "obj")),
            sent("The team celebrated",
                 ("The", "the", "DET", 2, "det"),
                 ("team", "team", "NOUN", 3, "nsubj"),
                 ("celebrated", "celebrate", "VERB", 0, "root")),
        ]
        entry = person(sentences)
        assert analyzable_verb_slots(entry, "en") == [(0, 2), (1, 2), (2, 3)]
        assert analyzable_verb_slots(entry, "en", subject_only=True) == \
            [(0, 2), (1, 2)]
        assert count_analyzable_sentences(entry, "en") == 3

    def test_surname_matching_toggle(self):
        entry = person([sent("Serrano rescued the child", *RESCUE)])
        assert analyzable_verb_slots(entry, "en") == [(0, 2)]
        assert analyzable_verb_slots(entry, "en", match_final_surname=False) == []

    def test_single_token_alias_always_matches(self):
        entry = person([sent("Cher rescued the child",
                             ("Cher", "Cher", "PROPN", 2, "nsubj"),
                             ("rescued", "rescue", "VERB", 0, "root"),
                             ("the", "the", "DET", 4, "det"),
                             ("child", "child", "NOUN", 2, "obj"))],
                       names=("Cher",))
        assert analyzable_verb_slots(entry, "en", match_final_surname=False) == \
            [(0, 2)]

    def test_unresolved_pronoun_contributes_nothing(self):
        she_sent = sent("She praised the team",
                        ("She", "she", "PRON", 2, "nsubj"),
                        ("praised", "praise", "VERB", 0, "root"),
                        ("the", "the", "DET", 4, "det"),
                        ("team", "team", "NOUN", 2, "obj"))
        entry = person([she_sent], pronoun=None)
        assert analyzable_verb_slots(entry, "en") == []
        entry.pronouns["en"] = PronounTag.SHE
        assert analyzable_verb_slots(entry, "en") == [(0, 2)]

    def test_name_and_pronoun_same_verb_deduped(self):
        s = sent("Serrano and she rescued the child",
                 ("Serrano", "Serrano", "PROPN", 4, "nsubj"),
                 ("and", "and", "CCONJ", 3, "cc"),
                 ("she", "she", "PRON", 4, "nsubj"),
                 ("rescued", "rescue", "VERB", 0, "root"),
                 ("the", "the", "DET", 6, "det"),
                 ("child", "child", "NOUN", 4, "obj"))
        entry = person([s])
        assert analyzable_verb_slots(entry, "en") == [(0, 4)]

    def test_non_verb_heads_ignored(self):
        s = sent("Serrano the hero",
                 ("Serrano", "Serrano", "PROPN", 3, "nsubj"),
                 ("the", "the", "DET", 3, "det"),
                 ("hero", "hero", "NOUN", 0, "root"))
        assert analyzable_verb_slots(person([s]), "en") == []


class TestFilterEntries:
    def entry_with_n_sentences(self, n, pid="P1", languages=("en",)):
        sentences = [sent(f"Serrano rescued the child {i}", *RESCUE)
                     for i in range(n)]
        entry = BiographyEntry(person_id=pid, group=TREATMENT,
                               names={l: ["Ana Serrano"] for l in languages},
                               sentences={l: list(sentences) for l in languages})
        return entry

    def test_boundary_inclusive_at_three(self):
        keep = self.entry_with_n_sentences(3, pid="K")
        drop = self.entry_with_n_sentences(2, pid="D")
        assert filter_entries([keep, drop], ["en"]) == [keep]

    def test_missing_language_drops(self):
        entry = self.entry_with_n_sentences(5)
        assert filter_entries([entry], ["en", "es"]) == []

    def test_counts_sentences_not_slots(self):
        # two slots in one sentence still count as one sentence
        s = sent("Serrano rescued the child and praised the team",
                 ("Serrano", "Serrano", "PROPN", 2, "nsubj"),
                 ("rescued", "rescue", "VERB", 0, "root"),
                 ("the", "the", "DET", 4, "det"),
                 ("child", "child", "NOUN", 2, "obj"),
                 ("and", "and", "CCONJ", 6, "cc"),
                 ("praised", "praise", "VERB", 2, "conj"),
                 ("she", "she", "PRON", 6, "nsubj"),
                 ("team", "team", "NOUN", 6, "obj"))
        entry = person([s])
        assert len(analyzable_verb_slots(entry, "en")) == 2
        assert count_analyzable_sentences(entry, "en") == 1


class TestExtractTuples:
    def test_person_participant_required(self):
        s1 = sent("The firefighter rescued the child",
                  ("The", "the", "DET", 2, "det"),
                  ("firefighter", "firefighter", "NOUN", 3, "nsubj"),
                  ("rescued", "rescue", "VERB", 0, "root"),
                  ("the", "the", "DET", 5, "det"),
                  ("child", "child", "NOUN", 3, "obj"))
        s2 = sent("The storm destroyed the bridge",
                  ("The", "the", "DET", 2, "det"),
                  ("storm", "storm", "NOUN", 3, "nsubj"),
                  ("destroyed", "destroy", "VERB", 0, "root"),
                  ("the", "the", "DET", 5, "det"),
                  ("bridge", "bridge", "NOUN", 3, "obj"))
        tuples = extract_candidate_tuples([s1, s2],
                                          frozenset({"firefighter", "child"}))
        assert [(t.subject_lemma, t.verb_lemma, t.object_lemma, t.frequency)
                for t in tuples] == [("firefighter", "rescue", "child", 1)]
        assert tuples[0].sample_sentences == \
            ("The firefighter rescued the child",)

    def test_unparsed_sentence_rejected(self):
        with pytest.raises(CorpusError, match="without parses"):
            extract_candidate_tuples([ParsedSentence(text="raw only")],
                                     frozenset({"child"}))

    def test_intransitive_verbs_skipped(self):
        s = sent("The child slept",
                 ("The", "the", "DET", 2, "det"),
                 ("child", "child", "NOUN", 3, "nsubj"),
                 ("slept", "sleep", "VERB", 0, "root"))
        assert extract_candidate_tuples([s], frozenset({"child"})) == []

    def test_ranking_and_truncation(self):
        def simple(subj, verb, obj):
            return sent(f"{subj} {verb} {obj}",
                        (subj, subj, "NOUN", 2, "nsubj"),
                        (verb, verb, "VERB", 0, "root"),
                        (obj, obj, "NOUN", 2, "obj"))
        sentences = ([simple("man", "praise", "woman")] * 3
                     + [simple("man", "praise", "child")] * 1
                     + [simple("woman", "blame", "man")] * 2
                     + [simple("man", "assist", "woman")] * 2)
        nouns = frozenset({"man", "woman", "child"})
        tuples = extract_candidate_tuples(sentences, nouns, k_verbs=2,
                                          k_contexts=1)
        # praise (4 uses) and assist/blame tie at 2; lemma order keeps assist
        assert [(t.verb_lemma, t.frequency) for t in tuples] == \
            [("praise", 3), ("assist", 2)]

    def test_sample_sentence_cap(self):
        s = sent("man praise woman",
                 ("man", "man", "NOUN", 2, "nsubj"),
                 ("praise", "praise", "VERB", 0, "root"),
                 ("woman", "woman", "NOUN", 2, "obj"))
        tuples = extract_candidate_tuples([s] * 5, frozenset({"man"}),
                                          max_samples=2)
        assert tuples[0].frequency == 5
        assert len(tuples[0].sample_sentences) == 2

    def test_matches_bruteforce_oracle(self):
        rng = random.Random(12)
        nouns = ["man", "woman", "leader", "storm", "city"]
        verbs = ["praise", "blame", "assist", "follow"]
        person_nouns = frozenset({"man", "woman", "leader"})

        def simple(subj, verb, obj):
            return sent(f"{subj} {verb} {obj}",
                        (subj, subj, "NOUN", 2, "nsubj"),
                        (verb, verb, "VERB", 0, "root"),
                        (obj, obj, "NOUN", 2, "obj"))

        sentences = [simple(rng.choice(nouns), rng.choice(verbs),
                            rng.choice(nouns)) for _ in range(60)]

        verb_freq = defaultdict(int)
        tup_freq = defaultdict(int)
        for s in sentences:
            subj, verb, obj = (t.lemma for t in s.tokens)
            verb_freq[verb] += 1
            if subj in person_nouns or obj in person_nouns:
                tup_freq[(subj, verb, obj)] += 1
        expected = []
        ranked_verbs = sorted(verb_freq, key=lambda v: (-verb_freq[v], v))[:2]
        for v in ranked_verbs:
            per_verb = sorted((k for k in tup_freq if k[1] == v),
                              key=lambda k: (-tup_freq[k], k))[:3]
            expected.extend((k, tup_freq[k]) for k in per_verb)

        got = extract_candidate_tuples(sentences, person_nouns,
                                       k_verbs=2, k_contexts=3)
        assert [((t.subject_lemma, t.verb_lemma, t.object_lemma), t.frequency)
                for t in got] == expected


class TestPersonNouns:
    def test_load(self, tmp_path):
        path = tmp_path / "nouns.txt"
        path.write_text("# people words\nMan\nwoman  \n\nchild # inline\n",
                        encoding="utf-8")
        assert load_person_nouns(path) == frozenset({"man", "woman", "child"})


class TestFixtureCorpus:
    def test_load_and_filter(self, fixtures_dir):
        entries = load_corpus_dump(fixtures_dir / "corpus.jsonl")
        assert len(entries) == 22
        groups = {e.group for e in entries}
        assert groups == {TREATMENT, CONTROL_CANDIDATE}
        resolve_pronouns(entries)
        kept = filter_entries(entries, ("en", "es"))
        assert len(kept) == 20
        dropped = {e.person_id for e in entries} - {e.person_id for e in kept}
        assert dropped == {"X01", "X02"}
