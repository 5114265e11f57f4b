from pathlib import Path

import pytest

from caa.types import ConnotationInstance, Dimension, Judgement, Lexicon

FIXTURES = Path(__file__).parent / "fixtures"


def make_instance(instance_id: str, values, verb: str = "praise",
                  language: str = "en", dimension: Dimension = Dimension.POWER,
                  annotators=None) -> ConnotationInstance:
    annotators = annotators or [f"ann{k}" for k in range(len(values))]
    return ConnotationInstance(
        instance_id=instance_id, verb_lemma=verb,
        context_sentence=f"they {verb} the crowd", verb_token_index=1,
        language=language, dimension=dimension,
        judgements=tuple(Judgement(annotator_id=a, value=v)
                         for a, v in zip(annotators, values)))


def make_lexicon(value_rows, language: str = "en",
                 dimension: Dimension = Dimension.POWER, verbs=None) -> Lexicon:
    """value_rows: list of judgement-value lists, one per instance."""
    verbs = verbs or ["praise"] * len(value_rows)
    instances = [make_instance(f"{language}_{dimension.value}_{i:03d}", row,
                               verb=verbs[i], language=language, dimension=dimension)
                 for i, row in enumerate(value_rows)]
    return Lexicon(language=language, dimension=dimension,
                   instances=tuple(instances), provenance="test")


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES
