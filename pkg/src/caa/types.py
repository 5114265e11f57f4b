"""Core domain types: affective dimensions, judgements, instances, lexicons."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

# Aggregated scores at or beyond +/- this value are polar (closed interval).
TERNARY_THRESHOLD = 0.35


class Dimension(enum.Enum):
    """The four annotated connotation dimensions of a verb in context."""

    POWER = "power"
    AGENCY = "agency"
    SENT_SUBJ = "sent_subj"
    SENT_OBJ = "sent_obj"

    @classmethod
    def parse(cls, text: str) -> "Dimension":
        key = text.strip().lower().replace("(", "_").replace(")", "").replace("-", "_")
        aliases = {
            "power": cls.POWER,
            "agency": cls.AGENCY,
            "sent_subj": cls.SENT_SUBJ,
            "sentsubj": cls.SENT_SUBJ,
            "sentiment_subject": cls.SENT_SUBJ,
            "sent_obj": cls.SENT_OBJ,
            "sentobj": cls.SENT_OBJ,
            "sentiment_object": cls.SENT_OBJ,
        }
        if key not in aliases:
            raise ValueError(f"unknown dimension {text!r}")
        return aliases[key]

    def __str__(self) -> str:
        return self.value


# Sent(obj) is omitted from entity scoring: people rarely fill object slots.
SCORED_DIMENSIONS = (Dimension.SENT_SUBJ, Dimension.POWER, Dimension.AGENCY)


class TernaryLabel(enum.IntEnum):
    NEGATIVE = -1
    NEUTRAL = 0
    POSITIVE = 1

    @classmethod
    def from_value(cls, value: int) -> "TernaryLabel":
        return cls(int(value))


def ternarize(score: float, threshold: float = TERNARY_THRESHOLD) -> TernaryLabel:
    """Map an aggregated score in [-1, 1] to a ternary label.

    Positive on [threshold, 1], negative on [-1, -threshold], neutral on the
    open interval in between: a score of exactly +/-threshold is polar.
    """
    if not math.isfinite(score):
        raise ValueError(f"score must be finite, got {score}")
    if score >= threshold:
        return TernaryLabel.POSITIVE
    if score <= -threshold:
        return TernaryLabel.NEGATIVE
    return TernaryLabel.NEUTRAL


def validate_language(code: str) -> str:
    """Check an ISO 639-1 code: exactly two lowercase ASCII letters."""
    if len(code) != 2 or not code.isascii() or not code.isalpha() or code != code.lower():
        raise ValueError(f"language code must be two lowercase letters, got {code!r}")
    return code


@dataclass(frozen=True)
class Judgement:
    """One annotator's answer for one instance, mapped onto {-1, 0, +1}."""

    annotator_id: str
    value: int

    def __post_init__(self):
        if not self.annotator_id:
            raise ValueError("annotator_id must be non-empty")
        if self.value not in (-1, 0, 1):
            raise ValueError(f"judgement value must be in {{-1, 0, +1}}, got {self.value}")


@dataclass
class ConnotationInstance:
    """A verb in a concrete context with its judgements on one dimension."""

    instance_id: str
    verb_lemma: str
    context_sentence: str
    verb_token_index: int
    language: str
    dimension: Dimension
    judgements: list[Judgement] = field(default_factory=list)
    aggregate_score: float | None = None
    label: TernaryLabel | None = None

    def validate(self) -> None:
        if self.verb_token_index < 0:
            raise ValueError(f"{self.instance_id}: verb_token_index must be >= 0")
        validate_language(self.language)
        seen: set[str] = set()
        for j in self.judgements:
            if j.annotator_id in seen:
                raise ValueError(
                    f"{self.instance_id}: duplicate judgement from annotator {j.annotator_id!r}"
                )
            seen.add(j.annotator_id)
        if self.aggregate_score is not None:
            if not self.judgements:
                raise ValueError(f"{self.instance_id}: aggregate_score set without judgements")
            mean = sum(j.value for j in self.judgements) / len(self.judgements)
            if abs(self.aggregate_score - mean) > 1e-9:
                raise ValueError(
                    f"{self.instance_id}: aggregate_score {self.aggregate_score} != "
                    f"mean of judgements {mean}"
                )
            if self.label is not None and self.label != ternarize(self.aggregate_score):
                raise ValueError(
                    f"{self.instance_id}: label {self.label} inconsistent with "
                    f"score {self.aggregate_score}"
                )

    def copy(self) -> "ConnotationInstance":
        return replace(self, judgements=list(self.judgements))


@dataclass
class Lexicon:
    """All instances for one (language, dimension), plus provenance notes."""

    language: str
    dimension: Dimension
    instances: list[ConnotationInstance] = field(default_factory=list)
    provenance: str = ""

    def validate(self) -> None:
        validate_language(self.language)
        seen: set[str] = set()
        for inst in self.instances:
            if inst.language != self.language or inst.dimension != self.dimension:
                raise ValueError(
                    f"instance {inst.instance_id} is ({inst.language}, {inst.dimension}), "
                    f"lexicon is ({self.language}, {self.dimension})"
                )
            if inst.instance_id in seen:
                raise ValueError(f"duplicate instance_id {inst.instance_id!r}")
            seen.add(inst.instance_id)
            inst.validate()

    def __len__(self) -> int:
        return len(self.instances)
