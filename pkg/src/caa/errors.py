"""Shared exception types for the pipeline."""

from __future__ import annotations


class CaaError(Exception):
    """Base class for all pipeline errors."""


class IngestError(CaaError):
    """Raised when annotation rows cannot be turned into a lexicon.

    Carries every offending row so callers can report all problems at once.
    """

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class AggregationError(CaaError):
    """An instance cannot be aggregated (e.g. fewer than two judgements)."""


class ContextError(CaaError):
    """Lexicon is not in the state a context-analysis operation requires."""


class FeatureFormatError(CaaError):
    """Malformed feature file. ``record_index`` is None for header problems."""

    def __init__(self, message: str, record_index: int | None = None):
        self.record_index = record_index
        if record_index is not None:
            message = f"record {record_index}: {message}"
        super().__init__(message)


class TrainingError(CaaError):
    """Classifier training cannot proceed or diverged."""


class EvaluationError(CaaError):
    """Evaluation harness input problem (missing data, key mismatch)."""


class CorpusError(CaaError):
    """Corpus dump or parse input problem."""


class MatchingError(CaaError):
    """Control matching cannot proceed."""


class ScoringError(CaaError):
    """Entity scoring input problem (e.g. missing feature records)."""


class SubgroupTooSmall(CaaError):
    """A subgroup fails the minimum-verb guard for difference reports."""

    def __init__(self, subgroup: str, total_verbs: int, min_verbs: int, n_pairs: int):
        self.subgroup = subgroup
        self.total_verbs = total_verbs
        self.min_verbs = min_verbs
        self.n_pairs = n_pairs
        super().__init__(
            f"subgroup {subgroup!r} has {total_verbs} verbs over {n_pairs} pairs; "
            f"need at least {min_verbs} verbs for a reliable report"
        )


class ConfigError(CaaError):
    """Invalid pipeline configuration. Lists every problem found."""

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("\n".join(self.problems))
