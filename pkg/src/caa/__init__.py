"""Multilingual contextual affect analysis: verb connotation lexicons,
cross-lingual ternary classifiers, and paired corpus affect reports."""

from .types import (Dimension, Judgement, ConnotationInstance, Lexicon,
                    TernaryLabel, TERNARY_THRESHOLD, ternarize)

__version__ = "0.1.0"

__all__ = ["Dimension", "Judgement", "ConnotationInstance", "Lexicon",
           "TernaryLabel", "TERNARY_THRESHOLD", "ternarize", "__version__"]
