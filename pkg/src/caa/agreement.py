"""Inter-annotator agreement: Krippendorff's alpha and pairwise agreement."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .types import Lexicon


@dataclass
class AlphaResult:
    alpha: float
    degenerate: bool  # True when expected disagreement is zero (alpha forced to 1)
    observed_disagreement: float
    expected_disagreement: float
    n_pairable: int


def _units_from_lexicon(lexicon: Lexicon) -> list[list[float]]:
    return [[float(j.value) for j in inst.judgements]
            for inst in lexicon.instances if len(inst.judgements) >= 2]


def _delta_matrix(values: np.ndarray, metric: str) -> np.ndarray:
    diff = values[:, None] - values[None, :]
    if metric == "interval":
        return diff ** 2
    if metric == "nominal":
        return (diff != 0).astype(float)
    raise ValueError(f"unknown metric {metric!r} (expected 'interval' or 'nominal')")


def alpha_details(units: Iterable[Sequence[float]], metric: str = "interval") -> AlphaResult:
    """Krippendorff's alpha over reliability units via the coincidence matrix.

    Each unit is the list of values assigned to one item; units with fewer
    than two values are ignored. With zero expected disagreement the formula
    is undefined and we report alpha = 1.0 with the degenerate flag set.
    """
    units = [list(u) for u in units if len(u) >= 2]
    if len(units) < 2:
        raise ValueError("need at least two units with two or more judgements")

    values = np.array(sorted({v for u in units for v in u}), dtype=float)
    index = {v: i for i, v in enumerate(values)}
    k = len(values)

    coincidence = np.zeros((k, k))
    for unit in units:
        m = len(unit)
        for a, b in combinations(range(m), 2):
            ia, ib = index[unit[a]], index[unit[b]]
            # each unordered pair contributes both ordered coincidences
            coincidence[ia, ib] += 1.0 / (m - 1)
            coincidence[ib, ia] += 1.0 / (m - 1)

    n = coincidence.sum()
    margins = coincidence.sum(axis=1)
    delta = _delta_matrix(values, metric)

    observed = float((coincidence * delta).sum() / n)
    expected = float((np.outer(margins, margins) * delta).sum() / (n * (n - 1.0)))
    if expected == 0.0:
        return AlphaResult(1.0, True, observed, expected, int(round(n)))
    return AlphaResult(1.0 - observed / expected, False, observed, expected, int(round(n)))


def krippendorff_alpha(lexicon: Lexicon, metric: str = "interval") -> float:
    """Alpha for a lexicon's judgements; interval metric over {-1, 0, +1} by default."""
    return alpha_details(_units_from_lexicon(lexicon), metric).alpha


def krippendorff_alpha_values(units: Iterable[Sequence[float]],
                              metric: str = "interval") -> float:
    return alpha_details(units, metric).alpha


def pairwise_agreement(lexicon: Lexicon, ignore_neutral_conflicts: bool = False) -> float:
    """Mean over instances of the fraction of agreeing annotator pairs.

    With ignore_neutral_conflicts, a (0, +/-1) pair counts as agreement and
    only polar-opposite (+1, -1) pairs count as disagreement.
    """
    fractions = []
    for inst in lexicon.instances:
        vals = [j.value for j in inst.judgements]
        if len(vals) < 2:
            continue
        pairs = list(combinations(vals, 2))
        if ignore_neutral_conflicts:
            agree = sum(1 for a, b in pairs if {a, b} != {-1, 1})
        else:
            agree = sum(1 for a, b in pairs if a == b)
        fractions.append(agree / len(pairs))
    if not fractions:
        raise ValueError("no instances with two or more judgements")
    return float(np.mean(fractions))
