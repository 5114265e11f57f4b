"""Paired t statistics shared by the evaluation harness and the diff reports."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from scipy import stats


@dataclass(frozen=True)
class PairedTResult:
    mean_diff: float
    t: float
    p: float
    df: int
    ci_low: float
    ci_high: float
    zero_variance: bool
    n: int


def paired_t(diffs: Sequence[float], confidence: float = 0.95) -> PairedTResult:
    """Two-sided paired t-test on precomputed differences, df = n − 1.

    Zero sample variance is flagged; by sign convention p is exactly 1.0 for a
    zero mean and 0.0 otherwise, with t reported as 0 or signed infinity.
    """
    n = len(diffs)
    if n < 2:
        raise ValueError(f"need at least 2 paired differences, got {n}")
    df = n - 1
    # exact comparison, not computed variance: fsum(n*d)/n can differ from d
    if all(d == diffs[0] for d in diffs):
        mean = diffs[0]
        if mean == 0.0:
            return PairedTResult(mean_diff=0.0, t=0.0, p=1.0, df=df, ci_low=0.0,
                                 ci_high=0.0, zero_variance=True, n=n)
        t = math.copysign(math.inf, mean)
        return PairedTResult(mean_diff=mean, t=t, p=0.0, df=df, ci_low=mean,
                             ci_high=mean, zero_variance=True, n=n)
    mean = math.fsum(diffs) / n
    var = math.fsum((d - mean) ** 2 for d in diffs) / (n - 1)
    se = math.sqrt(var / n)
    t = mean / se
    p = 2.0 * stats.t.sf(abs(t), df)
    tcrit = stats.t.ppf(0.5 + confidence / 2.0, df)
    return PairedTResult(mean_diff=mean, t=t, p=float(p), df=df,
                         ci_low=mean - tcrit * se, ci_high=mean + tcrit * se,
                         zero_variance=False, n=n)
