"""Goodness-of-fit helpers used by the experiment harness."""

from __future__ import annotations

import numpy as np
from scipy import stats


def loglog_slope(x, y) -> float:
    """Least-squares slope of log y against log x."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(x <= 0) or np.any(y <= 0):
        return float("nan")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def ks_pvalue(a, b) -> float:
    return float(stats.ks_2samp(a, b).pvalue)


def poisson_chisquare(counts, mean: float, min_expected: float = 5.0):
    """Chi-square goodness of fit of integer counts to Poisson(mean).

    Neighbouring values are pooled until every bin expects at least
    ``min_expected`` observations; both tails are folded into the end bins.
    Returns ``(statistic, p_value, bins)``.
    """
    counts = np.asarray(counts, dtype=np.int64)
    n = counts.size
    lo = int(stats.poisson.ppf(1e-9, mean))
    hi = int(stats.poisson.isf(1e-9, mean)) + 1
    edges = [lo]
    acc = 0.0
    for k in range(lo, hi):
        acc += n * stats.poisson.pmf(k, mean)
        if acc >= min_expected:
            edges.append(k + 1)
            acc = 0.0
    if edges[-1] != hi:
        edges[-1] = hi
    # bin j holds values in [edges[j], edges[j+1]); tails join the end bins
    inner = np.asarray(edges[1:-1])
    idx = np.searchsorted(inner, counts, side="right")
    observed = np.bincount(idx, minlength=len(edges) - 1)
    cdf = stats.poisson.cdf(np.asarray(edges[1:-1]) - 1, mean)
    probs = np.diff(np.concatenate([[0.0], cdf, [1.0]]))
    expected = n * probs
    res = stats.chisquare(observed, expected)
    return float(res.statistic), float(res.pvalue), len(expected)
