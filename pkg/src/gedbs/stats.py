"""Nonparametric tests used to compare treatments against the baseline.

The rank-sum test uses the exact permutation distribution (dynamic
programming over ranks) for small tie-free samples and a tie-corrected,
continuity-corrected normal approximation otherwise.  Normality checks
use the Royston approximation of the Shapiro-Wilk W statistic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

_NORMAL = NormalDist()


class EmptySample(ValueError):
    pass


class SampleTooSmall(ValueError):
    pass


class SampleTooLarge(ValueError):
    pass


class ZeroVariance(ValueError):
    pass


def _midranks(values) -> list[float]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        midrank = (i + j) / 2 + 1
        for idx in order[i : j + 1]:
            ranks[idx] = midrank
        i = j + 1
    return ranks


@dataclass(frozen=True)
class RankSumResult:
    """Rank-sum W of the first sample plus its p-values.

    ``p_less`` tests the alternative that the first sample tends below
    the second; ``p_greater`` the reverse.
    """

    statistic: float
    p_two_sided: float
    p_less: float
    p_greater: float
    method: str


def _exact_ranksum(w: int, n_a: int, n: int) -> tuple[float, float]:
    """P(W <= w) and P(W >= w) for the sum of n_a ranks out of 1..n."""
    max_sum = sum(range(n - n_a + 1, n + 1))
    # counts[j][s] = ways to pick j of the ranks seen so far with sum s
    counts = np.zeros((n_a + 1, max_sum + 1))
    counts[0, 0] = 1.0
    for rank in range(1, n + 1):
        upper = min(n_a, rank)
        for j in range(upper, 0, -1):
            counts[j, rank:] += counts[j - 1, : max_sum + 1 - rank]
    dist = counts[n_a]
    total = dist.sum()
    w = int(w)
    p_less = float(dist[: w + 1].sum() / total)
    p_greater = float(dist[w:].sum() / total)
    return p_less, p_greater


def _approx_ranksum(w: float, ranks: list[float], n_a: int) -> tuple[float, float]:
    n = len(ranks)
    n_b = n - n_a
    mu = n_a * (n + 1) / 2.0
    tie_counts: dict[float, int] = {}
    for r in ranks:
        tie_counts[r] = tie_counts.get(r, 0) + 1
    tie_term = sum(c**3 - c for c in tie_counts.values())
    sigma2 = n_a * n_b / 12.0 * ((n + 1) - tie_term / (n * (n - 1)))
    if sigma2 <= 0:
        return 1.0, 1.0
    sigma = math.sqrt(sigma2)
    p_less = _NORMAL.cdf((w - mu + 0.5) / sigma)
    p_greater = 1.0 - _NORMAL.cdf((w - mu - 0.5) / sigma)
    return p_less, p_greater


def wilcoxon_rank_sum(sample_a, sample_b, method: str = "auto") -> RankSumResult:
    """Two-sample rank-sum test with midrank ties.

    ``method`` is ``auto`` (exact when the pooled size is at most 20 and
    there are no ties, else the normal approximation), ``exact`` or
    ``approx``.
    """
    a = [float(v) for v in sample_a]
    b = [float(v) for v in sample_b]
    if not a or not b:
        raise EmptySample("both samples must be non-empty")
    combined = a + b
    ranks = _midranks(combined)
    w = sum(ranks[: len(a)])
    has_ties = len(set(combined)) < len(combined)
    if method == "auto":
        method = "exact" if len(combined) <= 20 and not has_ties else "approx"
    if method == "exact":
        if has_ties:
            raise ValueError("exact method requires tie-free samples")
        p_less, p_greater = _exact_ranksum(int(round(w)), len(a), len(combined))
    elif method == "approx":
        p_less, p_greater = _approx_ranksum(w, ranks, len(a))
    else:
        raise ValueError(f"unknown method {method!r}")
    p_two = min(1.0, 2.0 * min(p_less, p_greater))
    return RankSumResult(
        statistic=w,
        p_two_sided=p_two,
        p_less=p_less,
        p_greater=p_greater,
        method=method,
    )


# ---------------------------------------------------------------------------
# Shapiro-Wilk (Royston approximation)

_C1 = (0.221157, -0.147981, -2.071190, 4.434685, -2.706056)
_C2 = (0.042981, -0.293762, -1.752461, 5.682633, -3.582633)


def _poly(coeffs, x: float) -> float:
    return sum(c * x**i for i, c in enumerate(coeffs))


def shapiro_wilk(sample) -> tuple[float, float]:
    """Shapiro-Wilk W and p-value for 3 <= n <= 5000.

    Raises :class:`SampleTooSmall`/:class:`SampleTooLarge` outside that
    range and :class:`ZeroVariance` for constant samples.
    """
    x = sorted(float(v) for v in sample)
    n = len(x)
    if n < 3:
        raise SampleTooSmall(f"need at least 3 observations, got {n}")
    if n > 5000:
        raise SampleTooLarge(f"at most 5000 observations supported, got {n}")
    if x[0] == x[-1]:
        raise ZeroVariance("sample is constant")

    m = [_NORMAL.inv_cdf((i - 0.375) / (n + 0.25)) for i in range(1, n + 1)]
    mtm = sum(v * v for v in m)
    c = [v / math.sqrt(mtm) for v in m]
    u = 1.0 / math.sqrt(n)
    a = [0.0] * n
    if n == 3:
        a[0] = -math.sqrt(0.5)
        a[2] = math.sqrt(0.5)
    else:
        a_n = c[-1] + u * _poly(_C1, u)
        if n > 5:
            a_n1 = c[-2] + u * _poly(_C2, u)
            phi = (mtm - 2 * m[-1] ** 2 - 2 * m[-2] ** 2) / (
                1 - 2 * a_n**2 - 2 * a_n1**2
            )
            a[-2], a[1] = a_n1, -a_n1
            inner = range(2, n - 2)
        else:
            phi = (mtm - 2 * m[-1] ** 2) / (1 - 2 * a_n**2)
            inner = range(1, n - 1)
        a[-1], a[0] = a_n, -a_n
        sqrt_phi = math.sqrt(phi)
        for i in inner:
            a[i] = m[i] / sqrt_phi

    mean = sum(x) / n
    ss = sum((v - mean) ** 2 for v in x)
    w_num = sum(ai * xi for ai, xi in zip(a, x)) ** 2
    w = w_num / ss
    w = min(w, 1.0)

    if n == 3:
        p = 6.0 / math.pi * (math.asin(math.sqrt(w)) - math.asin(math.sqrt(0.75)))
        return w, min(max(p, 0.0), 1.0)
    if n <= 11:
        gamma = -2.273 + 0.459 * n
        if gamma - math.log(1.0 - w) <= 0:
            return w, 1e-99
        g = -math.log(gamma - math.log(1.0 - w))
        mu = 0.5440 - 0.39978 * n + 0.025054 * n**2 - 0.0006714 * n**3
        sigma = math.exp(1.3822 - 0.77857 * n + 0.062767 * n**2 - 0.0020322 * n**3)
    else:
        ln_n = math.log(n)
        g = math.log(1.0 - w) if w < 1.0 else -math.inf
        mu = -1.5861 - 0.31082 * ln_n - 0.083751 * ln_n**2 + 0.0038915 * ln_n**3
        sigma = math.exp(-0.4803 - 0.082676 * ln_n + 0.0030302 * ln_n**2)
    if not math.isfinite(g):
        return w, 1.0
    z = (g - mu) / sigma
    p = 1.0 - _NORMAL.cdf(z)
    return w, min(max(p, 0.0), 1.0)


# ---------------------------------------------------------------------------
# significance marks

ORIENTATION_LOWER = "lower_better"
ORIENTATION_HIGHER = "higher_better"


def mark_significance(
    baseline_scores, treatment_scores, orientation: str, alpha: float = 0.05
) -> str:
    """Compare a treatment against the baseline: ``+``, ``=`` or ``-``.

    A two-sided rank-sum test gates at ``alpha``; significant outcomes
    are labelled by direction under the score orientation.
    """
    if orientation not in (ORIENTATION_LOWER, ORIENTATION_HIGHER):
        raise ValueError(f"unknown orientation {orientation!r}")
    treatment = [float(v) for v in treatment_scores]
    baseline = [float(v) for v in baseline_scores]
    result = wilcoxon_rank_sum(treatment, baseline)
    if result.p_two_sided >= alpha:
        return "="
    n = len(treatment) + len(baseline)
    expected = len(treatment) * (n + 1) / 2.0
    treatment_tends_lower = result.statistic < expected
    if orientation == ORIENTATION_LOWER:
        return "+" if treatment_tends_lower else "-"
    return "-" if treatment_tends_lower else "+"
