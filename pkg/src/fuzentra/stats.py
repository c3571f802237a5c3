"""Two-tailed t-tests, false discovery rate control and one-way ICC."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DegenerateVariance, LengthMismatch


@dataclass(frozen=True)
class TestResult:
    __test__ = False  # keep pytest from collecting this class

    statistic: float
    degrees_of_freedom: float
    p_value: float
    two_tailed: bool = True


@dataclass(frozen=True)
class FdrOutcome:
    adjusted_p: np.ndarray
    rejected: np.ndarray


def t_two_tailed_p(t: float, df: float) -> float:
    """P(|T| >= |t|) for Student's t with ``df`` degrees of freedom.

    Uses the identity P = I_{df/(df+t^2)}(df/2, 1/2) with the regularised
    incomplete beta function.
    """
    if not df > 0:
        raise ValueError("degrees of freedom must be positive")
    if t == 0:
        return 1.0
    x = df / (df + t * t)
    return float(min(1.0, max(0.0, special.betainc(df / 2.0, 0.5, x))))


def t_test(a, b, kind: str = "independent", welch: bool = True) -> TestResult:
    """Paired or independent two-sample t-test.

    Independent samples default to Welch's unequal-variance statistic with
    Welch-Satterthwaite degrees of freedom; ``welch=False`` pools variances.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if kind == "paired":
        if a.size != b.size:
            raise LengthMismatch(f"paired samples differ in length: {a.size} vs {b.size}")
        if a.size < 2:
            raise ValueError("paired test needs at least two pairs")
        d = a - b
        sd = d.std(ddof=1)
        if sd == 0:
            if np.all(d == 0):
                return TestResult(0.0, float(d.size - 1), 1.0)
            raise DegenerateVariance("differences have zero variance")
        t = d.mean() / (sd / math.sqrt(d.size))
        df = float(d.size - 1)
    elif kind == "independent":
        if a.size < 2 or b.size < 2:
            raise ValueError("independent test needs at least two values per group")
        va, vb = a.var(ddof=1), b.var(ddof=1)
        na, nb = a.size, b.size
        if welch:
            se2 = va / na + vb / nb
            if se2 == 0:
                raise DegenerateVariance("both groups have zero variance")
            # Welch-Satterthwaite on variance terms rescaled to avoid underflow
            ua, ub = va / na, vb / nb
            top = max(ua, ub)
            ua, ub = ua / top, ub / top
            df = (ua + ub) ** 2 / (ua**2 / (na - 1) + ub**2 / (nb - 1))
        else:
            pooled = ((na - 1) * va + (nb - 1) * vb) / (na + nb - 2)
            se2 = pooled * (1 / na + 1 / nb)
            if se2 == 0:
                raise DegenerateVariance("pooled variance is zero")
            df = float(na + nb - 2)
        t = (a.mean() - b.mean()) / math.sqrt(se2)
    else:
        raise ValueError(f"unknown t-test kind {kind!r}")
    t = float(t)
    return TestResult(t, float(df), t_two_tailed_p(t, df))


def fdr_bh(p_values, alpha: float = 0.05, method: str = "bh") -> FdrOutcome:
    """Benjamini-Hochberg step-up procedure (``method="by"`` for
    Benjamini-Yekutieli under arbitrary dependence)."""
    p = np.asarray(p_values, dtype=float)
    if p.ndim != 1:
        raise ValueError("p-values must be a flat sequence")
    if np.any((p < 0) | (p > 1)) or np.any(np.isnan(p)):
        raise ValueError("p-values must lie in [0, 1]")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    m = p.size
    if m == 0:
        return FdrOutcome(np.empty(0), np.empty(0, bool))
    c_m = 1.0
    if method == "by":
        c_m = float(np.sum(1.0 / np.arange(1, m + 1)))
    elif method != "bh":
        raise ValueError(f"unknown FDR method {method!r}")
    order = np.argsort(p, kind="mergesort")
    ranked = p[order]
    ranks = np.arange(1, m + 1)
    scaled = ranked * m * c_m / ranks
    adj_sorted = np.minimum(np.minimum.accumulate(scaled[::-1])[::-1], 1.0)
    below = np.flatnonzero(ranked <= ranks * alpha / (m * c_m))
    rejected_sorted = np.zeros(m, bool)
    if below.size:
        rejected_sorted[: below[-1] + 1] = True
    adjusted = np.empty(m)
    adjusted[order] = adj_sorted
    rejected = np.empty(m, bool)
    rejected[order] = rejected_sorted
    return FdrOutcome(adjusted, rejected)


def icc_oneway(ratings) -> float:
    """ICC(1,1) from one-way ANOVA: (MSB - MSW) / (MSB + (k-1) MSW)."""
    y = np.asarray(ratings, dtype=float)
    if y.ndim != 2 or y.shape[0] < 2 or y.shape[1] < 2:
        raise ValueError("need a subjects x sessions matrix with at least 2 of each")
    n, k = y.shape
    grand = y.mean()
    row_means = y.mean(axis=1)
    msb = k * np.sum((row_means - grand) ** 2) / (n - 1)
    msw = np.sum((y - row_means[:, None]) ** 2) / (n * (k - 1))
    denom = msb + (k - 1) * msw
    if denom == 0:
        raise DegenerateVariance("all ratings are identical")
    return float((msb - msw) / denom)
