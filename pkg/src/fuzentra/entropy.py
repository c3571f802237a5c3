"""Multiscale entropy: coarse-graining, ApEn/SampEn/FuzzyEn estimators, the
inherent fuzzy entropy pipeline and relative (stimulus minus baseline)
profiles.

The tolerance ``r`` is always relative: the absolute width is
``r * std(x, ddof=1)`` of the series handed to the estimator, so at every
scale it is measured against that scale's own coarse-grained series.
Undefined values (sample entropy with no matches) are represented by
``None``, never by NaN.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from . import _kernels
from .emd import SiftConfig, decompose, detrend_reconstruct
from .errors import EmptySet, ScaleMismatch, TooShort
from .preprocess import zscore
from .series import TimeSeries, as_array, rate_of

logger = logging.getLogger(__name__)

DEFAULT_SCALES = 20
_BUFFER = 1 << 18


class Method(str, enum.Enum):
    APEN = "apen"
    SAMPEN = "sampen"
    FUZZEN = "fuzzen"
    INHERENT = "inherent"


@dataclass(frozen=True)
class EntropyParams:
    m: int = 2
    n: float = 2.0
    r: float = 0.2

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise ValueError("template length m must be a positive integer")
        if not self.n > 0 or not self.r > 0:
            raise ValueError("n and r must be positive")


@dataclass(frozen=True)
class EntropyProfile:
    scales: tuple
    values: tuple  # float, or None where undefined
    method: str = Method.INHERENT.value

    def __post_init__(self):
        scales = tuple(int(s) for s in self.scales)
        if scales != tuple(range(1, len(scales) + 1)):
            raise ValueError("profile scales must run contiguously from 1")
        values = tuple(None if v is None else float(v) for v in self.values)
        if len(values) != len(scales):
            raise ValueError("one value per scale required")
        object.__setattr__(self, "scales", scales)
        object.__setattr__(self, "values", values)

    def as_array(self) -> np.ndarray:
        """Values as floats with NaN marking undefined scales (for plotting/stats)."""
        return np.array([np.nan if v is None else v for v in self.values])

    @property
    def undefined_count(self) -> int:
        return sum(v is None for v in self.values)


@dataclass(frozen=True)
class RelativeProfile:
    """Stimulus-minus-baseline entropy per scale for stimulus trial ``trial``."""

    scales: tuple
    values: tuple
    trial: int | None = None
    region: str | None = None

    def as_array(self) -> np.ndarray:
        return np.array([np.nan if v is None else v for v in self.values])


def coarse_grain(x, tau: int) -> TimeSeries:
    """Means over non-overlapping windows of length ``tau``; a trailing
    partial window is dropped."""
    arr = as_array(x)
    tau = int(tau)
    if tau < 1:
        raise ValueError("scale factor must be >= 1")
    if arr.size < tau:
        raise ValueError("series shorter than the scale factor")
    rate = rate_of(x) / tau
    if tau == 1:
        return x if isinstance(x, TimeSeries) else TimeSeries(arr, rate)
    n = arr.size // tau
    return TimeSeries(arr[: n * tau].reshape(n, tau).mean(axis=1), rate)


def _check_length(arr, m):
    if arr.size < m + 2:
        raise TooShort(f"need at least m + 2 = {m + 2} samples, got {arr.size}")


def _tolerance(arr, r):
    return r * float(np.std(arr, ddof=1))


def fuzzy_phi_sums(arr: np.ndarray, m: int, n: float, r_abs: float) -> tuple[float, float]:
    """Sums of exp(-d**n / r) over template pairs i < j at lengths m and m+1,
    using the first N-m templates of each length. ``r_abs`` is in the units
    of ``arr``."""
    if not r_abs > 0:
        raise ValueError("tolerance must be positive")
    nt = arr.size - m
    x = np.ascontiguousarray(arr, dtype=float)
    buf0 = np.empty(min(_BUFFER, max(nt * (nt - 1) // 2, 1)))
    buf1 = np.empty_like(buf0)
    s0 = s1 = 0.0
    row = 0
    while row < nt - 1:
        if m == 2 and n == 2.0:
            row, count = _kernels.fuzzy_fill_m2(x, 1.0 / r_abs, row, nt, buf0, buf1)
        else:
            row, count = _kernels.fuzzy_fill(x, m, float(n), 1.0 / r_abs, row, nt, buf0, buf1)
        s0 += float(np.exp(buf0[:count], out=buf0[:count]).sum())
        s1 += float(np.exp(buf1[:count], out=buf1[:count]).sum())
    return s0, s1


def fuzzy_entropy(x, params: EntropyParams = EntropyParams()) -> float:
    """ln(phi_m) - ln(phi_m+1) with mean-removed templates and exponential
    membership exp(-d**n / r) on the Chebyshev distance.

    Distances are measured in units of the series' sample SD, so ``r`` is
    dimensionless and the value does not change when the series is
    rescaled. On a z-scored series this is the plain absolute-r form.
    """
    arr = as_array(x)
    m = int(params.m)
    _check_length(arr, m)
    sd = float(np.std(arr, ddof=1))
    if sd == 0:
        # constant series: every template pair is identical
        return 0.0
    s0, s1 = fuzzy_phi_sums(arr / sd, m, params.n, params.r)
    # both phi share the normalisation (N-m)(N-m-1), so it cancels
    return math.log(s0) - math.log(s1)


def approximate_entropy(x, m: int = 2, r: float = 0.2) -> float:
    arr = np.ascontiguousarray(as_array(x), dtype=float)
    m = int(m)
    _check_length(arr, m)
    cm, cm1 = _kernels.apen_counts(arr, m, _tolerance(arr, r))
    n = arr.size
    phi_m = float(np.mean(np.log(cm / (n - m + 1))))
    phi_m1 = float(np.mean(np.log(cm1 / (n - m))))
    return phi_m - phi_m1


def sample_entropy(x, m: int = 2, r: float = 0.2) -> float | None:
    """-ln(A/B) without self-matches; ``None`` when A or B is zero."""
    arr = np.ascontiguousarray(as_array(x), dtype=float)
    m = int(m)
    _check_length(arr, m)
    B, A = _kernels.sampen_counts(arr, m, _tolerance(arr, r))
    if A == 0 or B == 0:
        return None
    return -math.log(A / B)


def _single_scale(method: Method, arr, params: EntropyParams):
    if method in (Method.FUZZEN, Method.INHERENT):
        return fuzzy_entropy(arr, params)
    if method is Method.APEN:
        return approximate_entropy(arr, params.m, params.r)
    return sample_entropy(arr, params.m, params.r)


def prepare_signal(x, method, trend_cutoff_hz: float = 1.0, sift: SiftConfig = SiftConfig()) -> TimeSeries:
    """The normalised series fed to coarse-graining.

    Inherent fuzzy entropy removes the EMD trend first; every method then
    z-scores.
    """
    method = Method(method)
    if method is Method.INHERENT:
        x = detrend_reconstruct(decompose(x, sift), trend_cutoff_hz)
    return zscore(x)


def multiscale_profile(
    x,
    method=Method.INHERENT,
    params: EntropyParams = EntropyParams(),
    scales: int = DEFAULT_SCALES,
    trend_cutoff_hz: float = 1.0,
    sift: SiftConfig = SiftConfig(),
) -> EntropyProfile:
    method = Method(method)
    arr = as_array(x)
    scales = int(scales)
    if scales < 1:
        raise ValueError("need at least one scale")
    if arr.size // scales < params.m + 2:
        feasible = arr.size // (params.m + 2)
        raise TooShort(
            f"{arr.size} samples support at most {feasible} scales for m={params.m}",
            largest_feasible=feasible,
        )
    base = prepare_signal(x, method, trend_cutoff_hz, sift)
    values = [_single_scale(method, coarse_grain(base, tau).samples, params) for tau in range(1, scales + 1)]
    return EntropyProfile(tuple(range(1, scales + 1)), tuple(values), method.value)


def _check_axes(profiles):
    first = profiles[0].scales
    for p in profiles[1:]:
        if p.scales != first:
            raise ScaleMismatch(f"scale axes differ: {len(first)} vs {len(p.scales)} scales")
    return first


def relative_profile(stim: EntropyProfile, baseline: EntropyProfile, trial: int | None = None, region: str | None = None) -> RelativeProfile:
    scales = _check_axes([stim, baseline])
    values = tuple(
        None if a is None or b is None else a - b for a, b in zip(stim.values, baseline.values)
    )
    return RelativeProfile(scales, values, trial, region)


def transitional_variance(re_first: RelativeProfile, re_fifth: RelativeProfile) -> np.ndarray:
    """Per-scale RE_5 - RE_1 (NaN where either side is undefined)."""
    _check_axes([re_first, re_fifth])
    return re_fifth.as_array() - re_first.as_array()


def aggregate_sessions(profiles: Iterable) -> EntropyProfile:
    """Per-scale arithmetic mean of profiles sharing a scale axis.

    A scale is undefined in the result if it is undefined in any operand.
    Works for EntropyProfile and RelativeProfile alike and returns the
    operand type.
    """
    profiles = list(profiles)
    if not profiles:
        raise EmptySet("cannot aggregate an empty set of profiles")
    scales = _check_axes(profiles)
    values = []
    for k in range(len(scales)):
        col = [p.values[k] for p in profiles]
        values.append(None if any(v is None for v in col) else math.fsum(col) / len(col))
    first = profiles[0]
    if isinstance(first, RelativeProfile):
        return RelativeProfile(scales, tuple(values), first.trial, first.region)
    return EntropyProfile(scales, tuple(values), first.method)
