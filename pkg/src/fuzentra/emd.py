"""Empirical mode decomposition and trend removal.

Sifting follows Huang et al.: the mean of the cubic-spline envelopes through
the maxima and minima is subtracted repeatedly until the Cauchy-type SD
criterion falls below ``sd_threshold`` and the candidate's extrema and zero
crossings differ by at most one. Two extrema are mirrored across each edge
before fitting the envelopes.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import AllComponentsRejected, ConstantSignal, TooShort
from .series import TimeSeries, as_array, rate_of

logger = logging.getLogger(__name__)

MIN_LENGTH = 8


@dataclass(frozen=True)
class SiftConfig:
    sd_threshold: float = 0.2
    max_sift_iterations: int = 100
    max_imfs: int = 12

    def __post_init__(self):
        if not 0 < self.sd_threshold < 1:
            raise ValueError("sd_threshold must lie in (0, 1)")
        if self.max_sift_iterations < 1 or self.max_imfs < 1:
            raise ValueError("iteration and IMF counts must be >= 1")


@dataclass(frozen=True, eq=False)
class ImfDecomposition:
    imfs: tuple  # of TimeSeries, fastest first
    residue: TimeSeries
    source_length: int

    @property
    def sample_rate(self) -> float:
        return self.residue.sample_rate

    def reconstruct(self) -> np.ndarray:
        total = self.residue.samples.copy()
        for imf in self.imfs:
            total += imf.samples
        return total

    def mean_frequencies(self) -> list[float]:
        return [mean_frequency(imf) for imf in self.imfs]


def find_extrema(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Indices of interior local maxima and minima.

    Runs of equal values are collapsed first; a plateau extremum is reported
    at the first sample of the plateau.
    """
    starts = np.concatenate([[0], np.flatnonzero(np.diff(x) != 0) + 1])
    v = x[starts]
    if v.size < 3:
        return np.empty(0, int), np.empty(0, int)
    up = v[1:-1] > v[:-2]
    down = v[1:-1] > v[2:]
    maxima = starts[1:-1][up & down]
    minima = starts[1:-1][~up & ~down]
    return maxima, minima


def count_zero_crossings(x: np.ndarray) -> int:
    s = np.sign(x)
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))


def count_extrema(x: np.ndarray) -> int:
    mx, mn = find_extrema(x)
    return mx.size + mn.size


def is_imf(x: np.ndarray) -> bool:
    return abs(count_extrema(x) - count_zero_crossings(x)) <= 1


def mean_frequency(x) -> float:
    """Zero crossings / (2 * duration), in Hz."""
    arr = as_array(x)
    return count_zero_crossings(arr) / (2.0 * arr.size / rate_of(x))


def _envelope(t, x, idx):
    n = x.size
    left = idx[:2]
    right = idx[-2:]
    knots = np.concatenate([-left[::-1], idx, 2 * (n - 1) - right[::-1]])
    values = np.concatenate([x[left[::-1]], x[idx], x[right[::-1]]])
    # mirrored knots coincide with real ones only for extrema on the edges,
    # which find_extrema never reports; keep the guard for safety
    keep = np.concatenate([[True], np.diff(knots) > 0])
    return CubicSpline(knots[keep], values[keep], bc_type="natural")(t)


def _is_monotonic(x: np.ndarray) -> bool:
    d = np.diff(x)
    return bool(np.all(d >= 0) or np.all(d <= 0))


def _sift(r: np.ndarray, cfg: SiftConfig):
    """Extract one IMF candidate from ``r``; None when no valid IMF emerges."""
    t = np.arange(r.size, dtype=float)
    h = r.copy()
    for _ in range(cfg.max_sift_iterations):
        mx, mn = find_extrema(h)
        if mx.size < 1 or mn.size < 1:
            return None
        mean_env = 0.5 * (_envelope(t, h, mx) + _envelope(t, h, mn))
        h_new = h - mean_env
        denom = float(np.dot(h, h))
        sd = float(np.dot(h - h_new, h - h_new)) / denom if denom > 0 else 0.0
        h = h_new
        if sd < cfg.sd_threshold and is_imf(h):
            return h
    return h if is_imf(h) else None


def decompose(x, cfg: SiftConfig = SiftConfig()) -> ImfDecomposition:
    arr = np.array(as_array(x), dtype=float)
    rate = rate_of(x)
    n = arr.size
    if n < MIN_LENGTH:
        raise TooShort(f"EMD needs at least {MIN_LENGTH} samples, got {n}")
    if np.ptp(arr) == 0:
        raise ConstantSignal("cannot decompose a constant signal")
    scale = np.ptp(arr)
    residue = arr.copy()
    imfs = []
    while len(imfs) < cfg.max_imfs:
        if count_extrema(residue) < 3 or _is_monotonic(residue):
            break
        if np.ptp(residue) <= 1e-12 * scale:
            break
        imf = _sift(residue, cfg)
        if imf is None:
            logger.debug("sifting did not converge to an IMF; stopping with %d IMFs", len(imfs))
            break
        imfs.append(imf)
        residue = residue - imf
    return ImfDecomposition(
        tuple(TimeSeries(c, rate) for c in imfs), TimeSeries(residue, rate), n
    )


def detrend_reconstruct(d: ImfDecomposition, cutoff_hz: float = 1.0) -> TimeSeries:
    """Sum IMFs 1..m, where m is the last IMF oscillating at or above ``cutoff_hz``.

    The residue is never included.
    """
    if cutoff_hz < 0:
        raise ValueError("cutoff_hz must be >= 0")
    freqs = d.mean_frequencies()
    passing = [i for i, f in enumerate(freqs) if f >= cutoff_hz]
    if not passing:
        raise AllComponentsRejected(
            f"no IMF oscillates at or above {cutoff_hz} Hz (frequencies: {freqs})"
        )
    upper = passing[-1] + 1
    total = np.zeros(d.source_length)
    for imf in d.imfs[:upper]:
        total += imf.samples
    return TimeSeries(total, d.sample_rate)
