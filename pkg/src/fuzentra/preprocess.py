"""Normalisation, FIR band-pass filtering, decimation and amplitude rejection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal as sps

from .errors import DegenerateSignal, InvalidBand
from .series import MultiChannelEpoch, TimeSeries, as_array, rate_of

DEFAULT_ARTIFACT_LIMIT = 100.0  # microvolts


def default_taps(sample_rate: float) -> int:
    """Odd tap count spanning about one second (251 taps at 250 Hz)."""
    return 2 * int(round(sample_rate / 2.0)) + 1


@dataclass(frozen=True, eq=False)
class FirFilter:
    taps: np.ndarray
    low_hz: float | None
    high_hz: float | None
    sample_rate: float

    def __post_init__(self):
        taps = np.array(self.taps, dtype=float)
        if taps.ndim != 1 or taps.size % 2 == 0:
            raise ValueError("FIR filter needs an odd number of taps")
        if not np.all(np.isfinite(taps)):
            raise ValueError("FIR coefficients must be finite")
        taps.setflags(write=False)
        object.__setattr__(self, "taps", taps)

    @property
    def group_delay(self) -> int:
        return (self.taps.size - 1) // 2

    def response_db(self, freqs_hz, zero_phase: bool = True) -> np.ndarray:
        """Magnitude response in dB; doubled when applied forward-backward."""
        _, h = sps.freqz(self.taps, worN=np.atleast_1d(np.asarray(freqs_hz, float)), fs=self.sample_rate)
        db = 20.0 * np.log10(np.maximum(np.abs(h), 1e-300))
        return 2.0 * db if zero_phase else db

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Zero-phase (forward-backward) application along the last axis."""
        n = x.shape[-1]
        padlen = min(3 * self.taps.size, n - 1)
        return sps.filtfilt(self.taps, [1.0], x, axis=-1, padlen=padlen)


def design_bandpass(low_hz: float, high_hz: float, sample_rate: float, taps: int | None = None) -> FirFilter:
    """Hamming-windowed sinc band-pass design."""
    if not (0 < low_hz < high_hz < sample_rate / 2):
        raise InvalidBand(
            f"need 0 < low ({low_hz}) < high ({high_hz}) < Nyquist ({sample_rate / 2})"
        )
    taps = default_taps(sample_rate) if taps is None else int(taps)
    if taps < 31 or taps % 2 == 0:
        raise ValueError("taps must be odd and >= 31")
    h = sps.firwin(taps, [low_hz, high_hz], pass_zero=False, window="hamming", fs=sample_rate)
    # at short lengths the low transition band reaches 0 Hz; removing the
    # residual DC gain with a window-shaped correction zeroes it exactly
    # and leaves the response above ~2 transition widths untouched
    w = sps.get_window("hamming", taps, fftbins=False)
    h = h - h.sum() * w / w.sum()
    return FirFilter(h, float(low_hz), float(high_hz), float(sample_rate))


def design_lowpass(cutoff_hz: float, sample_rate: float, taps: int | None = None) -> FirFilter:
    taps = default_taps(sample_rate) if taps is None else int(taps)
    h = sps.firwin(taps, cutoff_hz, window="hamming", fs=sample_rate)
    return FirFilter(h, None, float(cutoff_hz), float(sample_rate))


def zscore(x) -> TimeSeries:
    """Subtract the mean and divide by the sample standard deviation (ddof=1)."""
    arr = as_array(x)
    if arr.size < 2:
        raise DegenerateSignal("z-score needs at least two samples")
    sd = arr.std(ddof=1)
    if not sd > 0:
        raise DegenerateSignal("z-score of a zero-variance signal")
    return TimeSeries((arr - arr.mean()) / sd, rate_of(x))


def fir_bandpass(x: TimeSeries, low_hz: float, high_hz: float, taps: int | None = None) -> TimeSeries:
    fir = design_bandpass(low_hz, high_hz, x.sample_rate, taps)
    return x.with_samples(fir.apply(x.samples))


def _decimate_array(data: np.ndarray, rate: float, factor: int) -> np.ndarray:
    # anti-alias cutoff at 0.4 of the new Nyquist frequency
    new_nyquist = rate / factor / 2.0
    lp = design_lowpass(0.4 * new_nyquist, rate)
    filtered = lp.apply(data)
    n_out = data.shape[-1] // factor
    return filtered[..., : n_out * factor : factor]


def decimate(x: TimeSeries, factor: int) -> TimeSeries:
    factor = int(factor)
    if factor < 1:
        raise ValueError("decimation factor must be >= 1")
    if factor == 1:
        return x
    if len(x) < factor:
        raise ValueError("signal shorter than the decimation factor")
    return TimeSeries(_decimate_array(x.samples, x.sample_rate, factor), x.sample_rate / factor)


def decimate_epoch(epoch: MultiChannelEpoch, factor: int) -> MultiChannelEpoch:
    if factor == 1:
        return epoch
    return epoch.replace(
        data=_decimate_array(epoch.data, epoch.sample_rate, factor),
        sample_rate=epoch.sample_rate / factor,
    )


def bandpass_epoch(epoch: MultiChannelEpoch, low_hz: float, high_hz: float, taps: int | None = None) -> MultiChannelEpoch:
    fir = design_bandpass(low_hz, high_hz, epoch.sample_rate, taps)
    return epoch.replace(data=fir.apply(epoch.data))


@dataclass(frozen=True)
class Rejected:
    channel: str
    index: int
    value: float


def reject_artifacts(epoch: MultiChannelEpoch, amp_limit: float = DEFAULT_ARTIFACT_LIMIT):
    """Return ``epoch`` unchanged, or :class:`Rejected` naming the first sample
    (channel order, then time) whose magnitude exceeds ``amp_limit``."""
    if not amp_limit > 0:
        raise ValueError("amp_limit must be positive")
    over = np.abs(epoch.data) > amp_limit
    if not over.any():
        return epoch
    ch, idx = np.argwhere(over)[0]
    return Rejected(epoch.channel_names[ch], int(idx), float(epoch.data[ch, idx]))
