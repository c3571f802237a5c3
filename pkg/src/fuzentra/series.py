"""Signal containers shared by every stage of the pipeline."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

DEFAULT_CHANNELS = ("O1", "Oz", "O2", "Fpz")
OCCIPITAL = ("O1", "Oz", "O2")
PREFRONTAL = ("Fpz",)


def _frozen_array(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Uniformly sampled scalar signal.

    ``samples`` is stored as a read-only float array so that a series can be
    shared between stages without defensive copies.
    """

    samples: np.ndarray
    sample_rate: float

    def __post_init__(self):
        arr = _frozen_array(self.samples)
        if arr.ndim != 1:
            raise ValueError("TimeSeries samples must be one-dimensional")
        if arr.size < 1:
            raise ValueError("TimeSeries needs at least one sample")
        if not np.all(np.isfinite(arr)):
            raise ValueError("TimeSeries samples must be finite")
        if not self.sample_rate > 0:
            raise ValueError("sample_rate must be positive")
        object.__setattr__(self, "samples", arr)
        object.__setattr__(self, "sample_rate", float(self.sample_rate))

    def __len__(self):
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate

    def with_samples(self, samples) -> "TimeSeries":
        return TimeSeries(samples, self.sample_rate)

    def __eq__(self, other):
        if not isinstance(other, TimeSeries):
            return NotImplemented
        return self.sample_rate == other.sample_rate and np.array_equal(
            self.samples, other.samples
        )


@dataclass(frozen=True)
class Condition:
    """Recording condition of an epoch: the resting baseline or SSVEP trial k."""

    kind: str  # "rest" or "ssvep"
    index: int = 1

    def __post_init__(self):
        if self.kind not in ("rest", "ssvep"):
            raise ValueError(f"unknown condition kind {self.kind!r}")
        if self.kind == "ssvep" and not 1 <= self.index <= 5:
            raise ValueError("SSVEP trial index must be in 1..5")
        if self.index < 1:
            raise ValueError("condition index must be >= 1")

    @property
    def name(self) -> str:
        return f"{self.kind}_{self.index}"

    @classmethod
    def parse(cls, name: str) -> "Condition":
        kind, _, idx = name.partition("_")
        return cls(kind, int(idx))


@dataclass(frozen=True, eq=False)
class MultiChannelEpoch:
    """Synchronised channels of one resting block or one SSVEP trial.

    ``data`` has shape (n_channels, n_samples) and rows follow
    ``channel_names``.
    """

    data: np.ndarray
    channel_names: tuple
    sample_rate: float
    condition: Condition = Condition("rest", 1)

    def __post_init__(self):
        arr = _frozen_array(self.data)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("epoch data must have shape (channels, samples)")
        names = tuple(self.channel_names)
        if len(names) != arr.shape[0] or len(set(names)) != len(names):
            raise ValueError("channel names must be unique and match data rows")
        if not np.all(np.isfinite(arr)):
            raise ValueError("epoch samples must be finite")
        if not self.sample_rate > 0:
            raise ValueError("sample_rate must be positive")
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "channel_names", names)
        object.__setattr__(self, "sample_rate", float(self.sample_rate))

    @classmethod
    def from_channels(
        cls, channels: Mapping[str, TimeSeries], condition: Condition = Condition("rest", 1)
    ) -> "MultiChannelEpoch":
        series = list(channels.values())
        if not series:
            raise ValueError("epoch needs at least one channel")
        rate = series[0].sample_rate
        if any(s.sample_rate != rate or len(s) != len(series[0]) for s in series):
            raise ValueError("all channels must share length and sample rate")
        return cls(np.vstack([s.samples for s in series]), tuple(channels), rate, condition)

    @property
    def n_samples(self) -> int:
        return self.data.shape[1]

    def channel(self, name: str) -> TimeSeries:
        return TimeSeries(self.data[self.channel_names.index(name)], self.sample_rate)

    @property
    def channels(self) -> dict:
        return {name: TimeSeries(row, self.sample_rate) for name, row in zip(self.channel_names, self.data)}

    def replace(self, data=None, condition=None, sample_rate=None) -> "MultiChannelEpoch":
        return MultiChannelEpoch(
            self.data if data is None else data,
            self.channel_names,
            self.sample_rate if sample_rate is None else sample_rate,
            self.condition if condition is None else condition,
        )

    def __eq__(self, other):
        if not isinstance(other, MultiChannelEpoch):
            return NotImplemented
        return (
            self.channel_names == other.channel_names
            and self.sample_rate == other.sample_rate
            and self.condition == other.condition
            and np.array_equal(self.data, other.data)
        )


def as_array(x) -> np.ndarray:
    """Sample array of a TimeSeries or any 1-D array-like."""
    if isinstance(x, TimeSeries):
        return x.samples
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise ValueError("expected a one-dimensional signal")
    return arr


def rate_of(x, default: float = 1.0) -> float:
    return x.sample_rate if isinstance(x, TimeSeries) else default


def region_channels(region: str, available: Sequence[str]) -> tuple:
    wanted = {"occipital": OCCIPITAL, "prefrontal": PREFRONTAL}[region]
    return tuple(ch for ch in wanted if ch in available)
