"""CSV signal format.

Header ``time,<ch1>,<ch2>,...`` followed by one comma-separated row per
sample. The time column must be strictly increasing and uniform; the sample
rate is inferred from its first two values. Floats are written with
``repr`` so files round-trip exactly and repeated runs are byte-identical.
"""

from __future__ import annotations

import csv
import os
from pathlib import Path

import numpy as np

from .errors import DataError
from .series import Condition, MultiChannelEpoch, TimeSeries

UNIFORMITY_RTOL = 1e-6


def fmt(value) -> str:
    """Deterministic text for one CSV cell; ``None`` becomes ``NA``."""
    if value is None:
        return "NA"
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def write_rows(path, header, rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(c if isinstance(c, str) else fmt(c) for c in row) + "\n")


def read_rows(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        rows = [[c.strip() for c in row] for row in reader if row]
    return header, rows


def parse_float(text: str):
    return None if text in ("NA", "") else float(text)


def read_signal_csv(path, condition: Condition | None = None) -> MultiChannelEpoch:
    path = Path(path)
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    if len(header) < 2 or header[0] != "time":
        raise DataError(f"{path}: header must be 'time,<channel>,...'")
    try:
        table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None
    if table.shape[0] < 2 or table.shape[1] != len(header):
        raise DataError(f"{path}: need at least two rows with {len(header)} columns")
    t = table[:, 0]
    step = t[1] - t[0]
    if not step > 0:
        raise DataError(f"{path}: time column must be strictly increasing")
    steps = np.diff(t)
    if np.any(np.abs(steps - step) > UNIFORMITY_RTOL * step):
        raise DataError(f"{path}: time column is not uniformly sampled")
    rate = round(1.0 / step, 6)
    if condition is None:
        try:
            condition = Condition.parse(path.stem)
        except (ValueError, TypeError):
            condition = Condition("rest", 1)
    return MultiChannelEpoch(table[:, 1:].T, tuple(header[1:]), rate, condition)


def write_signal_csv(path, epoch) -> None:
    """Write a MultiChannelEpoch, a TimeSeries (column ``value``) or a dict of
    equally sampled TimeSeries."""
    if isinstance(epoch, TimeSeries):
        names, data, rate = ("value",), epoch.samples[None, :], epoch.sample_rate
    elif isinstance(epoch, dict):
        first = next(iter(epoch.values()))
        names = tuple(epoch)
        data = np.vstack([s.samples for s in epoch.values()])
        rate = first.sample_rate
    else:
        names, data, rate = epoch.channel_names, epoch.data, epoch.sample_rate
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    times = np.arange(data.shape[1]) / rate
    lines = [",".join(("time",) + tuple(names))]
    cols = [times] + list(data)
    for row in zip(*[c.tolist() for c in cols]):
        lines.append(",".join(map(repr, row)))
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
    os.replace(tmp, path)
