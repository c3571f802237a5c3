"""Pipeline configuration and its flat ``key = value`` file format.

Blank lines and ``#`` comments are ignored; unknown keys are errors. List
values (``feature_scales``) are comma-separated integers.
"""

from __future__ import annotations

import hashlib
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .classify import FEATURE_SCALES, ModelKind
from .entropy import Method
from .errors import ConfigError

APPLY_TO = ("ssvep", "rest", "both", "none")


@dataclass(frozen=True)
class PipelineConfig:
    # preprocessing
    target_rate: float = 250.0
    band_low: float = 1.0
    band_high: float = 30.0
    fir_taps: int = 0  # 0 selects the default for the sample rate
    artifact_limit: float = 100.0
    # entropy
    method: str = "inherent"
    m: int = 2
    n: float = 2.0
    r: float = 0.2
    scales: int = 20
    trend_cutoff_hz: float = 1.0
    sd_threshold: float = 0.2
    max_sift_iterations: int = 100
    max_imfs: int = 12
    # cca
    f1: float = 15.0
    keep: int = 2
    denoise_apply_to: str = "ssvep"
    # stats
    alpha: float = 0.05
    fdr_method: str = "bh"
    welch: bool = True
    # classification
    model: str = "adaboost"
    folds: int = 3
    repeats: int = 100
    tune: bool = True
    feature_scales: tuple = FEATURE_SCALES
    feature_region: str = "occipital"
    # run control
    seed: int = 0
    workers: int = 1

    def validate(self) -> "PipelineConfig":
        problems = []
        if not 0 < self.band_low < self.band_high < self.target_rate / 2:
            problems.append("need 0 < band_low < band_high < target_rate/2")
        if self.fir_taps and (self.fir_taps < 31 or self.fir_taps % 2 == 0):
            problems.append("fir_taps must be 0 or an odd number >= 31")
        if self.artifact_limit <= 0:
            problems.append("artifact_limit must be positive")
        try:
            Method(self.method)
        except ValueError:
            problems.append(f"unknown entropy method {self.method!r}")
        if self.m < 1 or self.n <= 0 or self.r <= 0 or self.scales < 1:
            problems.append("entropy parameters out of range")
        if not 0 < self.sd_threshold < 1 or self.max_sift_iterations < 1 or self.max_imfs < 1:
            problems.append("sifting parameters out of range")
        if not 0 < self.f1 < self.target_rate / 4:
            problems.append("f1 must be positive with its harmonic below Nyquist")
        if self.keep < 1:
            problems.append("keep must be >= 1")
        if self.denoise_apply_to not in APPLY_TO:
            problems.append(f"denoise_apply_to must be one of {APPLY_TO}")
        if not 0 < self.alpha < 1:
            problems.append("alpha must lie in (0, 1)")
        if self.fdr_method not in ("bh", "by"):
            problems.append("fdr_method must be bh or by")
        try:
            ModelKind(self.model)
        except ValueError:
            problems.append(f"unknown model {self.model!r}")
        if self.folds < 2 or self.repeats < 1:
            problems.append("need folds >= 2 and repeats >= 1")
        if not self.feature_scales or any(not 1 <= s <= self.scales for s in self.feature_scales):
            problems.append("feature_scales must lie within 1..scales")
        if self.feature_region not in ("occipital", "prefrontal"):
            problems.append("feature_region must be occipital or prefrontal")
        if self.workers < 1:
            problems.append("workers must be >= 1")
        if problems:
            raise ConfigError("; ".join(problems))
        return self

    def to_text(self) -> str:
        lines = []
        for key, value in asdict(self).items():
            if isinstance(value, tuple):
                value = ",".join(str(v) for v in value)
            elif isinstance(value, bool):
                value = "true" if value else "false"
            lines.append(f"{key} = {value}")
        return "\n".join(lines) + "\n"


_TYPES = {f.name: f.type for f in fields(PipelineConfig)}


def _convert(key, text):
    kind = _TYPES[key]
    text = text.strip()
    if kind == "bool":
        if text.lower() in ("true", "yes", "1"):
            return True
        if text.lower() in ("false", "no", "0"):
            return False
        raise ValueError(text)
    if kind == "int":
        return int(text)
    if kind == "float":
        return float(text)
    if kind == "tuple":
        return tuple(int(v) for v in text.split(",") if v.strip())
    return text


def parse_config(text: str, base: PipelineConfig | None = None) -> PipelineConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        if key not in _TYPES:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            values[key] = _convert(key, value)
        except ValueError:
            raise ConfigError(f"line {lineno}: bad value for {key}: {value.strip()!r}") from None
    return replace(base or PipelineConfig(), **values).validate()


def load_config(path) -> PipelineConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)


def stage_seed(seed: int, stage: str) -> int:
    """Per-stage seed: SHA-256 of ``"<seed>:<stage>"`` truncated to 63 bits."""
    digest = hashlib.sha256(f"{seed}:{stage}".encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1
