"""Deterministic synthetic EEG cohorts.

Each channel carries 1/f^beta Gaussian noise (partly shared across
channels), flat below 1 Hz and scaled to a fixed RMS within 1-30 Hz so that
beta changes only the spectral shape inside the analysis band and never the
SSVEP-to-noise ratio. Raising beta makes the signal smoother and lowers its
entropy at every scale, so the per-trial drift of beta is the knob that
plants a complexity trend:
``beta_k = beta_subject - trend * (k - 1) / 4`` for SSVEP trial k, with the
resting blocks at ``beta_subject``. A positive trend therefore means entropy
rising over the five trials. SSVEP epochs add 15 Hz and 30 Hz sinusoids on
the occipital channels. Nothing here claims fidelity to real EEG.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .classify import Phase, SubjectFeatures
from .csvio import write_rows, write_signal_csv
from .errors import ConfigError
from .series import DEFAULT_CHANNELS, OCCIPITAL, Condition, MultiChannelEpoch

GROUPS = ("HC", "Patient")
HC_PHASE = "hc"
N_REST = 3
N_SSVEP = 5
NOISE_RMS = 10.0  # microvolts
SSVEP_AMPLITUDE = (5.0, 2.5)  # microvolts at f1 and 2*f1
OCCIPITAL_GAIN = {"O1": 1.0, "Oz": 1.2, "O2": 1.0}
SHARED_NOISE = 0.5  # fraction of noise variance common to all channels


@dataclass(frozen=True)
class CohortSpec:
    n_hc: int = 40
    n_patients: int = 40
    trend_hc: float = 1.0
    trend_inter: float = 0.5
    trend_pre: float = -1.0
    beta0: float = 2.0
    seed: int = 0
    rest_seconds: float = 60.0
    ssvep_seconds: float = 10.0
    sample_rate: float = 250.0
    f1: float = 15.0
    subject_beta_sd: float = 0.1
    trial_beta_sd: float = 0.02

    def __post_init__(self):
        if self.n_hc < 0 or self.n_patients < 0 or self.n_hc + self.n_patients < 1:
            raise ValueError("cohort needs at least one subject")
        for name in ("trend_hc", "trend_inter", "trend_pre", "beta0"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.rest_seconds <= 0 or self.ssvep_seconds <= 0 or self.sample_rate <= 0:
            raise ValueError("durations and sample rate must be positive")

    def trend(self, phase: str) -> float:
        return {HC_PHASE: self.trend_hc, Phase.INTERICTAL.value: self.trend_inter, Phase.PREICTAL.value: self.trend_pre}[phase]

    def null(self) -> "CohortSpec":
        return replace(self, trend_hc=0.0, trend_inter=0.0, trend_pre=0.0)


_SPEC_TYPES = {f.name: f.type for f in fields(CohortSpec)}


def parse_spec(text: str) -> CohortSpec:
    """Read the flat ``key = value`` cohort format; ``#`` starts a comment."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep:
            raise ConfigError(f"line {lineno}: expected key = value")
        if key not in _SPEC_TYPES:
            raise ConfigError(f"line {lineno}: unknown cohort key {key!r}")
        try:
            values[key] = int(value) if _SPEC_TYPES[key] == "int" else float(value)
        except ValueError:
            raise ConfigError(f"line {lineno}: bad value for {key}: {value.strip()!r}") from None
    try:
        return CohortSpec(**values)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def load_spec(path) -> CohortSpec:
    return parse_spec(Path(path).read_text())


NOISE_BAND = (1.0, 30.0)  # Hz


def colored_noise(rng, n: int, beta: float, rate: float = 250.0, band=NOISE_BAND) -> np.ndarray:
    """Gaussian noise with power ~ 1/f^beta above ``band[0]`` (flat below)
    and unit RMS within ``band``."""
    spectrum = np.fft.rfft(rng.standard_normal(n))
    f = np.fft.rfftfreq(n, 1.0 / rate)
    shaped = spectrum * np.maximum(f, band[0]) ** (-beta / 2.0)
    inside = (f >= band[0]) & (f <= band[1])
    band_rms = np.sqrt(2.0 * np.sum(np.abs(shaped[inside]) ** 2)) / n
    return np.fft.irfft(shaped, n) / band_rms


def _epoch(spec: CohortSpec, rng, condition: Condition, beta: float) -> MultiChannelEpoch:
    seconds = spec.rest_seconds if condition.kind == "rest" else spec.ssvep_seconds
    n = int(round(seconds * spec.sample_rate))
    t = np.arange(n) / spec.sample_rate
    shared = colored_noise(rng, n, beta, spec.sample_rate)
    rows = []
    for ch in DEFAULT_CHANNELS:
        own = colored_noise(rng, n, beta, spec.sample_rate)
        rows.append(NOISE_RMS * (np.sqrt(SHARED_NOISE) * shared + np.sqrt(1 - SHARED_NOISE) * own))
    data = np.vstack(rows)
    if condition.kind == "ssvep":
        phase1, phase2 = rng.uniform(0, 2 * np.pi, 2)
        ssvep = SSVEP_AMPLITUDE[0] * np.sin(2 * np.pi * spec.f1 * t + phase1) + SSVEP_AMPLITUDE[1] * np.sin(
            2 * np.pi * 2 * spec.f1 * t + phase2
        )
        for i, ch in enumerate(DEFAULT_CHANNELS):
            if ch in OCCIPITAL:
                data[i] += OCCIPITAL_GAIN[ch] * ssvep
    return MultiChannelEpoch(data, DEFAULT_CHANNELS, spec.sample_rate, condition)


def gen_session(spec: CohortSpec, phase: str, seed) -> list[MultiChannelEpoch]:
    """Three resting blocks and five SSVEP trials for one recording session."""
    rng = np.random.default_rng(seed)
    beta_subject = spec.beta0 + spec.subject_beta_sd * rng.standard_normal()
    trend = spec.trend(phase)
    epochs = []
    for k in range(1, N_REST + 1):
        epochs.append(_epoch(spec, rng, Condition("rest", k), beta_subject))
    for k in range(1, N_SSVEP + 1):
        beta = beta_subject - trend * (k - 1) / (N_SSVEP - 1) + spec.trial_beta_sd * rng.standard_normal()
        epochs.append(_epoch(spec, rng, Condition("ssvep", k), beta))
    return epochs


@dataclass(frozen=True)
class SyntheticSubject:
    subject_id: str
    group: str
    phases: tuple  # phase of each session, in session order
    seed: tuple

    def session_seed(self, index: int) -> list:
        return [*self.seed, index]

    def sessions(self, spec: CohortSpec):
        """Yield (session_name, phase, epochs)."""
        for i, phase in enumerate(self.phases, 1):
            yield f"session_{i}", phase, gen_session(spec, phase, self.session_seed(i))


def cohort_subjects(spec: CohortSpec) -> list[SyntheticSubject]:
    subjects = []
    for i in range(spec.n_hc):
        subjects.append(SyntheticSubject(f"HC{i + 1:03d}", "HC", (HC_PHASE,), (spec.seed, 0, i)))
    for i in range(spec.n_patients):
        subjects.append(
            SyntheticSubject(
                f"P{i + 1:03d}",
                "Patient",
                (Phase.INTERICTAL.value, Phase.PREICTAL.value),
                (spec.seed, 1, i),
            )
        )
    return subjects


def gen_subject(spec: CohortSpec, group: str, subject_seed) -> dict:
    """All sessions of one subject: ``{session_name: (phase, epochs)}``.

    Healthy controls get one session; patients one inter-ictal and one
    pre-ictal session.
    """
    if group not in GROUPS:
        raise ValueError(f"group must be one of {GROUPS}")
    phases = (HC_PHASE,) if group == "HC" else (Phase.INTERICTAL.value, Phase.PREICTAL.value)
    seed = tuple(np.atleast_1d(subject_seed).tolist())
    subj = SyntheticSubject("S", group, phases, seed)
    return {name: (phase, epochs) for name, phase, epochs in subj.sessions(spec)}


def write_labels(path, subjects) -> None:
    write_rows(path, ("subject_id", "group", "phase_per_session"), [(s.subject_id, s.group, ";".join(s.phases)) for s in subjects])


def gen_cohort(spec: CohortSpec, out_dir) -> list[SyntheticSubject]:
    """Write the cohort in the pipeline's directory layout and return its roster.

    Layout: ``labels.csv`` plus ``<subject>/session_<k>/{rest_1..3,ssvep_1..5}.csv``.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    subjects = cohort_subjects(spec)
    for subj in subjects:
        for session, _, epochs in subj.sessions(spec):
            for ep in epochs:
                write_signal_csv(out / subj.subject_id / session / f"{ep.condition.name}.csv", ep)
    write_labels(out / "labels.csv", subjects)
    return subjects


def gen_feature_cohort(n_subjects: int = 40, margin: float = 2.0, n_features: int = 10, seed: int = 0) -> list[SubjectFeatures]:
    """Feature-level cohort: each subject contributes one inter-ictal and one
    pre-ictal vector, centred at +margin/2 and -margin/2 with unit noise."""
    rng = np.random.default_rng([seed, 7])
    data = []
    for i in range(n_subjects):
        sid = f"P{i + 1:03d}"
        offset = 0.3 * rng.standard_normal(n_features)
        data.append(SubjectFeatures(sid, offset + margin / 2 + rng.standard_normal(n_features), Phase.INTERICTAL))
        data.append(SubjectFeatures(sid, offset - margin / 2 + rng.standard_normal(n_features), Phase.PREICTAL))
    return data
