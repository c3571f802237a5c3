"""End-to-end run from raw epoch CSVs to statistics and classification.

Data layout::

    data_dir/labels.csv                  subject_id,group,phase_per_session
    data_dir/<subject>/session_<k>/      one directory per entry of phase_per_session
        rest_1.csv .. rest_3.csv
        ssvep_1.csv .. ssvep_5.csv

``phase_per_session`` is a ``;``-separated list drawn from ``hc``,
``interictal`` and ``preictal``. A subject with a single session may keep
its epoch files directly in ``<subject>/``.

Per session: decimate to the target rate, band-pass, reject epochs that
exceed the amplitude limit, CCA-denoise (SSVEP trials by default), then a
multiscale entropy profile per channel and epoch. The resting profiles are
averaged into a baseline, each trial becomes a relative profile, channels
are averaged into regions, sessions of the same phase are averaged per
subject, and the transitional variance is RE_5 - RE_1.
"""

from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import cca
from .classify import Phase, SubjectFeatures, cross_validate
from .config import PipelineConfig, stage_seed
from .csvio import fmt, read_rows, read_signal_csv, write_rows, write_signal_csv
from .emd import SiftConfig
from .entropy import EntropyParams, aggregate_sessions, multiscale_profile, relative_profile
from .errors import DataError, DegenerateVariance, LayoutError, MissingEpoch
from .preprocess import bandpass_epoch, decimate_epoch, reject_artifacts, Rejected
from .series import OCCIPITAL, PREFRONTAL, Condition
from .stats import fdr_bh, t_test

logger = logging.getLogger(__name__)

REST_EPOCHS = tuple(f"rest_{k}" for k in range(1, 4))
SSVEP_EPOCHS = tuple(f"ssvep_{k}" for k in range(1, 6))
EPOCHS = REST_EPOCHS + SSVEP_EPOCHS
PHASES = ("hc", "interictal", "preictal")
REGIONS = {"occipital": OCCIPITAL, "prefrontal": PREFRONTAL}


@dataclass(frozen=True)
class SessionRecord:
    subject_id: str
    group: str
    session: str
    phase: str
    path: str


def discover(data_dir) -> list[SessionRecord]:
    root = Path(data_dir)
    labels = root / "labels.csv"
    if not labels.is_file():
        raise LayoutError(f"{root}: labels.csv not found")
    header, rows = read_rows(labels)
    if header != ["subject_id", "group", "phase_per_session"]:
        raise LayoutError(f"{labels}: header must be subject_id,group,phase_per_session")
    records = []
    for row in rows:
        if len(row) != 3:
            raise LayoutError(f"{labels}: malformed row {row}")
        sid, group, phases = row
        phases = [p.strip() for p in phases.split(";") if p.strip()]
        if not phases or any(p not in PHASES for p in phases):
            raise LayoutError(f"{labels}: subject {sid} has invalid phases {row[2]!r}")
        subj_dir = root / sid
        if not subj_dir.is_dir():
            raise LayoutError(f"subject directory {subj_dir} not found")
        for k, phase in enumerate(phases, 1):
            sess_dir = subj_dir / f"session_{k}"
            if not sess_dir.is_dir():
                if len(phases) == 1 and (subj_dir / "rest_1.csv").exists():
                    sess_dir = subj_dir
                else:
                    raise LayoutError(f"session directory {sess_dir} not found")
            for epoch in EPOCHS:
                if not (sess_dir / f"{epoch}.csv").is_file():
                    raise MissingEpoch(sid, epoch, f"session_{k}")
            records.append(SessionRecord(sid, group, f"session_{k}", phase, str(sess_dir)))
    return sorted(records, key=lambda r: (r.subject_id, r.session))


@dataclass
class SessionResult:
    record: SessionRecord
    profiles: dict  # (epoch, channel) -> EntropyProfile
    rejected: list  # (epoch, channel, index, value)
    correlations: dict  # epoch -> canonical correlations
    channel_names: tuple = ()
    elapsed: float = 0.0  # processing seconds; informational, never written


def _entropy_params(cfg):
    return EntropyParams(cfg.m, cfg.n, cfg.r)


def _sift(cfg):
    return SiftConfig(cfg.sd_threshold, cfg.max_sift_iterations, cfg.max_imfs)


def preprocess_epoch(epoch, cfg: PipelineConfig):
    factor = epoch.sample_rate / cfg.target_rate
    if factor < 1 or abs(factor - round(factor)) > 1e-9:
        raise DataError(f"sample rate {epoch.sample_rate} Hz is not an integer multiple of {cfg.target_rate} Hz")
    epoch = decimate_epoch(epoch, int(round(factor)))
    return bandpass_epoch(epoch, cfg.band_low, cfg.band_high, cfg.fir_taps or None)


def _denoise_applies(cfg, condition: Condition) -> bool:
    scope = cfg.denoise_apply_to
    return scope == "both" or scope == condition.kind


def process_session(record: SessionRecord, cfg: PipelineConfig, out_dir=None) -> SessionResult:
    start = time.perf_counter()
    profiles, rejected, correlations = {}, [], {}
    params, sift = _entropy_params(cfg), _sift(cfg)
    names = ()
    for epoch_name in EPOCHS:
        where = f"{record.subject_id}/{record.session}/{epoch_name}"
        try:
            epoch = read_signal_csv(Path(record.path) / f"{epoch_name}.csv", Condition.parse(epoch_name))
            epoch = preprocess_epoch(epoch, cfg)
            check = reject_artifacts(epoch, cfg.artifact_limit)
            if isinstance(check, Rejected):
                rejected.append((epoch_name, check.channel, check.index, check.value))
                logger.info("%s rejected: %s exceeds limit at sample %d", where, check.channel, check.index)
                continue
            if _denoise_applies(cfg, epoch.condition):
                tmpl = cca.make_template(cfg.f1, epoch.n_samples, epoch.sample_rate)
                sol = cca.cca_solve(epoch, tmpl)
                epoch = cca.denoise(epoch, sol, cfg.keep)
                correlations[epoch_name] = sol.correlations
            if out_dir is not None:
                write_signal_csv(Path(out_dir) / "preprocessed" / record.subject_id / record.session / f"{epoch_name}.csv", epoch)
            names = epoch.channel_names
            for ch, series in epoch.channels.items():
                profiles[(epoch_name, ch)] = multiscale_profile(
                    series, cfg.method, params, cfg.scales, cfg.trend_cutoff_hz, sift
                )
        except MissingEpoch:
            raise
        except DataError as exc:
            # keep the subtype, prefix the message with the epoch's location
            exc.args = (f"{where}: {exc}",) + exc.args[1:]
            raise
    return SessionResult(record, profiles, rejected, correlations, names, time.perf_counter() - start)


def _run_one(args):
    record, cfg, out_dir = args
    return process_session(record, cfg, out_dir)


# --- aggregation -------------------------------------------------------------


def session_relative(result: SessionResult, region_channels) -> dict:
    """Region-averaged RE_k for every usable trial k of one session."""
    out = {}
    channels = [ch for ch in region_channels if ch in result.channel_names]
    if not channels:
        return out
    baselines = {}
    for ch in channels:
        rest = [result.profiles[(e, ch)] for e in REST_EPOCHS if (e, ch) in result.profiles]
        if rest:
            baselines[ch] = aggregate_sessions(rest)
    if len(baselines) != len(channels):
        return out
    for k, e in enumerate(SSVEP_EPOCHS, 1):
        per_ch = [relative_profile(result.profiles[(e, ch)], baselines[ch], k) for ch in channels if (e, ch) in result.profiles]
        if len(per_ch) == len(channels):
            out[k] = aggregate_sessions(per_ch)
    return out


def subject_relative(results, region_channels) -> dict:
    """{(subject_id, phase): {trial: RelativeProfile}} averaged over sessions."""
    grouped: dict = {}
    for res in results:
        rel = session_relative(res, region_channels)
        key = (res.record.subject_id, res.record.phase)
        grouped.setdefault(key, []).append(rel)
    out = {}
    for key, sessions in grouped.items():
        trials = {}
        for k in range(1, 6):
            profs = [s[k] for s in sessions if k in s]
            if profs:
                trials[k] = aggregate_sessions(profs)
        out[key] = trials
    return out


def _quantity(trials: dict, name: str):
    if name == "tv":
        if 1 in trials and 5 in trials:
            return trials[5].as_array() - trials[1].as_array()
        return None
    k = int(name[2:])
    return trials[k].as_array() if k in trials else None


def group_table(rel: dict, phase: str, quantity: str) -> dict:
    """{subject_id: per-scale vector} for one phase and quantity (tv, re1..re5)."""
    table = {}
    for (sid, ph), trials in sorted(rel.items()):
        if ph == phase:
            v = _quantity(trials, quantity)
            if v is not None:
                table[sid] = v
    return table


# --- statistics ----------------------------------------------------------------

PANELS = (
    # name, quantity, phase a, phase b, kind
    ("tv_pre_vs_inter", "tv", "preictal", "interictal", "paired"),
    ("tv_pre_vs_hc", "tv", "preictal", "hc", "independent"),
    ("tv_inter_vs_hc", "tv", "interictal", "hc", "independent"),
    ("re1_pre_vs_hc", "re1", "preictal", "hc", "independent"),
    ("re5_pre_vs_hc", "re5", "preictal", "hc", "independent"),
    ("re1_vs_re5_hc", ("re1", "re5"), "hc", "hc", "paired"),
    ("re1_vs_re5_inter", ("re1", "re5"), "interictal", "interictal", "paired"),
    ("re1_vs_re5_pre", ("re1", "re5"), "preictal", "preictal", "paired"),
)
PRIMARY_PANEL = "tv_pre_vs_inter"


@dataclass
class PanelResult:
    region: str
    panel: str
    kind: str
    rows: list  # (scale, t, df, p, adjusted_p, rejected)
    n_a: int
    n_b: int

    @property
    def significant_scales(self) -> list:
        return [r[0] for r in self.rows if r[5]]


def compare_tables(table_a: dict, table_b: dict, kind: str, n_scales: int, alpha: float, fdr_method: str, welch: bool = True) -> list:
    """Per-scale t-tests between two {subject: vector} tables, FDR-corrected
    across scales. Rows are (scale, t, df, p, adjusted_p, rejected); scales
    without a valid test carry None."""
    if kind == "paired":
        common = sorted(set(table_a) & set(table_b))
        a_rows = [table_a[s] for s in common]
        b_rows = [table_b[s] for s in common]
    else:
        a_rows = [table_a[s] for s in sorted(table_a)]
        b_rows = [table_b[s] for s in sorted(table_b)]
    A = np.array(a_rows, float).reshape(len(a_rows), n_scales)
    B = np.array(b_rows, float).reshape(len(b_rows), n_scales)
    results = []
    for j in range(n_scales):
        a, b = A[:, j], B[:, j]
        if kind == "paired":
            ok = np.isfinite(a) & np.isfinite(b)
            a, b = a[ok], b[ok]
        else:
            a, b = a[np.isfinite(a)], b[np.isfinite(b)]
        dropped = (A.shape[0] - a.size) + (B.shape[0] - b.size)
        if dropped:
            logger.info("scale %d: %d undefined values excluded", j + 1, dropped)
        try:
            if a.size < 2 or b.size < 2:
                raise DegenerateVariance("too few values")
            res = t_test(a, b, kind, welch=welch)
            results.append((res.statistic, res.degrees_of_freedom, res.p_value))
        except DegenerateVariance:
            results.append(None)
    valid = [i for i, r in enumerate(results) if r is not None]
    adjusted = [None] * n_scales
    rejected = [False] * n_scales
    if valid:
        fdr = fdr_bh([results[i][2] for i in valid], alpha, fdr_method)
        for pos, i in enumerate(valid):
            adjusted[i] = float(fdr.adjusted_p[pos])
            rejected[i] = bool(fdr.rejected[pos])
    rows = []
    for j in range(n_scales):
        t, df, p = results[j] if results[j] is not None else (None, None, None)
        rows.append((j + 1, t, df, p, adjusted[j], rejected[j]))
    return rows


def run_panels(rel: dict, region: str, cfg: PipelineConfig) -> list:
    out = []
    for name, quantity, pa, pb, kind in PANELS:
        if isinstance(quantity, tuple):
            ta, tb = group_table(rel, pa, quantity[0]), group_table(rel, pb, quantity[1])
        else:
            ta, tb = group_table(rel, pa, quantity), group_table(rel, pb, quantity)
        n_a, n_b = len(ta), len(tb)
        if kind == "paired":
            n_a = n_b = len(set(ta) & set(tb))
        if n_a < 2 or n_b < 2:
            logger.info("panel %s/%s skipped: too few subjects (%d, %d)", region, name, n_a, n_b)
            continue
        rows = compare_tables(ta, tb, kind, cfg.scales, cfg.alpha, cfg.fdr_method, cfg.welch)
        out.append(PanelResult(region, name, kind, rows, n_a, n_b))
    return out


STATS_HEADER = ("scale", "t", "df", "p", "adjusted_p", "rejected")


def write_stats_rows(path, rows) -> None:
    write_rows(path, STATS_HEADER, rows)


# --- classification ---------------------------------------------------------------


def build_features(rel: dict, cfg: PipelineConfig) -> list[SubjectFeatures]:
    idx = [s - 1 for s in cfg.feature_scales]
    data = []
    for phase in (Phase.INTERICTAL, Phase.PREICTAL):
        for sid, tv in group_table(rel, phase.value, "tv").items():
            v = tv[idx]
            if np.all(np.isfinite(v)):
                data.append(SubjectFeatures(sid, v, phase))
    data.sort(key=lambda d: (d.subject_id, d.label.value))
    return data


def feature_header(n: int) -> tuple:
    return ("subject_id", "label") + tuple(f"f{i}" for i in range(1, n + 1))


def write_features(path, data, n_features: int) -> None:
    write_rows(path, feature_header(n_features), [(d.subject_id, d.label.value, *d.features.tolist()) for d in data])


def read_features(path) -> list[SubjectFeatures]:
    header, rows = read_rows(path)
    if header[:2] != ["subject_id", "label"] or len(header) < 3:
        raise DataError(f"{path}: header must be subject_id,label,f1..fN")
    data = []
    for row in rows:
        try:
            data.append(SubjectFeatures(row[0], [float(v) for v in row[2:]], Phase(row[1])))
        except ValueError as exc:
            raise DataError(f"{path}: bad row {row}: {exc}") from None
    return data


def cv_summary_rows(summary) -> list:
    rows = []
    for name in ("accuracy", "recall", "precision", "f_measure", "auc"):
        s = summary.metric(name)
        rows.append((name, s.mean, s.sd, s.n_defined))
    return rows


def write_cv_outputs(out_dir, summary) -> None:
    out = Path(out_dir)
    write_rows(out / "cv_summary.csv", ("metric", "mean", "sd", "n_defined"), cv_summary_rows(summary))
    write_rows(out / "roc.csv", ("fpr", "tpr"), summary.roc_points.tolist())


# --- driver --------------------------------------------------------------------------


@dataclass
class RunReport:
    n_sessions: int
    n_subjects: int
    rejected_epochs: list
    panels: list = field(default_factory=list)
    classification: dict | None = None
    classification_note: str | None = None
    session_seconds: list = field(default_factory=list)

    def significant(self) -> dict:
        out: dict = {}
        for p in self.panels:
            out.setdefault(p.region, {})[p.panel] = p.significant_scales
        return out

    def panel(self, region: str, name: str):
        for p in self.panels:
            if p.region == region and p.panel == name:
                return p
        return None

    def to_json(self) -> dict:
        return {
            "n_sessions": self.n_sessions,
            "n_subjects": self.n_subjects,
            "rejected_epochs": self.rejected_epochs,
            "significant_scales": self.significant(),
            "classification": self.classification,
            "classification_note": self.classification_note,
        }


def run_pipeline(cfg: PipelineConfig, data_dir, out_dir, workers: int | None = None) -> RunReport:
    cfg = cfg.validate()
    workers = cfg.workers if workers is None else workers
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records = discover(data_dir)
    if not records:
        raise LayoutError(f"{data_dir}: labels.csv lists no subjects")
    jobs = [(r, cfg, str(out)) for r in records]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = [_run_one(j) for j in jobs]

    rejected = [
        {"subject_id": r.record.subject_id, "session": r.record.session, "epoch": e, "channel": ch, "index": i, "value": v}
        for r in results
        for e, ch, i, v in r.rejected
    ]
    profile_rows = []
    for r in results:
        for (epoch, ch), prof in sorted(r.profiles.items(), key=lambda kv: (EPOCHS.index(kv[0][0]), r.channel_names.index(kv[0][1]))):
            for s, v in zip(prof.scales, prof.values):
                profile_rows.append((r.record.subject_id, r.record.session, r.record.phase, epoch, ch, s, v))
    write_rows(out / "profiles.csv", ("subject_id", "session", "phase", "epoch", "channel", "scale", "value"), profile_rows)
    cca_rows = [
        (r.record.subject_id, r.record.session, e, i + 1, c)
        for r in results
        for e, corr in sorted(r.correlations.items())
        for i, c in enumerate(corr.tolist())
    ]
    write_rows(out / "cca_correlations.csv", ("subject_id", "session", "epoch", "component", "correlation"), cca_rows)

    report = RunReport(len(records), len({r.subject_id for r in records}), rejected)
    report.session_seconds = [r.elapsed for r in results]
    rel_by_region = {}
    rel_rows, tv_rows = [], []
    for region, channels in REGIONS.items():
        rel = subject_relative(results, channels)
        rel_by_region[region] = rel
        for (sid, phase), trials in sorted(rel.items()):
            for k, prof in sorted(trials.items()):
                rel_rows.extend((sid, phase, region, k, s, v) for s, v in zip(prof.scales, prof.values))
            tv = _quantity(trials, "tv")
            if tv is not None:
                tv_rows.extend((sid, phase, region, s + 1, None if np.isnan(v) else float(v)) for s, v in enumerate(tv))
        for phase in PHASES:
            for quantity in ("tv", "re1", "re5"):
                table = group_table(rel, phase, quantity)
                if table:
                    header = ("subject_id",) + tuple(f"s{s}" for s in range(1, cfg.scales + 1))
                    write_rows(
                        out / "groups" / f"{region}_{quantity}_{phase}.csv",
                        header,
                        [(sid, *[None if np.isnan(v) else float(v) for v in vec]) for sid, vec in table.items()],
                    )
        for panel in run_panels(rel, region, cfg):
            report.panels.append(panel)
            write_stats_rows(out / "stats" / f"{region}_{panel.panel}.csv", panel.rows)
    write_rows(out / "relative.csv", ("subject_id", "phase", "region", "trial", "scale", "value"), rel_rows)
    write_rows(out / "tv.csv", ("subject_id", "phase", "region", "scale", "value"), tv_rows)
    write_rows(
        out / "stats.csv",
        ("region", "panel", "kind", "n_a", "n_b") + STATS_HEADER,
        [(p.region, p.panel, p.kind, p.n_a, p.n_b, *row) for p in report.panels for row in p.rows],
    )

    features = build_features(rel_by_region[cfg.feature_region], cfg)
    write_features(out / "features.csv", features, len(cfg.feature_scales))
    try:
        summary = cross_validate(
            cfg.model, features, cfg.folds, cfg.repeats, stage_seed(cfg.seed, "classify"), cfg.tune
        )
        write_cv_outputs(out, summary)
        report.classification = {name: asdict(summary.metric(name)) for name in ("accuracy", "recall", "precision", "f_measure", "auc")}
        report.classification["model"] = summary.kind
    except DataError as exc:
        report.classification_note = f"classification skipped: {exc}"
        logger.info(report.classification_note)

    (out / "config.txt").write_text(cfg.to_text())
    (out / "report.json").write_text(json.dumps(report.to_json(), indent=2, sort_keys=True, default=fmt) + "\n")
    return report
