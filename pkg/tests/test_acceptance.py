"""Acceptance suite: one group of tests per numbered criterion.

Run with ``pytest tests/test_acceptance.py -v``; the terminal summary lists
PASS or FAIL for each criterion. Criterion 8 processes the full 80-subject
synthetic cohort plus 20 reduced null cohorts and dominates the runtime.
"""

import filecmp
import os
import time
from dataclasses import replace

import numpy as np
import pytest

from fuzentra.cca import cca_solve, denoise, make_template
from fuzentra.classify import SubjectFeatures, cross_validate, roc_auc
from fuzentra.cli import main
from fuzentra.config import PipelineConfig
from fuzentra.csvio import read_rows
from fuzentra.emd import decompose, detrend_reconstruct
from fuzentra.entropy import EntropyParams, approximate_entropy, coarse_grain, fuzzy_entropy, sample_entropy
from fuzentra.pipeline import PRIMARY_PANEL, run_pipeline
from fuzentra.series import MultiChannelEpoch, TimeSeries
from fuzentra.stats import fdr_bh, icc_oneway, t_two_tailed_p
from fuzentra.synth import CohortSpec, gen_cohort, gen_feature_cohort

import oracles

RATE = 250.0


def criterion(n):
    return pytest.mark.criterion(n)


def detail(record_property, text):
    record_property("detail", text)


# --- 1 and 2: entropy estimators against naive oracles ------------------------


def entropy_suite():
    """200 seeded signals, N <= 128, cycling m in {1,2,3} and r in {0.1,0.2,0.3}."""
    for seed in range(200):
        rng = np.random.default_rng([seed, 1])
        n = int(rng.integers(16, 129))
        kind = seed % 5
        if kind == 0:
            x = rng.standard_normal(n)
        elif kind == 1:
            x = rng.uniform(-1, 1, n)
        elif kind == 2:
            x = np.cumsum(rng.standard_normal(n))
        elif kind == 3:
            x = np.sin(2 * np.pi * rng.uniform(1, 30) * np.arange(n) / RATE) + 0.3 * rng.standard_normal(n)
        else:
            x = rng.integers(-3, 4, n).astype(float)  # many exact ties
        yield x, 1 + seed % 3, (0.1, 0.2, 0.3)[(seed // 3) % 3]


@criterion(1)
def test_entropy_oracle_suite(record_property):
    suite = list(entropy_suite())
    t0 = time.perf_counter()
    got = [
        (fuzzy_entropy(x, EntropyParams(m, 2.0, r)), approximate_entropy(x, m, r), sample_entropy(x, m, r))
        for x, m, r in suite
    ]
    elapsed = time.perf_counter() - t0
    worst = 0.0
    for (x, m, r), (fe, ap, se) in zip(suite, got):
        want_se = oracles.sample_entropy(x, m, r)
        assert (se is None) == (want_se is None)
        diffs = [abs(fe - oracles.fuzzy_entropy(x, m, 2.0, r)), abs(ap - oracles.approximate_entropy(x, m, r))]
        if se is not None:
            diffs.append(abs(se - want_se))
        worst = max(worst, *diffs)
    detail(record_property, f"200 signals, worst deviation {worst:.2e}, estimator time {elapsed:.2f} s")
    assert worst <= 1e-10
    assert elapsed < 30.0


@criterion(2)
def test_fuzzy_entropy_nonnegative(record_property):
    low = min(fuzzy_entropy(x, EntropyParams(m, 2.0, r)) for x, m, r in entropy_suite())
    detail(record_property, f"minimum fuzzy entropy {low:.3e}")
    assert low >= -1e-12


# --- 3: EMD -----------------------------------------------------------------------


@criterion(3)
def test_emd_reconstruction(record_property):
    worst = 0.0
    for seed in range(100):
        rng = np.random.default_rng([seed, 3])
        n = int(rng.integers(64, 2000))
        t = np.arange(n) / RATE
        x = rng.standard_normal(n) * 10 ** rng.uniform(-3, 3)
        if seed % 2:
            x = x + sum(rng.uniform(0.5, 5) * np.sin(2 * np.pi * rng.uniform(0.5, 40) * t) for _ in range(3))
        d = decompose(TimeSeries(x, RATE))
        worst = max(worst, np.max(np.abs(x - d.reconstruct())) / np.ptp(x))
    detail(record_property, f"100 signals, worst error / peak-to-peak {worst:.2e}")
    assert worst <= 1e-8


@criterion(3)
def test_emd_two_tone(record_property):
    t = np.arange(int(4 * RATE)) / RATE
    slow, fast = np.sin(2 * np.pi * t), np.sin(2 * np.pi * 10 * t)
    d = decompose(TimeSeries(slow + fast, RATE))
    c_fast = np.corrcoef(d.imfs[0].samples, fast)[0, 1]
    c_slow = max(np.corrcoef(imf.samples, slow)[0, 1] for imf in d.imfs[1:])
    hi = detrend_reconstruct(d, 5.0).samples
    c_hi = np.corrcoef(hi, fast)[0, 1]
    detail(record_property, f"two-tone correlations: imf1/10 Hz {c_fast:.4f}, later imf/1 Hz {c_slow:.4f}, 5 Hz cutoff/10 Hz {c_hi:.4f}")
    assert c_fast >= 0.95 and c_slow >= 0.95 and c_hi >= 0.95


# --- 4: coarse-graining -----------------------------------------------------------


@criterion(4)
def test_coarse_grain_lengths_and_identity():
    base = np.random.default_rng(4).standard_normal(1000)
    for n in range(1, 1001):
        x = base[:n]
        for tau in range(1, min(n, 20) + 1):
            assert len(coarse_grain(x, tau)) == n // tau
    for seed in range(20):
        x = np.random.default_rng(seed).standard_normal(int(np.random.default_rng(seed).integers(1, 1001)))
        assert np.array_equal(coarse_grain(x, 1).samples, x)


# --- 5: CCA -------------------------------------------------------------------------


def _epoch(data):
    return MultiChannelEpoch(np.asarray(data, float), tuple(f"c{i}" for i in range(len(data))), RATE)


def _ratio_15hz(data):
    spec = np.abs(np.fft.rfft(data - data.mean(axis=1, keepdims=True), axis=1)) ** 2
    f = np.fft.rfftfreq(data.shape[1], 1 / RATE)
    band = (f >= 5) & (f <= 45)
    return spec[:, np.argmin(np.abs(f - 15))].sum() / np.median(spec[:, band].sum(axis=0))


@criterion(5)
def test_cca_matches_oracle(record_property):
    worst = 0.0
    for seed in range(100):
        rng = np.random.default_rng([seed, 5])
        p = int(rng.integers(2, 7))
        n = int(rng.integers(200, 2500))
        tmpl = make_template(15.0, n, RATE)
        x = rng.standard_normal((p, n)) * rng.uniform(0.1, 10, (p, 1))
        x[0] += rng.uniform(0, 1) * tmpl.rows[0]
        got = cca_solve(_epoch(x), tmpl).correlations
        want = oracles.canonical_correlations(x, tmpl.rows)[: got.size]
        worst = max(worst, float(np.max(np.abs(got - want))))
    detail(record_property, f"100 epochs, worst correlation deviation {worst:.2e}")
    assert worst <= 1e-8


@criterion(5)
def test_denoise_raises_ssvep_ratio(record_property):
    improved = 0
    for seed in range(100):
        rng = np.random.default_rng([seed, 55])
        t = np.arange(2500) / RATE
        source = np.sin(2 * np.pi * 15 * t + rng.uniform(0, 2 * np.pi))
        x = 0.5 * rng.uniform(0.5, 1.5, (4, 1)) * source + rng.standard_normal((4, 2500))
        e = _epoch(x)
        out = denoise(e, cca_solve(e, make_template(15.0, 2500, RATE)), keep=2)
        improved += _ratio_15hz(out.data) > _ratio_15hz(x)
    detail(record_property, f"denoise raised the 15 Hz ratio in {improved}/100 epochs")
    assert improved >= 95


# --- 6: statistics ----------------------------------------------------------------


@criterion(6)
def test_t_p_values_against_integration(record_property):
    grid = [(t, df) for t in (0.05, 0.7, 1.5, 2.2, 3.0, 4.5, 6.0, 9.0, 15.0, 40.0) for df in (1, 2.5, 7, 30, 250)]
    assert len(grid) == 50
    worst = max(abs(t_two_tailed_p(t, df) - oracles.t_p_value(t, df)) for t, df in grid)
    detail(record_property, f"50-case grid, worst p deviation {worst:.2e}")
    assert worst <= 1e-6


@criterion(6)
def test_fdr_matches_enumeration():
    rng = np.random.default_rng(6)
    for i in range(1000):
        m = int(rng.integers(1, 51))
        p = rng.uniform(0, 1, m) ** rng.uniform(1, 5)
        if i % 4 == 0:
            p = np.round(p, 2)
        assert fdr_bh(p, 0.05).rejected.tolist() == oracles.bh_reject(p.tolist(), 0.05, False)


@criterion(6)
def test_icc_matches_oracle(record_property):
    worst = 0.0
    for seed in range(50):
        rng = np.random.default_rng([seed, 66])
        n, k = int(rng.integers(2, 40)), int(rng.integers(2, 5))
        y = rng.standard_normal((n, 1)) * rng.uniform(0, 3) + rng.standard_normal((n, k))
        worst = max(worst, abs(icc_oneway(y) - oracles.icc_oneway(y)))
    detail(record_property, f"50 matrices, worst ICC deviation {worst:.2e}")
    assert worst <= 1e-10


# --- 7: classification harness ------------------------------------------------------


@criterion(7)
def test_auc_equals_pair_statistic():
    rng = np.random.default_rng(7)
    for i in range(500):
        n = int(rng.integers(2, 51))
        labels = rng.choice([-1, 1], n)
        labels[:2] = [-1, 1]
        scores = rng.standard_normal(n) if i % 2 else rng.integers(0, 4, n).astype(float)
        assert abs(roc_auc(scores, labels)[1] - oracles.pair_auc(scores.tolist(), labels.tolist())) <= 1e-12


@criterion(7)
def test_adaboost_separable_cohort(record_property):
    data = gen_feature_cohort(n_subjects=40, margin=2.0)
    t0 = time.perf_counter()
    summary = cross_validate("adaboost", data, folds=3, repeats=100, seed=0)
    elapsed = time.perf_counter() - t0
    detail(record_property, f"separable cohort: accuracy {summary.accuracy.mean:.3f} +- {summary.accuracy.sd:.3f}, {elapsed:.1f} s")
    assert summary.accuracy.mean >= 0.90
    assert elapsed < 60.0


@criterion(7)
def test_adaboost_shuffled_labels(record_property):
    data = gen_feature_cohort(n_subjects=40, margin=2.0)
    rng = np.random.default_rng(77)
    shuffled = []
    for a, b in zip(data[::2], data[1::2]):
        # swap each subject's two labels at random, keeping one of each class
        if rng.uniform() < 0.5:
            a, b = SubjectFeatures(a.subject_id, a.features, b.label), SubjectFeatures(b.subject_id, b.features, a.label)
        shuffled += [a, b]
    t0 = time.perf_counter()
    summary = cross_validate("adaboost", shuffled, folds=3, repeats=100, seed=0)
    elapsed = time.perf_counter() - t0
    detail(record_property, f"shuffled cohort: accuracy {summary.accuracy.mean:.3f}, {elapsed:.1f} s")
    assert 0.40 <= summary.accuracy.mean <= 0.60
    assert elapsed < 60.0


# --- 8: end-to-end on synthetic cohorts ---------------------------------------------


def lpt_makespan(durations, workers):
    """Longest-processing-time-first schedule length on ``workers`` workers."""
    loads = np.zeros(workers)
    for d in sorted(durations, reverse=True):
        loads[np.argmin(loads)] += d
    return float(loads.max())


def mean_table(path):
    _, rows = read_rows(path)
    return np.nanmean([[np.nan if v == "NA" else float(v) for v in r[1:]] for r in rows], axis=0)


@pytest.fixture(scope="module")
def trending_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("trending")
    gen_cohort(CohortSpec(), root / "data")
    workers = 8 if (os.cpu_count() or 1) >= 8 else 1
    t0 = time.perf_counter()
    report = run_pipeline(PipelineConfig(), root / "data", root / "out", workers=workers)
    return root / "out", report, time.perf_counter() - t0, workers


@criterion(8)
def test_trending_cohort_sign_pattern(trending_run, record_property):
    out, report, _, _ = trending_run
    means = {phase: mean_table(out / "groups" / f"occipital_tv_{phase}.csv") for phase in ("hc", "interictal", "preictal")}
    for phase, m in means.items():
        detail(record_property, f"mean occipital TV {phase:>10}: " + " ".join(f"{v:+.3f}" for v in m))
    primary = report.panel("occipital", PRIMARY_PANEL).significant_scales
    vs_hc = report.panel("occipital", "tv_pre_vs_hc").significant_scales
    detail(record_property, f"FDR-significant scales, pre vs inter: {primary}")
    detail(record_property, f"FDR-significant scales, pre vs HC: {vs_hc}")
    _, rows = read_rows(out / "groups" / "occipital_tv_preictal.csv")
    drops = np.mean([float(r[20]) < 0 for r in rows])
    detail(record_property, f"pre-ictal subjects with negative TV at scale 20: {drops:.0%}")
    if report.classification:
        acc = report.classification["accuracy"]
        detail(record_property, f"AdaBoost CV accuracy on TV features: {acc['mean']:.3f} +- {acc['sd']:.3f}")
    late = slice(10, 20)  # scales 11..20
    assert np.all(means["hc"][late] > 0)
    assert np.all(means["interictal"][late] > 0)
    assert np.all(means["preictal"][late] < 0)
    assert len(primary) >= 1


@criterion(8)
def test_trending_cohort_runtime(trending_run, record_property):
    _, report, wall, workers = trending_run
    if workers >= 8:
        projected = wall
        detail(record_property, f"measured wall time with 8 workers: {wall:.0f} s")
    else:
        serial_part = max(wall - sum(report.session_seconds), 0.0)
        projected = lpt_makespan(report.session_seconds, 8) + serial_part
        detail(
            record_property,
            f"{os.cpu_count()} core(s): serial wall {wall:.0f} s; projected 8-worker wall {projected:.0f} s "
            f"(session schedule {projected - serial_part:.0f} s + serial stages {serial_part:.0f} s)",
        )
    assert projected < 600.0


@pytest.fixture(scope="module")
def null_runs(tmp_path_factory):
    root = tmp_path_factory.mktemp("null")
    # classification does not bear on the null criterion, so keep it minimal
    cfg = replace(PipelineConfig(), repeats=1, tune=False)
    runs = []
    for seed in range(20):
        spec = CohortSpec(n_hc=6, n_patients=10, rest_seconds=10.0, seed=seed).null()
        gen_cohort(spec, root / f"data{seed}")
        runs.append((root / f"out{seed}", run_pipeline(cfg, root / f"data{seed}", root / f"out{seed}")))
    return runs


@criterion(8)
def test_null_cohort_rejections(null_runs, record_property):
    clean_primary = sum(not report.panel("occipital", PRIMARY_PANEL).significant_scales for _, report in null_runs)
    clean_all = sum(not any(p.significant_scales for p in report.panels) for _, report in null_runs)
    detail(record_property, f"null runs without rejections: primary panel {clean_primary}/20, all 16 panels {clean_all}/20")
    assert clean_primary >= 19


def test_trending_cohort_preictal_fraction(trending_run):
    out = trending_run[0]
    _, rows = read_rows(out / "groups" / "occipital_tv_preictal.csv")
    assert np.mean([float(r[20]) < 0 for r in rows]) >= 0.90


def test_trending_cohort_classification(trending_run):
    report = trending_run[1]
    assert report.classification is not None
    assert report.classification["accuracy"]["mean"] >= 0.90


def test_null_cohort_transitional_variance_centred(null_runs):
    # pooled over the 20 null cohorts, scale 20
    for phase in ("hc", "interictal", "preictal"):
        values = []
        for out, _ in null_runs:
            _, rows = read_rows(out / "groups" / f"occipital_tv_{phase}.csv")
            values += [float(r[20]) for r in rows]
        values = np.array(values)
        assert abs(values.mean()) < 2 * values.std(ddof=1) / np.sqrt(values.size), phase


# --- 9: determinism -------------------------------------------------------------------


def _same_tree(a, b):
    files = sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file())
    assert files == sorted(p.relative_to(b) for p in b.rglob("*") if p.is_file())
    return all(filecmp.cmp(a / f, b / f, shallow=False) for f in files)


@criterion(9)
def test_subcommands_are_byte_reproducible(tmp_path, record_property):
    spec = tmp_path / "cohort.spec"
    spec.write_text("n_hc = 2\nn_patients = 3\nrest_seconds = 4\nssvep_seconds = 4\n")
    cfg = tmp_path / "run.cfg"
    cfg.write_text("scales = 4\nfeature_scales = 1,2,3,4\nrepeats = 3\n")
    assert main(["synth", "--spec", str(spec), "--seed", "9", "--out", str(tmp_path / "data")]) == 0
    epoch = str(tmp_path / "data" / "P001" / "session_2" / "ssvep_2.csv")

    def runs(name, make_args):
        dirs = []
        for k in (1, 2):
            d = tmp_path / f"{name}_{k}"
            d.mkdir()
            assert main(make_args(d)) == 0, name
            dirs.append(d)
        return _same_tree(*dirs)

    results = {
        "synth": runs("synth", lambda d: ["synth", "--spec", str(spec), "--seed", "9", "--out", str(d / "data")]),
        "pipeline": runs("pipeline", lambda d: ["--config", str(cfg), "pipeline", str(tmp_path / "data"), "--out", str(d)]),
        "decompose": runs("decompose", lambda d: ["decompose", epoch, "--out", str(d)]),
        "entropy": runs("entropy", lambda d: ["entropy", epoch, "--out", str(d / "e.csv"), "--scales", "4"]),
        "denoise": runs("denoise", lambda d: ["denoise", epoch, "--out", str(d / "clean.csv")]),
    }
    groups = tmp_path / "pipeline_1" / "groups"
    results["stats"] = runs(
        "stats",
        lambda d: ["stats", "--a", str(groups / "occipital_tv_preictal.csv"), "--b", str(groups / "occipital_tv_interictal.csv"), "--kind", "paired", "--out", str(d / "s.csv")],
    )
    results["classify"] = runs(
        "classify", lambda d: ["--config", str(cfg), "classify", str(tmp_path / "pipeline_1" / "features.csv"), "--out", str(d)]
    )
    detail(record_property, "byte-identical reruns: " + ", ".join(f"{k} {'yes' if v else 'NO'}" for k, v in results.items()))
    assert all(results.values())
