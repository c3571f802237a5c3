import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fuzentra.errors import DegenerateVariance, LengthMismatch
from fuzentra.stats import fdr_bh, icc_oneway, t_test, t_two_tailed_p

import oracles


def test_paired_identical():
    r = t_test([1.0, 2.0, 5.0], [1.0, 2.0, 5.0], "paired")
    assert r.statistic == 0.0 and r.p_value == 1.0


def test_welch_example():
    r = t_test([1, 2, 3], [4, 5, 6], "independent")
    assert r.statistic == pytest.approx(-3.674, abs=1e-3)
    assert r.degrees_of_freedom == pytest.approx(4.0)
    assert r.p_value == pytest.approx(0.0213, abs=5e-4)
    assert r.p_value == pytest.approx(oracles.t_p_value(r.statistic, 4.0), abs=1e-6)


def test_pooled_variant():
    r = t_test([1, 2, 3, 4], [2, 4, 6, 8, 10], "independent", welch=False)
    assert r.degrees_of_freedom == 7.0


def test_degenerate_and_mismatch():
    with pytest.raises(DegenerateVariance):
        t_test([1.0, 2.0, 3.0], [0.0, 1.0, 2.0], "paired")
    with pytest.raises(DegenerateVariance):
        t_test([1.0, 1.0], [2.0, 2.0], "independent")
    with pytest.raises(LengthMismatch):
        t_test([1.0, 2.0], [1.0, 2.0, 3.0], "paired")
    with pytest.raises(ValueError):
        t_test([1.0, 2.0], [1.0, 2.0], "sideways")


@pytest.mark.parametrize("df", [1, 2, 3, 5, 10, 30, 100, 2.5, 7.3, 1000])
@pytest.mark.parametrize("t", [0.1, 1.0, 2.0, 3.5, 8.0])
def test_p_value_grid(t, df):
    assert t_two_tailed_p(t, df) == pytest.approx(oracles.t_p_value(t, df), abs=1e-6)
    assert t_two_tailed_p(-t, df) == t_two_tailed_p(t, df)


samples = st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=2, max_size=30)


@settings(max_examples=200, deadline=None)
@given(samples, samples)
def test_t_test_antisymmetric(a, b):
    try:
        ab = t_test(a, b, "independent")
    except DegenerateVariance:
        return
    ba = t_test(b, a, "independent")
    assert ba.statistic == pytest.approx(-ab.statistic, abs=1e-12 * max(1.0, abs(ab.statistic)))
    assert ba.p_value == pytest.approx(ab.p_value, abs=1e-12)
    assert 0.0 <= ab.p_value <= 1.0


def test_fdr_examples():
    out = fdr_bh([0.01, 0.02, 0.03, 0.04], 0.05)
    assert out.rejected.tolist() == [True] * 4
    out = fdr_bh([0.5], 0.05)
    assert out.rejected.tolist() == [False] and out.adjusted_p.tolist() == [0.5]
    out = fdr_bh([0.001, 0.9], 0.05)
    assert out.rejected.tolist() == [True, False]
    np.testing.assert_allclose(out.adjusted_p, [0.002, 0.9])


def test_fdr_matches_enumeration():
    rng = np.random.default_rng(0)
    for _ in range(300):
        m = int(rng.integers(1, 51))
        p = rng.uniform(0, 1, m) ** rng.uniform(1, 4)
        if rng.uniform() < 0.3:
            p = np.round(p, 2)  # ties
        for by in (False, True):
            got = fdr_bh(p, 0.05, "by" if by else "bh")
            assert got.rejected.tolist() == oracles.bh_reject(p.tolist(), 0.05, by)


def test_fdr_adjusted_values():
    p = np.array([0.04, 0.001, 0.03, 0.5, 0.02])
    got = fdr_bh(p).adjusted_p
    m = p.size
    order = np.argsort(p)
    want = np.empty(m)
    for rank, i in enumerate(order, 1):
        want[i] = min(1.0, min(p[order[j - 1]] * m / j for j in range(rank, m + 1)))
    np.testing.assert_allclose(got, want, atol=1e-15)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=1, max_size=30), st.data())
def test_fdr_monotone(p, data):
    base = fdr_bh(p).rejected
    i = data.draw(st.integers(0, len(p) - 1))
    raised = list(p)
    raised[i] = data.draw(st.floats(p[i], 1))
    after = fdr_bh(raised).rejected
    assert not np.any(after & ~base)


@given(st.floats(0, 1), st.floats(0.001, 0.999))
def test_fdr_single_hypothesis(p, alpha):
    assert fdr_bh([p], alpha).rejected[0] == (p <= alpha)


def test_fdr_rejects_bad_input():
    with pytest.raises(ValueError):
        fdr_bh([0.5, 1.5])
    with pytest.raises(ValueError):
        fdr_bh([0.5], method="holm")


def test_icc():
    y = np.array([[1.0, 1.0], [2.0, 2.0], [5.0, 5.0]])
    assert icc_oneway(y) == pytest.approx(1.0)
    with pytest.raises(DegenerateVariance):
        icc_oneway(np.ones((4, 2)))
    r = np.random.default_rng(3).normal(size=(8, 2)) + np.arange(8)[:, None] * 0.5
    assert icc_oneway(r) == pytest.approx(oracles.icc_oneway(r), abs=1e-10)
