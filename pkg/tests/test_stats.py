import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from personaseq.errors import ContractViolation
from personaseq.stats import (
    betainc,
    bonferroni_threshold,
    kde,
    summarize,
    t_two_sided_p,
    welch_t_test,
)

# (a, b, t, df, p) evaluated with mpmath at 50 significant digits
GOLDEN = {
    "shifted": ([1, 2, 3, 4, 5], [2, 3, 4, 5, 6], -1.0, 8.0, 0.34659350708733424783),
    "unequal_var": ([0.1, 0.4, 0.35, 0.8, 0.55, 0.2], [0.9, 0.7, 0.95, 0.85, 0.75, 0.88, 0.92],
                    -4.1585592806606238307, 6.1502658271494602595, 0.0056410552305428547877),
    "small_large": ([10.0, 12.5, 9.8, 11.1], [3.2, 4.4, 2.9, 3.8, 4.1, 3.5, 3.0, 4.6, 3.9],
                    10.952544334003111842, 3.6536089886368219311, 0.00063328704702996203202),
    "tiny_diff": ([0.50, 0.52, 0.49, 0.51, 0.48], [0.51, 0.53, 0.50, 0.50, 0.49],
                  -0.61237243569579452455, 7.9861351819757365685, 0.55732092879710648795),
    "far_apart": ([0.9, 0.95, 0.85, 0.92, 0.88, 0.91], [0.1, 0.3, 0.2, 0.25, 0.15, 0.05],
                  17.865251924515185877, 6.3208753977415436178, 1.1961052263772520684e-6),
}


@pytest.mark.parametrize("name", sorted(GOLDEN))
def test_welch_golden(name):
    a, b, t, df, p = GOLDEN[name]
    r = welch_t_test(a, b)
    assert r.t == pytest.approx(t, rel=1e-9, abs=1e-12)
    assert r.df == pytest.approx(df, rel=1e-9)
    assert r.p == pytest.approx(p, rel=1e-9)


def _mp_p(t, df):
    mpmath.mp.dps = 40
    x = mpmath.mpf(df) / (df + mpmath.mpf(t) ** 2)
    return float(mpmath.betainc(df / 2, 0.5, 0, x, regularized=True))


@pytest.mark.parametrize("a,b,x", [(0.5, 0.5, 0.3), (2, 3, 0.9), (50, 0.5, 0.99), (499, 0.5, 0.995),
                                   (1.5, 0.5, 1e-6), (7.3, 0.5, 0.5)])
def test_betainc_matches_mpmath(a, b, x):
    mpmath.mp.dps = 40
    ref = float(mpmath.betainc(a, b, 0, x, regularized=True))
    assert betainc(a, b, x) == pytest.approx(ref, rel=1e-10)


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 30), st.floats(1, 500))
def test_t_tail_matches_mpmath(t, df):
    assert t_two_sided_p(t, df) == pytest.approx(_mp_p(t, df), rel=1e-9, abs=1e-12)


@pytest.mark.parametrize("t", [5.960464477539063e-08, 1e-5, 1e-3])
def test_t_tail_near_zero(t):
    assert abs(t_two_sided_p(t, 5.0) - _mp_p(t, 5.0)) < 1e-12


def test_symmetry_and_scale_invariance():
    rng = np.random.default_rng(0)
    a, b = rng.normal(0, 1, 12), rng.normal(0.5, 2, 9)
    ab, ba = welch_t_test(a, b), welch_t_test(b, a)
    assert ab.t == pytest.approx(-ba.t, rel=1e-12)
    assert ab.p == pytest.approx(ba.p, rel=1e-12)
    scaled = welch_t_test(3.7 * a + 5, 3.7 * b + 5)
    assert scaled.t == pytest.approx(ab.t, rel=1e-12)
    assert scaled.p == pytest.approx(ab.p, rel=1e-12)


def test_invariants_hold():
    rng = np.random.default_rng(1)
    for _ in range(50):
        r = welch_t_test(rng.random(10), rng.random(7) + 0.1)
        assert 0 <= r.p <= 1 and r.df > 0
        assert min(9, 6) <= r.df <= 15 + 1e-9


def test_degenerate_variances():
    same = welch_t_test([1, 1, 1], [1, 1])
    assert same.degenerate and same.t == 0 and same.p == 1.0
    diff = welch_t_test([1, 1, 1], [2, 2])
    assert diff.degenerate and diff.p == 0.0 and diff.significant


def test_too_few_samples():
    with pytest.raises(ContractViolation):
        welch_t_test([1.0], [1.0, 2.0])


def test_bonferroni():
    assert bonferroni_threshold(0.05, 50) == 0.001
    assert bonferroni_threshold(0.05, 1) == 0.05
    assert bonferroni_threshold(0.05, 5) == 0.01
    with pytest.raises(ContractViolation):
        bonferroni_threshold(0.05, 0)
    with pytest.raises(ContractViolation):
        bonferroni_threshold(1.5, 3)


def test_threshold_marks_significance():
    a, b, *_ = GOLDEN["unequal_var"]
    assert welch_t_test(a, b, threshold=0.01).significant
    assert not welch_t_test(a, b, threshold=0.001).significant


def test_summarize_unbiased():
    s = summarize([1, 2, 3, 4])
    assert s.n == 4 and s.mean == 2.5 and s.variance == pytest.approx(5 / 3)
    assert summarize([1, 1, 1]) == type(s)(3, 1.0, 0.0)
    assert summarize([1, 2, 3]) == type(s)(3, 2.0, 1.0)


def test_summarize_matches_two_pass_oracle():
    x = np.random.default_rng(3).random(500)
    mean = math.fsum(x) / len(x)
    var = math.fsum((v - mean) ** 2 for v in x) / (len(x) - 1)
    s = summarize(x)
    assert abs(s.mean - mean) < 1e-12 and abs(s.variance - var) < 1e-12


def test_kde_non_negative():
    curve = kde(np.random.default_rng(4).exponential(size=300))
    assert (curve.density >= 0).all()


def test_kde_normal_density():
    x = np.random.default_rng(7).standard_normal(10_000)
    curve = kde(x)
    assert len(curve.x) == 256
    assert curve.integral() == pytest.approx(1.0, abs=0.01)
    assert np.interp(0.0, curve.x, curve.density) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=0.10)
    assert not curve.degenerate


def test_kde_degenerate():
    curve = kde([0.4] * 20)
    assert curve.degenerate and curve.bandwidth > 0
    assert curve.integral() == pytest.approx(1.0, abs=0.01)
    assert curve.x[np.argmax(curve.density)] == pytest.approx(0.4, abs=0.01)


def test_kde_rejects_bad_input():
    with pytest.raises(ContractViolation):
        kde([1.0])
    with pytest.raises(ContractViolation):
        kde([1.0, float("nan")])
