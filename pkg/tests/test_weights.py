import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from thinlab.weights import (
    Constant,
    LogL,
    LogPower,
    MissingSample,
    NonPositiveTheta,
    RhoSpec,
    Tabulated,
    Tri,
    WeightError,
    compare,
    dyadic_samples,
    evaluate,
    rho_evaluate,
    theta_at_t,
)

coef = st.floats(min_value=-3, max_value=3, allow_nan=False)
expo = st.sampled_from([0.0, 0.5, 1.0, 1.5, 2.0])
logpowers = st.builds(LogPower, coef, expo, expo)


def test_rho_constant_zero():
    assert rho_evaluate(RhoSpec(Constant(0.0)), 0.25).value == 0.25


def test_rho_power_weight():
    # theta = (1 - a) log(e/t) gives rho(t) = t (e/t)^(1-a)
    t = 2.0**-10
    got = rho_evaluate(RhoSpec(LogPower(0.5, 1.0, 0.0)), t).value
    assert got == pytest.approx(t * (math.e * 2**10) ** 0.5, rel=1e-14)


def test_rho_tabulated():
    th = Tabulated({5: 3.0})
    assert rho_evaluate(RhoSpec(th), 2.0**-5).value == pytest.approx(2.0**-5 * math.exp(3.0), rel=1e-15)
    with pytest.raises(MissingSample):
        evaluate(th, 0.3)
    with pytest.raises(MissingSample):
        evaluate(th, 2.0**-4)


def test_evaluate_domain():
    for t in (0.0, 1.0, -0.5, 2.0):
        with pytest.raises(WeightError):
            evaluate(Constant(1.0), t)


def test_log_domain_no_overflow():
    v = rho_evaluate(RhoSpec(LogPower(1.0, 2.0, 0.0)), 2.0**-100)
    L = 1 + 100 * math.log(2)
    assert v.log == pytest.approx(-100 * math.log(2) + L * L, rel=1e-14)


@given(logpowers, st.floats(min_value=1e-6, max_value=0.99))
@settings(max_examples=300)
def test_rho_log_agrees_with_direct(theta, t):
    v = rho_evaluate(RhoSpec(theta), t)
    assume(theta.at(t) < 700.0)
    direct = t * math.exp(theta.at(t))
    if math.isfinite(direct) and direct > 1e-300:
        assert abs(v.value - direct) <= 4 * math.ulp(direct)
        # exp of a rounded log: relative error grows with |log rho|
        assert abs(math.exp(v.log) - direct) <= (4 + 2 * abs(v.log)) * math.ulp(direct)


def test_dyadic_samples_examples():
    assert list(dyadic_samples(Constant(2.0), 3)) == [0.5, 0.5, 0.5]
    eps = dyadic_samples(LogPower(1.0, 1.0, 0.0), 50)
    m = np.arange(1, 51)
    assert np.allclose(eps, 1.0 / (1.0 + m * math.log(2)), rtol=1e-14)
    with pytest.raises(NonPositiveTheta) as exc:
        dyadic_samples(Tabulated({1: 1.0, 2: 0.0, 3: 1.0}), 3)
    assert exc.value.m == 2 if hasattr(exc.value, "m") else "2" in str(exc.value)


@given(st.floats(min_value=0.01, max_value=3), st.sampled_from([0.0, 0.5, 1, 2]), st.sampled_from([0.0, 0.5, 1, 2]))
def test_logpower_nonincreasing_in_t(c, a, b):
    th = LogPower(c, a, b)
    ts = np.sort(np.random.default_rng(0).uniform(1e-12, math.exp(-1), 1000))
    vals = np.array([th.at(t) for t in ts])
    assert np.all(np.diff(vals) <= 1e-12 * np.abs(vals[1:]))


def test_tabulated_flags_validated():
    with pytest.raises(WeightError):
        Tabulated({1: 2.0, 2: 1.0}, monotone_nonincreasing_in_t=True)
    with pytest.raises(WeightError):
        Tabulated({1: -1.0}, positive=True)
    Tabulated({1: 1.0, 2: 2.0}, True, True)


def test_rho_flags_validated():
    RhoSpec(LogL(-2.0), nondecreasing=True, dominated_by_Ct=1.0)
    with pytest.raises(WeightError):
        RhoSpec(LogPower(1.0, 1.0, 0.0), dominated_by_Ct=10.0)
    with pytest.raises(WeightError):
        RhoSpec(LogPower(1.0, 2.0, 0.0), nondecreasing=True)


def test_theta_at_t_matches_scalar():
    th = LogPower(0.7, 1.0, 0.5)
    ts = np.array([0.9, 0.3, 2.0**-20, 1e-200])
    assert np.allclose(theta_at_t(th, ts), [th.at(t) for t in ts], rtol=1e-14)
    assert theta_at_t(th, np.array([1.0]))[0] == pytest.approx(0.7 * math.log(math.e + 1.0) ** 0.5)


# -- comparison -----------------------------------------------------------------


def test_compare_examples():
    r = compare(LogPower(2, 1, 0), LogPower(5, 1, 0), 10**6)
    assert r.comparable is Tri.PROVEN
    # numeric cross-check of the ratio at the horizon
    assert 0.4 <= r.trend["ratio_horizon"] <= 2.5
    assert compare(LogPower(1, 1, 0), LogPower(1, 0.5, 0)).ratio_to_infinity is Tri.PROVEN
    same = compare(LogPower(1, 1, 0), LogPower(1, 1, 0))
    assert same.comparable is Tri.PROVEN and same.ratio_to_infinity is Tri.REFUTED


def test_compare_mixed_sign_undecided():
    r = compare(LogPower(1, 1, 0), LogL(-1.0))
    assert r.comparable is Tri.UNDECIDED and "positive" in r.reasons["comparable"]


def test_compare_tabulated_trend_only():
    a = Tabulated({m: 1.0 + m for m in range(1, 50)}, True, True)
    b = Tabulated({m: 2.0 + m for m in range(1, 50)})
    r = compare(a, b, 40)
    assert r.comparable is Tri.UNDECIDED and "ratio_horizon" in r.trend
    assert compare(a, a, 40).comparable is Tri.PROVEN


@given(logpowers, logpowers)
@settings(max_examples=300)
def test_compare_antisymmetric(t1, t2):
    r12, r21 = compare(t1, t2, 1000), compare(t2, t1, 1000)
    if r12.ratio_to_infinity is Tri.PROVEN:
        assert r21.ratio_to_infinity is Tri.REFUTED
    if r12.rho_ratio_to_infinity is Tri.PROVEN:
        assert r21.rho_ratio_to_infinity is Tri.REFUTED
    assert r12.reverse_ratio_to_infinity == r21.ratio_to_infinity
    assert r12.log_rho_gap_bounded == r21.log_rho_gap_bounded


@given(logpowers, logpowers)
@settings(max_examples=200)
def test_bounded_gap_is_numerically_bounded(t1, t2):
    r = compare(t1, t2, 1000)
    if r.log_rho_gap_bounded is Tri.PROVEN:
        m = np.array([10, 10**3, 10**6, 10**9], dtype=float)
        gaps = np.abs(np.asarray(t1.at_level(m)) - np.asarray(t2.at_level(m)))
        assert gaps[-1] <= gaps[0] + 10.0
