import math
from fractions import Fraction

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import mp_point, mp_pseudo
from thinlab.constructions import full_circle_sequence
from thinlab.geometry import DiskPoint, PointSequence, pseudo_distance
from thinlab.weights import Constant, LogL, LogPower, RhoSpec, theta_at_t
from thinlab.witnesses import (
    ONE,
    ConstantFn,
    EtaRegion,
    FiniteBlaschke,
    Power,
    Product,
    blaschke_filter_transform,
    eta_measure,
    eval_log_modulus,
    exceptional_indices,
    exceptional_probe,
    nevanlinna_T,
    power_exponent,
    power_trick,
    summatory,
)

ULP = 2.0**-52


def random_points(rng, n, lo=1e-12):
    deltas = np.exp(rng.uniform(math.log(lo), 0.0, n))
    angles = rng.uniform(0.0, 2 * math.pi, n)
    return deltas, angles


def random_blaschke(rng, n):
    d, a = random_points(rng, n, 1e-6)
    return FiniteBlaschke(d, a, rng.integers(1, 3, n))


# --- evaluation ---------------------------------------------------------------


def test_constant_one_is_zero_everywhere():
    assert eval_log_modulus(ONE, DiskPoint(0.3, 1.0)) == 0.0


def test_blaschke_zero_is_minus_infinity():
    p = DiskPoint(2.0**-30, 0.7)
    assert eval_log_modulus(FiniteBlaschke.from_points([p]), p) == -math.inf


def test_constant_modulus_guard():
    with pytest.raises(ValueError):
        ConstantFn(1.5)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_modulus_never_exceeds_one(seed):
    rng = np.random.default_rng(seed)
    B = random_blaschke(rng, 20)
    funcs = [
        ONE,
        ConstantFn(0.3 + 0.4j),
        B,
        Power(B, 3),
        Product((B, ConstantFn(-1.0), random_blaschke(rng, 5))),
    ]
    d, a = random_points(rng, 10_000)
    for f in funcs:
        assert np.all(f.log_modulus(d, a) <= 0.0), str(f)


def test_blaschke_factor_equals_pseudo_distance():
    rng = np.random.default_rng(11)
    d1, a1 = random_points(rng, 10_000, 1e-9)
    d2, a2 = random_points(rng, 10_000, 1e-9)
    worst = 0.0
    for k in range(d1.size):
        b = FiniteBlaschke([d1[k]], [a1[k]], [1])
        lm = float(b.log_modulus(np.array([d2[k]]), np.array([a2[k]]))[0])
        dg = pseudo_distance(DiskPoint(d1[k], a1[k]), DiskPoint(d2[k], a2[k]))
        # exp(log x) carries |log x| ulps of conditioning
        err = abs(math.exp(lm) - dg) / (dg * ULP)
        worst = max(worst, err / (4 + 2 * abs(lm)))
    assert worst <= 1.0


def test_blaschke_factor_against_extended_precision():
    rng = np.random.default_rng(12)
    d1, a1 = random_points(rng, 200, 1e-9)
    d2, a2 = random_points(rng, 200, 1e-9)
    for k in range(200):
        b = FiniteBlaschke([d1[k]], [a1[k]], [1])
        lm = float(b.log_modulus(np.array([d2[k]]), np.array([a2[k]]))[0])
        ref = float(mp.log(mp_pseudo(mp_point(d1[k], a1[k]), mp_point(d2[k], a2[k]))))
        assert lm == pytest.approx(ref, rel=1e-12, abs=1e-15)


# --- summatory ----------------------------------------------------------------


@pytest.mark.parametrize("m", [3, 7, 12])
def test_summatory_full_circle_level(m):
    rho = RhoSpec(LogPower(1.0, 1.0, 0.0))
    seq = full_circle_sequence({m}, 20).sequence
    rep = summatory(ONE, rho, seq)
    assert rep.per_level[m] == pytest.approx(2**m * rho.at(2.0**-m), rel=1e-12)


def test_summatory_zero_at_every_point():
    seq = full_circle_sequence({4}, 10).sequence
    rep = summatory(FiniteBlaschke.from_sequence(seq), RhoSpec(Constant(0.0)), seq)
    assert rep.total == 0.0


def test_summatory_power_of_factor():
    rng = np.random.default_rng(5)
    d, a = random_points(rng, 5, 1e-4)
    seq = PointSequence(d, a)
    zero = (0.05, 1.0)
    f = Power(FiniteBlaschke([zero[0]], [zero[1]], [1]), 3)
    theta = LogPower(1.0, 1.0, 0.0)
    rep = summatory(f, RhoSpec(theta), seq)
    za = mp_point(*zero)
    oracle = mp.fsum(
        mp.mpf(d[k]) * mp.e ** mp.mpf(theta.at(d[k])) * mp_pseudo(za, mp_point(d[k], a[k])) ** 3 for k in range(5)
    )
    assert rep.total == pytest.approx(float(oracle), rel=1e-12)


def test_summatory_per_level_adds_up():
    seq = full_circle_sequence(range(1, 14), 20).sequence
    rng = np.random.default_rng(3)
    f = random_blaschke(rng, 10)
    rep = summatory(f, RhoSpec(LogPower(1.0, 1.0, 0.0)), seq)
    gap = abs(math.fsum(rep.per_level.values()) - rep.total)
    assert gap <= len(seq) * 2.0**-50 * rep.total


def test_summatory_profile_for_constant_witness():
    cc = full_circle_sequence(range(1, 11), 20)
    rho = RhoSpec(LogL(-2.0), True, 1.0)
    from_points = summatory(ONE, rho, cc.sequence)
    from_counts = summatory(ONE, rho, cc.profile)
    assert from_counts.total == pytest.approx(from_points.total, rel=1e-13)
    with pytest.raises(TypeError):
        summatory(random_blaschke(np.random.default_rng(0), 2), rho, cc.profile)


# --- Blaschke filter ----------------------------------------------------------


def test_filter_constant_one_removes_everything():
    seq = full_circle_sequence({2, 3}, 10).sequence
    f1, cert = blaschke_filter_transform(ONE, Constant(2.0), seq)
    assert cert.remainder.size == len(seq) and cert.kept.size == 0
    assert np.all(f1.log_modulus(seq.deltas, seq.angles) == -math.inf)
    assert cert.all_ok


def test_filter_identity_when_already_small():
    seq = full_circle_sequence({3}, 10).sequence
    f = FiniteBlaschke.from_sequence(seq)
    f1, cert = blaschke_filter_transform(f, Constant(2.0), seq)
    assert f1 is f and cert.remainder.size == 0


def test_filter_mixed_partition_matches_rescan():
    # five points hugging the zero, five spread out
    k = np.arange(10)
    d = np.where(k < 5, 0.01 * (1 + 0.05 * k), 0.002 * 1.8**k)
    a = np.where(k < 5, 1.1 + 1e-3 * k, 1.1 + 0.2 * k)
    seq = PointSequence(d, a)
    zero = (0.01, 1.1)
    theta = LogPower(0.5, 1.0, 0.0)
    f1, cert = blaschke_filter_transform(FiniteBlaschke([zero[0]], [zero[1]], [1]), theta, seq)
    za = mp_point(*zero)
    expect = [
        k for k in range(10) if mp_pseudo(za, mp_point(d[k], a[k])) > mp.e ** (-mp.mpf(theta.at(d[k])))
    ]
    assert 0 < len(expect) < 10
    assert cert.remainder.tolist() == expect
    # rescan: exact inequality at every point
    lhs = f1.log_modulus(d, a)
    assert np.all(lhs <= -theta_at_t(theta, d))
    assert cert.all_ok
    assert cert.remainder_blaschke_sum == pytest.approx(math.fsum(d[expect]), rel=1e-15)
    rows = cert.to_json()
    assert len(rows) == 10 and all(len(r) == 4 for r in rows)


# --- power trick --------------------------------------------------------------


def test_power_exponent_examples():
    assert power_exponent(1.0) == 4
    assert power_exponent(math.inf) == 2
    with pytest.raises(ValueError):
        power_exponent(0.0)


@given(st.floats(min_value=1e-3, max_value=1e3))
def test_power_exponent_is_smallest(L):
    m = power_exponent(L)
    assert Fraction(m - 1) * Fraction(L) / 2 > 1
    assert Fraction(m - 2) * Fraction(L) / 2 <= 1


def test_power_trick_with_certificate():
    theta = LogPower(1.0, 1.0, 0.0)
    seq = full_circle_sequence(range(2, 10), 12).sequence
    f1, cert = blaschke_filter_transform(ONE, theta, seq)
    res = power_trick(f1, theta, None, cert, 1.0, seq=seq, horizon=512)
    assert res.m == 4 and res.finite_sum == 0.0
    assert res.L_validated and res.tail_bound is not None
    with pytest.raises(ValueError):
        power_trick(f1, theta, None, [True, False], 1.0)


# --- exceptional indices ------------------------------------------------------


def test_exceptional_constant_one_empty():
    seq = full_circle_sequence(range(1, 8), 10).sequence
    for C in (0.1, 1.0, 10.0):
        assert exceptional_indices(ONE, seq, C).J == set()


def test_exceptional_vanishing_level():
    cc = full_circle_sequence({2, 3, 4}, 10)
    level3 = cc.sequence.subset(cc.sequence.levels == 3)
    f = FiniteBlaschke.from_sequence(level3)
    assert exceptional_indices(f, cc.sequence, 100.0).J == {3}


@pytest.mark.parametrize("scale", ["DyadicGap", "MeanSpacing"])
def test_exceptional_anti_monotone_in_C(scale):
    seq = full_circle_sequence(range(1, 13), 12).sequence
    f = FiniteBlaschke.factor(0.9 * np.exp(0.3j))
    grid = [2.0**k for k in range(-6, 8)]
    probe = exceptional_probe(f, seq, grid, scale)
    Js = [r.J for r in probe.results]
    sums = [r.J_density_sum for r in probe.results]
    for a, b in zip(Js, Js[1:]):
        assert b <= a
    assert all(y <= x for x, y in zip(sums, sums[1:]))
    assert Js[0] and not Js[-1]
    # independent rescan at one grid point
    C = grid[3]
    logf = f.log_modulus(seq.deltas, seq.angles)
    if scale == "DyadicGap":
        J = {m for m in range(1, 13) if np.count_nonzero(logf[seq.levels == m] > -C) < -(-(2**m) // 2)}
        assert Js[3] == J


# --- Nevanlinna characteristic and eta ----------------------------------------


def test_T_of_constant_is_zero():
    assert nevanlinna_T(ConstantFn(0.5j), 0.7).value == 0.0


def test_T_reciprocal_single_factor_limit():
    a = 0.6 * np.exp(0.4j)
    T = nevanlinna_T(FiniteBlaschke.factor(a), 1 - 2.0**-20, quad_n=2**16, reciprocal=True)
    assert T.value == pytest.approx(math.log(1 / 0.6), abs=1e-6)


def test_T_nondecreasing_in_r():
    rng = np.random.default_rng(8)
    f = random_blaschke(rng, 6)
    rs = np.linspace(0.05, 0.95, 40)
    # quadrature is only accurate away from the zeros' moduli
    rs = [r for r in rs if np.all(np.abs(1 - f.deltas - r) > 2.0**-10)]
    vals = [nevanlinna_T(f, r, 2**14, reciprocal=True).value for r in rs]
    assert all(b >= a - 1e-8 for a, b in zip(vals, vals[1:]))
    # |f| <= 1 makes T_{1/f} flat at log 1/|f(0)|
    flat = math.fsum((-f.mult * np.log1p(-f.deltas)).tolist())
    assert max(abs(v - flat) for v in vals) <= 1e-8


def test_T_errors():
    with pytest.raises(ValueError):
        nevanlinna_T(ONE, 1.0)
    with pytest.raises(ValueError):
        nevanlinna_T(FiniteBlaschke([1.0], [0.0], [1]), 0.5, reciprocal=True)


def test_eta_three_zeros():
    delta = 1 - math.exp(-1)
    f = FiniteBlaschke([delta] * 3, [0.0, 2.0, 4.0], [1, 1, 1])
    eta = eta_measure(f, EtaRegion.closed_disk())
    assert eta.value == pytest.approx(3.0, rel=1e-15) and eta.boundary_part == 0.0
    T = nevanlinna_T(f, 1 - 2.0**-20, quad_n=2**16, reciprocal=True)
    assert abs(eta.value - T.value) <= 1e-6


def test_eta_region_without_zeros():
    f = FiniteBlaschke([0.5], [0.0], [1])
    assert eta_measure(f, EtaRegion(-0.5, 0.1)).value == 0.0


def test_eta_additive_over_disjoint_regions():
    rng = np.random.default_rng(4)
    f = random_blaschke(rng, 30)
    left, right = EtaRegion(-0.5, 0.5), EtaRegion(0.5, 0.49)
    whole = EtaRegion(0.0, 1.0)
    z = f.zeros_complex()
    assert not np.any(left.contains(z) & right.contains(z))
    both = left.contains(z) | right.contains(z)
    g = FiniteBlaschke(f.deltas[both], f.angles[both], f.mult[both])
    total = eta_measure(g, whole).value
    assert eta_measure(f, left).value + eta_measure(f, right).value == pytest.approx(total, rel=1e-14)


@settings(max_examples=10, deadline=None)
@given(st.integers(1, 100), st.integers(0, 2**32 - 1))
def test_eta_matches_T_at_the_boundary(n, seed):
    rng = np.random.default_rng(seed)
    d = rng.uniform(2.0**-8, 0.9, n)
    f = FiniteBlaschke(d, rng.uniform(0, 2 * math.pi, n), np.ones(n, dtype=np.int64))
    T = nevanlinna_T(f, 1 - 2.0**-20, quad_n=2**16, reciprocal=True)
    assert abs(eta_measure(f, EtaRegion.closed_disk()).value - T.value) <= 1e-6


def test_eta_rejects_non_blaschke():
    with pytest.raises(TypeError):
        eta_measure(ONE, EtaRegion.closed_disk())
