import math
from fractions import Fraction

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from thinlab.summation import LOG_CLAMP, exp_clamped, running_sums, total

finite = st.floats(min_value=-1e12, max_value=1e12, allow_nan=False, allow_infinity=False)


@given(st.lists(finite, max_size=200))
def test_total_is_correctly_rounded(xs):
    exact = sum((Fraction(x) for x in xs), Fraction(0))
    assert total(xs) == float(exact)


@given(st.integers(0, 2**32 - 1), st.integers(1, 300))
@settings(max_examples=40)
def test_total_drops_only_negligible_terms(seed, spread):
    rng = np.random.default_rng(seed)
    arr = rng.random(2000) * 10.0 ** rng.integers(-spread, spread, 2000).astype(float)
    exact = float(sum((Fraction(float(x)) for x in arr), Fraction(0)))
    assert abs(total(arr) - exact) <= 2.0**-100 * exact


def test_total_is_order_independent():
    rng = np.random.default_rng(3)
    x = rng.standard_normal(5000) * 10.0 ** rng.integers(-8, 8, 5000)
    assert total(x) == total(x[::-1]) == total(rng.permutation(x))


@given(st.lists(st.floats(min_value=0, max_value=1e6, allow_nan=False), min_size=1, max_size=300))
def test_running_sums_monotone_and_end_at_total(xs):
    rs = running_sums(np.array(xs))
    assert np.all(np.diff(rs) >= 0)
    assert abs(rs[-1] - total(xs)) <= 4 * len(xs) * 2.0**-52 * max(total(xs), 1e-300)


def test_running_sums_compensated():
    # 1 + many tiny terms: naive cumsum loses them entirely
    x = np.array([1.0] + [1e-17] * 10**5)
    assert running_sums(x)[-1] == 1.0 + 1e-12


def test_exp_clamped():
    vals, n = exp_clamped(np.array([0.0, -np.inf, 700.0, LOG_CLAMP]))
    assert vals[0] == 1.0 and vals[1] == 0.0
    assert vals[2] == math.exp(LOG_CLAMP) and n == 1
