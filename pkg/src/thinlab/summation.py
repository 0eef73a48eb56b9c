"""Deterministic compensated summation.

Totals go through :func:`math.fsum` (correctly rounded, order independent).
Running sums use a Neumaier-compensated left-to-right scan, so a trajectory
is bit-stable for a given input order.
"""

from __future__ import annotations

import math
from typing import Iterable

import numpy as np
from numba import njit

# exp() of a log-domain term is clamped here; e^600 leaves headroom for
# millions of clamped terms before a running sum could overflow.
LOG_CLAMP = 600.0


# fsum slows down when terms span many binades; nonnegative terms below
# max * 2**-110 / n change the sum by less than 2**-110 relative and are dropped
_NEGLIGIBLE = 2.0**-110


def total(values: Iterable[float]) -> float:
    """Correctly rounded sum of ``values`` (nonnegative arrays: up to a
    ``2**-110`` relative perturbation from dropped negligible terms)."""
    if isinstance(values, np.ndarray):
        v = values.ravel()
        if v.size > 1024 and np.all(v >= 0.0):
            top = float(v.max())
            if math.isfinite(top) and top > 0.0:
                v = v[v >= top * (_NEGLIGIBLE / v.size)]
        values = v.tolist()
    return math.fsum(values)


@njit(cache=True)
def _neumaier_cumsum(terms):
    out = np.empty(terms.shape[0])
    s = 0.0
    c = 0.0
    for i in range(terms.shape[0]):
        x = terms[i]
        t = s + x
        if abs(s) >= abs(x):
            c += (s - t) + x
        else:
            c += (x - t) + s
        s = t
        out[i] = s + c
    return out


def running_sums(terms) -> np.ndarray:
    """Compensated prefix sums ``out[i] = terms[0] + ... + terms[i]``."""
    arr = np.ascontiguousarray(terms, dtype=np.float64)
    if arr.size == 0:
        return np.empty(0)
    return _neumaier_cumsum(arr)


def exp_clamped(log_terms) -> tuple[np.ndarray, int]:
    """``exp`` of log-domain terms with overflow clamping.

    Returns the values and how many were clamped. Underflow to zero is
    accepted silently.
    """
    arr = np.asarray(log_terms, dtype=np.float64)
    over = arr > LOG_CLAMP
    with np.errstate(under="ignore"):
        vals = np.exp(np.minimum(arr, LOG_CLAMP))
    return vals, int(np.count_nonzero(over))
