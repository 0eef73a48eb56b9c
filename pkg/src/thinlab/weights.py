"""Weight functions ``theta(t)`` and ``rho(t) = t * exp(theta(t))``.

Symbolic weights are written in ``L(t) = log(e/t)`` (so ``L >= 1`` on
``(0, 1)``); tabulated weights are known only at dyadic ``t = 2**-m``.
Dyadic evaluation goes through the level ``m`` directly, never through
``2**-m``, so levels far beyond the double range are fine.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

LOG2 = math.log(2.0)
E = math.e
# dyadic levels checked when a weight flag is declared
FLAG_CHECK_LEVELS = 2048


class WeightError(ValueError):
    """Invalid weight or failed weight hypothesis."""


class HypothesisError(WeightError):
    """A theorem hypothesis (flag) is missing or fails."""


class MissingSample(WeightError):
    """Tabulated weight asked for a level it does not store."""


class NonPositiveTheta(WeightError):
    def __init__(self, m: int, value: float):
        super().__init__(f"theta(2^-{m}) = {value!r} is not positive")
        self.m = m
        self.value = value


def _num(x: float) -> str:
    """Shortest round-trip text for a spec parameter."""
    r = repr(float(x))
    return r[:-2] if r.endswith(".0") else r


def _log_e_over_t(t: float) -> float:
    if not (0.0 < t < 1.0):
        raise WeightError(f"t must lie in (0, 1), got {t!r}")
    return 1.0 - math.log(t)


def dyadic_level(t: float) -> int | None:
    """``m`` if ``t == 2**-m`` exactly, else ``None``."""
    f, e = math.frexp(t)
    return 1 - e if f == 0.5 else None


# ---------------------------------------------------------------------------
# theta variants


class ThetaSpec:
    """Base class; subclasses implement ``at_level`` and ``terms``."""

    def at_level(self, x):
        """``theta(2**-x)``; ``x`` may be an array of levels."""
        raise NotImplementedError

    def at(self, t: float) -> float:
        raise NotImplementedError

    def terms(self) -> list[tuple[float, float, float]] | None:
        """Asymptotic monomials ``(coef, alpha, beta)`` meaning
        ``coef * L**alpha * (log L)**beta``; ``None`` when not symbolic."""
        return None

    @property
    def symbolic(self) -> bool:
        return self.terms() is not None

    def positive_certified(self) -> bool:
        """Positive on all of ``(0, 1)`` by construction."""
        return False

    def nondecreasing_in_level_certified(self) -> bool:
        """``theta(2**-m)`` nondecreasing in ``m`` (theta nonincreasing in t)."""
        return False

    def nonincreasing_in_level_certified(self) -> bool:
        """``theta(2**-m)`` nonincreasing in ``m``."""
        return False

    def levels_available(self) -> int | None:
        """Largest stored level for tabulated weights; ``None`` if unlimited."""
        return None


@dataclass(frozen=True)
class LogPower(ThetaSpec):
    """``theta(t) = c * L**alpha * log(e + L)**beta``."""

    c: float
    alpha: float = 1.0
    beta: float = 0.0

    def at_level(self, x):
        L = 1.0 + np.asarray(x, dtype=np.float64) * LOG2
        return self._g(L)

    def _g(self, L):
        return self.c * L**self.alpha * np.log(E + L) ** self.beta

    def at(self, t: float) -> float:
        return float(self._g(_log_e_over_t(t)))

    def terms(self):
        return [(self.c, self.alpha, self.beta)] if self.c != 0 else []

    def positive_certified(self) -> bool:
        return self.c > 0

    def nondecreasing_in_level_certified(self) -> bool:
        if self.c == 0:
            return True
        if self.c > 0:
            return self.alpha >= 0 and self.beta >= 0
        return self.alpha <= 0 and self.beta <= 0

    def nonincreasing_in_level_certified(self) -> bool:
        if self.c == 0:
            return True
        if self.c < 0:
            return self.alpha >= 0 and self.beta >= 0
        return self.alpha <= 0 and self.beta <= 0

    def __str__(self):
        return f"logpow:{_num(self.c)},{_num(self.alpha)},{_num(self.beta)}"


@dataclass(frozen=True)
class Constant(ThetaSpec):
    c: float

    def at_level(self, x):
        return np.full(np.shape(x), float(self.c)) if np.ndim(x) else np.float64(self.c)

    def at(self, t: float) -> float:
        _log_e_over_t(t)
        return float(self.c)

    def terms(self):
        return [(self.c, 0.0, 0.0)] if self.c != 0 else []

    def positive_certified(self) -> bool:
        return self.c > 0

    def nondecreasing_in_level_certified(self) -> bool:
        return True

    def nonincreasing_in_level_certified(self) -> bool:
        return True

    def __str__(self):
        return f"const:{_num(self.c)}"


@dataclass(frozen=True)
class LogL(ThetaSpec):
    """``theta(t) = k * log L(t)``, i.e. ``rho(t) = t * L(t)**k``."""

    k: float

    def at_level(self, x):
        return self.k * np.log1p(np.asarray(x, dtype=np.float64) * LOG2)

    def at(self, t: float) -> float:
        return self.k * math.log(_log_e_over_t(t))

    def terms(self):
        return [(self.k, 0.0, 1.0)] if self.k != 0 else []

    def positive_certified(self) -> bool:
        return self.k > 0

    def nondecreasing_in_level_certified(self) -> bool:
        return self.k >= 0

    def nonincreasing_in_level_certified(self) -> bool:
        return self.k <= 0

    def __str__(self):
        return f"logl:{_num(self.k)}"


@dataclass(frozen=True, eq=False)
class Tabulated(ThetaSpec):
    """Values ``theta(2**-m)`` for the stored levels ``m``.

    The two flags are checked against the samples on construction.
    """

    values: Mapping[int, float]
    monotone_nonincreasing_in_t: bool = False
    positive: bool = False
    _levels: np.ndarray = field(init=False, repr=False)
    _vals: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        ms = sorted(int(m) for m in self.values)
        if not ms:
            raise WeightError("tabulated weight has no samples")
        vals = np.array([float(self.values[m]) for m in ms])
        object.__setattr__(self, "_levels", np.array(ms, dtype=np.int64))
        object.__setattr__(self, "_vals", vals)
        if self.positive and np.any(vals <= 0):
            bad = ms[int(np.argmax(vals <= 0))]
            raise WeightError(f"tabulated weight flagged positive but theta(2^-{bad}) <= 0")
        if self.monotone_nonincreasing_in_t and np.any(np.diff(vals) < 0):
            bad = ms[int(np.argmax(np.diff(vals) < 0)) + 1]
            raise WeightError(f"tabulated weight flagged monotone but decreases at level {bad}")

    def __eq__(self, other):
        return (
            isinstance(other, Tabulated)
            and np.array_equal(self._levels, other._levels)
            and np.array_equal(self._vals, other._vals)
        )

    def __hash__(self):
        return hash((self._levels.tobytes(), self._vals.tobytes()))

    def at_level(self, x):
        arr = np.asarray(x)
        flat = np.atleast_1d(arr).astype(np.float64)
        if np.any(flat != np.round(flat)):
            raise MissingSample("tabulated weight is defined only at integer levels")
        idx = np.searchsorted(self._levels, flat.astype(np.int64))
        idx_c = np.minimum(idx, self._levels.size - 1)
        found = self._levels[idx_c] == flat.astype(np.int64)
        if not np.all(found):
            miss = int(flat[int(np.argmin(found))])
            raise MissingSample(f"no tabulated sample at level {miss}")
        out = self._vals[idx_c]
        return out.reshape(arr.shape) if arr.ndim else out[0]

    def at(self, t: float) -> float:
        _log_e_over_t(t)
        m = dyadic_level(t)
        if m is None:
            raise MissingSample(f"tabulated weight needs dyadic t, got {t!r}")
        return float(self.at_level(m))

    def positive_certified(self) -> bool:
        return self.positive

    def nondecreasing_in_level_certified(self) -> bool:
        return self.monotone_nonincreasing_in_t

    def levels_available(self) -> int | None:
        return int(self._levels[-1])

    @property
    def levels(self) -> np.ndarray:
        return self._levels.copy()

    def __str__(self):
        return f"table:{len(self._levels)} samples"


def evaluate(theta: ThetaSpec, t: float) -> float:
    return theta.at(t)


def theta_at_t(theta: ThetaSpec, t):
    """Vectorized ``theta(t)`` for ``t`` in ``(0, 1]`` (``t = 1`` is the
    disk centre); tabulated weights need dyadic ``t``."""
    t = np.asarray(t, dtype=np.float64)
    if np.any(~((t > 0.0) & (t <= 1.0))):
        raise WeightError("t must lie in (0, 1]")
    if isinstance(theta, Tabulated):
        f, e = np.frexp(t)
        if np.any(f != 0.5):
            raise MissingSample("tabulated weight needs dyadic t")
        return np.asarray(theta.at_level(1 - e), dtype=np.float64)
    if isinstance(theta, (LogPower, Constant, LogL)):
        return np.asarray(theta.at_level(-np.log(t) / LOG2), dtype=np.float64)
    return np.vectorize(theta.at, otypes=[float])(t)


# ---------------------------------------------------------------------------
# rho


@dataclass(frozen=True)
class RhoValue:
    value: float
    log: float


@dataclass(frozen=True)
class RhoSpec:
    """``rho(t) = t * exp(theta(t))`` with declared hypothesis flags.

    ``dominated_by_Ct`` asserts ``rho(t) <= C t``; it is checked on
    construction against dyadic samples and, for symbolic weights, the
    asymptotic growth of ``theta``.
    """

    theta: ThetaSpec
    nondecreasing: bool = False
    dominated_by_Ct: float | None = None

    def __post_init__(self):
        if self.dominated_by_Ct is not None:
            C = self.dominated_by_Ct
            if not C > 0:
                raise WeightError("dominated_by_Ct constant must be positive")
            bad = self.dominated_violation(FLAG_CHECK_LEVELS)
            if bad is not None:
                raise WeightError(bad)
        if self.nondecreasing:
            bad = self.nondecreasing_violation(FLAG_CHECK_LEVELS)
            if bad is not None:
                raise WeightError(bad)

    def _levels(self, horizon):
        top = self.theta.levels_available()
        if isinstance(self.theta, Tabulated):
            return self.theta.levels
        return np.arange(1, (horizon if top is None else min(horizon, top)) + 1)

    def dominated_violation(self, horizon: int) -> str | None:
        C = self.dominated_by_Ct
        if C is None:
            return "no domination constant declared"
        ms = self._levels(horizon)
        th = np.asarray(self.theta.at_level(ms))
        over = th > math.log(C) * (1 + 1e-15) + 1e-300
        if np.any(over):
            return f"rho(t) <= {C:g} t fails at t = 2^-{int(ms[int(np.argmax(over))])}"
        lead = leading_term(self.theta.terms()) if self.theta.symbolic else None
        if lead is not None and lead[0] > 0 and (lead[1], lead[2]) > (0.0, 0.0):
            return "theta is unbounded above, so rho(t) <= C t fails as t -> 0"
        return None

    def nondecreasing_violation(self, horizon: int) -> str | None:
        ms = self._levels(horizon)
        if ms.size < 2:
            return None
        lr = self.log_at_level(ms)
        steps = np.diff(lr)
        # rho(2^-(m+1)) <= rho(2^-m) for consecutive stored levels
        consecutive = np.diff(ms) == 1
        bad = consecutive & (steps > 1e-12 * np.maximum(1.0, np.abs(lr[1:])))
        if np.any(bad):
            return f"rho is not nondecreasing at t = 2^-{int(ms[int(np.argmax(bad)) + 1])}"
        return None

    def at(self, t: float) -> float:
        return self.evaluate(t).value

    def evaluate(self, t: float) -> RhoValue:
        th = self.theta.at(t)
        lr = math.log(t) + th
        if lr >= 709.0:
            return RhoValue(math.inf, lr)
        # direct product where it is representable: exp(lr) carries |lr| ulps
        direct = t * math.exp(th) if th < 709.0 else math.exp(lr)
        return RhoValue(direct if direct > 0.0 else math.exp(lr), lr)

    def log_at(self, t):
        """Vectorized ``log rho(t)`` for arbitrary ``t`` in ``(0, 1)``."""
        t = np.asarray(t, dtype=np.float64)
        return np.log(t) + theta_at_t(self.theta, t)

    def log_at_level(self, x):
        """``log rho(2**-x) = -x log 2 + theta(2**-x)``."""
        x = np.asarray(x, dtype=np.float64)
        return -x * LOG2 + self.theta.at_level(x)

    def scaled_log_at_level(self, x):
        """``log(2**x rho(2**-x)) = theta(2**-x)``."""
        return self.theta.at_level(x)


def rho_evaluate(rho: RhoSpec, t: float) -> RhoValue:
    return rho.evaluate(t)


def dyadic_samples(theta: ThetaSpec, M: int) -> np.ndarray:
    """``eps_m = 1 / theta(2**-m)`` for ``m = 1..M`` (index 0 is ``m = 1``)."""
    ms = np.arange(1, M + 1)
    th = np.asarray(theta.at_level(ms), dtype=np.float64)
    bad = ~(th > 0)
    if np.any(bad):
        k = int(np.argmax(bad))
        raise NonPositiveTheta(int(ms[k]), float(th[k]))
    return 1.0 / th


def is_nondecreasing_in_level(theta: ThetaSpec, horizon: int) -> bool:
    """Symbolic certificate, else a check over the stored/dyadic levels."""
    if theta.nondecreasing_in_level_certified():
        return True
    if isinstance(theta, Tabulated):
        return bool(np.all(np.diff(theta._vals) >= 0))
    th = np.asarray(theta.at_level(np.arange(1, horizon + 1)))
    return bool(np.all(np.diff(th) >= 0))


# ---------------------------------------------------------------------------
# symbolic comparison


class Tri(enum.Enum):
    PROVEN = "Proven"
    REFUTED = "Refuted"
    UNDECIDED = "Undecided"

    @classmethod
    def of(cls, flag: bool) -> "Tri":
        return cls.PROVEN if flag else cls.REFUTED


def combine_terms(*weighted: tuple[float, list]) -> dict[tuple[float, float], float]:
    """Sum scaled monomial lists into ``{(alpha, beta): coef}``."""
    out: dict[tuple[float, float], float] = {}
    for scale, terms in weighted:
        for c, a, b in terms:
            out[(a, b)] = out.get((a, b), 0.0) + scale * c
    return {k: v for k, v in out.items() if v != 0.0}


def leading_term(terms) -> tuple[float, float, float] | None:
    """Dominant ``(coef, alpha, beta)`` as ``L -> infinity``."""
    if terms is None:
        return None
    comb = combine_terms((1.0, terms))
    if not comb:
        return None
    a, b = max(comb)
    return comb[(a, b)], a, b


@dataclass(frozen=True)
class ComparisonReport:
    comparable: Tri
    ratio_to_infinity: Tri
    rho_ratio_to_infinity: Tri
    log_rho_gap_bounded: Tri
    reasons: dict[str, str]
    trend: dict[str, float]
    # the same relations with the roles of theta1 and theta2 swapped
    reverse_ratio_to_infinity: Tri = Tri.UNDECIDED
    reverse_rho_ratio_to_infinity: Tri = Tri.UNDECIDED

    def as_dict(self) -> dict:
        return {
            "comparable": self.comparable.value,
            "ratio_to_infinity": self.ratio_to_infinity.value,
            "rho_ratio_to_infinity": self.rho_ratio_to_infinity.value,
            "log_rho_gap_bounded": self.log_rho_gap_bounded.value,
            "reverse_ratio_to_infinity": self.reverse_ratio_to_infinity.value,
            "reverse_rho_ratio_to_infinity": self.reverse_rho_ratio_to_infinity.value,
            "reasons": dict(self.reasons),
            "trend": self.trend,
        }


def _trend(theta1, theta2, horizon):
    out = {}
    ms = np.array([max(1, horizon // 2), horizon])
    try:
        t1 = np.asarray(theta1.at_level(ms), dtype=float)
        t2 = np.asarray(theta2.at_level(ms), dtype=float)
    except MissingSample:
        return out
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        out["ratio_half_horizon"] = float(t1[0] / t2[0])
        out["ratio_horizon"] = float(t1[1] / t2[1])
    out["gap_half_horizon"] = float(t1[0] - t2[0])
    out["gap_horizon"] = float(t1[1] - t2[1])
    return out


def compare(theta1: ThetaSpec, theta2: ThetaSpec, horizon: int = 10**6) -> ComparisonReport:
    """Asymptotic relations between two weights as ``t -> 0``.

    Symbolic pairs are decided from the leading monomials; tabulated input
    is decided only in the identity case.
    """
    reasons: dict[str, str] = {}
    trend = _trend(theta1, theta2, horizon)
    if not (theta1.symbolic and theta2.symbolic):
        if theta1 == theta2:
            pos = theta1.positive_certified()
            reasons["all"] = "identical samples"
            return ComparisonReport(
                Tri.PROVEN if pos else Tri.UNDECIDED,
                Tri.REFUTED if pos else Tri.UNDECIDED,
                Tri.REFUTED,
                Tri.PROVEN,
                reasons,
                trend,
                Tri.REFUTED if pos else Tri.UNDECIDED,
                Tri.REFUTED,
            )
        reasons["all"] = "tabulated weights carry no asymptotic information; numeric trend only"
        u = Tri.UNDECIDED
        return ComparisonReport(u, u, u, u, reasons, trend)

    lead1 = leading_term(theta1.terms())
    lead2 = leading_term(theta2.terms())
    both_positive = theta1.positive_certified() and theta2.positive_certified()
    if both_positive:
        o1, o2 = (lead1[1], lead1[2]), (lead2[1], lead2[2])
        comparable = Tri.of(o1 == o2)
        ratio = Tri.of(o1 > o2)
        reverse = Tri.of(o2 > o1)
        reasons["comparable"] = f"leading orders L^{o1[0]:g}(log L)^{o1[1]:g} vs L^{o2[0]:g}(log L)^{o2[1]:g}"
        reasons["ratio_to_infinity"] = reasons["comparable"]
    else:
        comparable = ratio = reverse = Tri.UNDECIDED
        reasons["comparable"] = reasons["ratio_to_infinity"] = "a ratio of weights that are not both positive"

    gap = combine_terms((1.0, theta1.terms()), (-1.0, theta2.terms()))
    if gap:
        (a, b) = max(gap)
        c = gap[(a, b)]
        grows = (a, b) > (0.0, 0.0)
        rho_ratio = Tri.of(grows and c > 0)
        rho_reverse = Tri.of(grows and c < 0)
        bounded = Tri.of(not grows)
        reasons["gap"] = f"theta1 - theta2 ~ {c:g} L^{a:g}(log L)^{b:g}"
    else:
        rho_ratio = rho_reverse = Tri.REFUTED
        bounded = Tri.PROVEN
        reasons["gap"] = "leading monomials cancel; theta1 - theta2 is O(1/L)"
    return ComparisonReport(comparable, ratio, rho_ratio, bounded, reasons, trend, reverse, rho_reverse)
