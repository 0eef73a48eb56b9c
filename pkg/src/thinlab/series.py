"""Convergence verdicts with an evidence tier.

Every verdict says how it was reached:

* ``SymbolicProof``: decided from the exponents of a symbolic weight on the
  Bertrand scale ``1 / (m**alpha (log m)**beta)``;
* ``MonotoneTailBound``: terms certified nonincreasing beyond some index and
  the tail bounded by an integral;
* ``NumericTrend``: dyadic block sums of the computed terms, reported with
  the horizon. ``Undecided`` is a legitimate outcome here.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

import numpy as np
from scipy import integrate, special

from .geometry import CountProfile, ExampleFormula, FullCircleFormula
from .summation import exp_clamped, running_sums, total
from .weights import (
    LOG2,
    Constant,
    HypothesisError,
    LogL,
    LogPower,
    RhoSpec,
    Tabulated,
    ThetaSpec,
    dyadic_samples,
    leading_term,
)

DEFAULT_HORIZON = 10**6


class Decision(str, enum.Enum):
    DIVERGENT = "Divergent"
    CONVERGENT = "Convergent"
    UNDECIDED = "Undecided"


class Tier(str, enum.Enum):
    SYMBOLIC = "SymbolicProof"
    MONOTONE = "MonotoneTailBound"
    NUMERIC = "NumericTrend"


@dataclass(frozen=True)
class Trajectory:
    """Compensated partial sums at checkpoints.

    ``tail_bound`` / ``tail_lower`` bracket ``sum_{k > last}`` when the
    stream certified monotonicity and supplied a tail integral.
    """

    index: np.ndarray
    sums: np.ndarray
    total: float
    last_index: int
    first_hits: dict
    tail_bound: float | None = None
    tail_lower: float | None = None

    def as_dict(self) -> dict:
        return {
            "index": [int(i) for i in self.index],
            "partial_sums": [float(s) for s in self.sums],
            "total": self.total,
            "last_index": self.last_index,
            "first_hits": {repr(float(k)): v for k, v in self.first_hits.items()},
            "tail_bound": self.tail_bound,
            "tail_lower": self.tail_lower,
        }


@dataclass(frozen=True)
class SeriesVerdict:
    decision: Decision
    tier: Tier
    horizon: int
    tail_bound: float | None = None
    tail_from: int | None = None
    monotone_from: int | None = None
    lower_bound: str | None = None
    lower_bound_value: float | None = None
    partial_sum: float | None = None
    trajectory: Trajectory | None = None
    gamma_grid: tuple | None = None
    evidence: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.tier is Tier.MONOTONE and self.monotone_from is None:
            raise ValueError("a monotone tail bound needs a monotonicity certificate")
        if self.tail_bound is not None and self.tail_from is None:
            raise ValueError("a tail bound needs the index it starts from")

    @property
    def proven(self) -> bool:
        return self.decision is not Decision.UNDECIDED and self.tier is not Tier.NUMERIC

    def to_json(self) -> dict:
        out = {
            "decision": self.decision.value,
            "tier": self.tier.value,
            "horizon": int(self.horizon),
        }
        if self.tail_bound is not None:
            out["tail_bound"] = float(self.tail_bound)
            out["tail_from"] = int(self.tail_from)
        if self.monotone_from is not None:
            out["monotone_from"] = int(self.monotone_from)
        if self.lower_bound is not None:
            out["lower_bound"] = self.lower_bound
            out["lower_bound_value"] = self.lower_bound_value
        if self.partial_sum is not None:
            out["partial_sum"] = float(self.partial_sum)
        if self.gamma_grid is not None:
            out["gamma_grid"] = [{"gamma": float(g), "decision": d.value} for g, d in self.gamma_grid]
        if self.evidence:
            out["evidence"] = _jsonable(self.evidence)
        return out


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    return obj


# ---------------------------------------------------------------------------
# term streams


@dataclass(frozen=True)
class TermStream:
    """Finite prefix of a nonnegative series with side information.

    ``monotone_from``: terms are nonincreasing from this index on (the whole
    infinite tail, not only the stored prefix). ``tail_integral(x)`` bounds
    ``integral_x^inf f``; ``ratio_bound`` is a ``q < 1`` with
    ``term_{k+1} <= q term_k`` beyond ``monotone_from``.
    """

    terms: np.ndarray
    first_index: int = 1
    monotone_from: int | None = None
    tail_integral: Callable[[float], float] | None = None
    ratio_bound: float | None = None

    @property
    def last_index(self) -> int:
        return self.first_index + len(self.terms) - 1


def _default_checkpoints(first, last):
    pts = {last}
    k = 1
    while k <= last:
        if k >= first:
            pts.add(k)
        k *= 2
    return np.array(sorted(pts), dtype=np.int64)


def partial_sums(stream: TermStream, checkpoints=None, targets: Iterable[float] = ()) -> Trajectory:
    """Partial sums of a term stream, first indices reaching each target and
    integral-test tail brackets when the stream is monotone."""
    terms = np.asarray(stream.terms, dtype=np.float64)
    first = stream.first_index
    targets = list(targets)
    if terms.size == 0:
        return Trajectory(np.empty(0, np.int64), np.empty(0), 0.0, first - 1, {t: None for t in targets}, 0.0, 0.0)
    sums = running_sums(terms)
    last = stream.last_index
    cps = _default_checkpoints(first, last) if checkpoints is None else np.asarray(checkpoints, dtype=np.int64)
    cps = cps[(cps >= first) & (cps <= last)]
    hits = {}
    for t in targets:
        mask = sums >= t
        hits[t] = int(first + np.argmax(mask)) if mask.any() else None
    upper = lower = None
    if stream.monotone_from is not None and stream.monotone_from <= last:
        bounds = []
        if stream.ratio_bound is not None and stream.ratio_bound < 1.0:
            q = stream.ratio_bound
            bounds.append(terms[-1] * q / (1.0 - q))
        if stream.tail_integral is not None:
            bounds.append(stream.tail_integral(float(last)))
            lower = stream.tail_integral(float(last + 1))
        if bounds:
            upper = float(min(bounds))
    return Trajectory(cps, sums[cps - first], total(terms), last, hits, upper, lower)


# ---------------------------------------------------------------------------
# Bertrand scale


def bertrand_divergent(alpha: float, beta: float) -> bool:
    return alpha < 1.0 or (alpha == 1.0 and beta <= 1.0)


def bertrand_tail(alpha: float, beta: float, x: float) -> float:
    """Upper bound for ``integral_x^inf u**-alpha (log u)**-beta du``, ``x > 1``.

    Exact via the incomplete gamma function when ``alpha > 1, beta < 1``.
    """
    lx = math.log(x)
    if alpha == 1.0:
        if beta <= 1.0:
            return math.inf
        return lx ** (1.0 - beta) / (beta - 1.0)
    if alpha < 1.0:
        return math.inf
    k = alpha - 1.0
    if beta == 0.0:
        return math.exp(-k * lx) / k
    if beta < 1.0:
        a = 1.0 - beta
        return k ** (-a) * float(special.gammaincc(a, k * lx) * special.gamma(a))
    # (log u)^-beta <= (log x)^-beta on [x, inf)
    return lx ** (-beta) * math.exp(-k * lx) / k


def _bertrand_integral(alpha, beta, a, b):
    """``integral_a^b u**-alpha (log u)**-beta du`` for ``1 < a <= b``."""
    if b <= a:
        return 0.0
    val, _ = integrate.quad(lambda u: math.exp((1.0 - alpha) * u) * u ** (-beta), math.log(a), math.log(b), limit=200)
    return val


def _bertrand_monotone_from(alpha, beta):
    """First integer ``m >= 2`` beyond which ``m**-alpha (log m)**-beta`` is
    nonincreasing, or ``None`` if it is eventually increasing."""
    # derivative sign is that of -(alpha log x + beta)
    if alpha > 0:
        return max(2, math.ceil(math.exp(-beta / alpha)) + 1) if beta < 0 else 2
    if alpha == 0 and beta > 0:
        return 2
    return None


def classify_bertrand(alpha: float, beta: float, horizon: int = DEFAULT_HORIZON, targets=()) -> SeriesVerdict:
    """Verdict for ``sum_{m >= 2} 1 / (m**alpha (log m)**beta)``."""
    horizon = max(2, int(horizon))
    m = np.arange(2, horizon + 1, dtype=np.float64)
    log_terms = -alpha * np.log(m) - beta * np.log(np.log(m))
    terms, clamped = exp_clamped(log_terms)
    mono = _bertrand_monotone_from(alpha, beta)
    divergent = bertrand_divergent(alpha, beta)
    tail = None
    if not divergent:
        tail = lambda x: bertrand_tail(alpha, beta, x)  # noqa: E731
    stream = TermStream(terms, 2, mono, tail)
    traj = partial_sums(stream, targets=targets)
    ev = {"alpha": alpha, "beta": beta, "clamped_terms": clamped}
    if divergent:
        if mono is not None:
            lo = _bertrand_integral(alpha, beta, float(mono), float(horizon + 1))
            desc = f"sum_(m={mono}..M) f(m) >= integral_{mono}^(M+1) f -> infinity"
        else:
            # eventually nondecreasing positive terms
            m0 = 2 if alpha <= 0 and beta <= 0 else math.ceil(math.exp(beta / -alpha)) + 1
            m0 = min(m0, horizon)
            f0 = m0 ** (-alpha) * math.log(m0) ** (-beta)
            lo = (horizon - m0 + 1) * f0
            desc = f"terms nondecreasing from m={m0}: sum_(m={m0}..M) f(m) >= (M - {m0} + 1) f({m0})"
        return SeriesVerdict(
            Decision.DIVERGENT, Tier.SYMBOLIC, horizon, None, None, mono, desc, lo, traj.total, traj, None, ev
        )
    return SeriesVerdict(
        Decision.CONVERGENT,
        Tier.SYMBOLIC,
        horizon,
        traj.tail_bound,
        horizon,
        mono,
        None,
        None,
        traj.total,
        traj,
        None,
        ev,
    )


# ---------------------------------------------------------------------------
# numeric trend


def block_trend(index: np.ndarray, terms: np.ndarray) -> tuple[Decision, dict]:
    """Trend from sums over dyadic index blocks ``[2**k, 2**(k+1))``.

    Divergent when the last block sum has not shrunk beyond the harmonic
    rate ``(K-1)/K``; Convergent when the last two block ratios are clearly
    below it; otherwise Undecided.
    """
    index = np.asarray(index)
    terms = np.asarray(terms, dtype=np.float64)
    if terms.size == 0 or not np.any(terms > 0):
        return Decision.CONVERGENT, {"reason": "all computed terms vanish", "blocks": []}
    top = int(index.max())
    K = top.bit_length() - 1
    if (1 << (K + 1)) - 1 > top:
        K -= 1
    blocks = []
    for k in range(0, K + 1):
        mask = (index >= (1 << k)) & (index < (1 << (k + 1)))
        blocks.append(total(terms[mask]))
    info = {"blocks": blocks}
    if len(blocks) < 4:
        info["reason"] = "fewer than four complete dyadic blocks"
        return Decision.UNDECIDED, info
    b2, b1, b0 = blocks[-3], blocks[-2], blocks[-1]
    if b0 == 0.0 and b1 == 0.0:
        info["reason"] = "last two blocks vanish"
        return Decision.CONVERGENT, info
    r1 = b0 / b1 if b1 > 0 else math.inf
    r2 = b1 / b2 if b2 > 0 else math.inf
    info["ratios"] = [r2, r1]
    if r1 >= 1.0 - 1.5 / K:
        info["reason"] = "block sums do not decay faster than the harmonic rate"
        return Decision.DIVERGENT, info
    if r1 <= 1.0 - 2.5 / K and r2 <= 1.0 - 2.5 / K:
        info["reason"] = "block sums decay faster than any Bertrand divergent rate"
        return Decision.CONVERGENT, info
    info["reason"] = "block ratios in the ambiguous band"
    return Decision.UNDECIDED, info


def _trend_verdict(index, terms, horizon, extra=None, monotone_ok=True, targets=()) -> SeriesVerdict:
    stream = TermStream(np.asarray(terms, dtype=np.float64), int(index[0]) if len(index) else 1)
    traj = partial_sums(stream, targets=targets)
    dec, info = block_trend(index, terms)
    ev = dict(extra or {})
    ev["trend"] = info
    if not monotone_ok:
        ev["trend"]["reason"] = "terms not certified monotone; trend reported only"
        dec = Decision.UNDECIDED
    return SeriesVerdict(dec, Tier.NUMERIC, horizon, partial_sum=traj.total, trajectory=traj, evidence=ev)


# ---------------------------------------------------------------------------
# symbolic helpers for the weight families


def _level_of_L(L: float) -> int:
    return max(1, math.ceil((L - 1.0) / LOG2))


def _logpower_monotone_level(alpha, beta):
    """Level beyond which ``L**alpha log(e+L)**beta`` is increasing in L."""
    if alpha > 0:
        return _level_of_L(math.exp(max(0.0, -beta) / alpha))
    if alpha == 0 and beta > 0:
        return 1
    return None


def _order_class(theta: ThetaSpec):
    lead = leading_term(theta.terms())
    return lead


def _quad_tail(f, lo):
    val, err = integrate.quad(f, lo, math.inf, limit=400)
    return val + abs(err)


# ---------------------------------------------------------------------------
# criteria


def criterion_thin_exists(theta: ThetaSpec, horizon: int = DEFAULT_HORIZON, targets=()) -> SeriesVerdict:
    """Verdict on ``sum_m 1 / theta(2**-m)``.

    Divergence means separated non-Blaschke thin sequences exist for theta.
    """
    horizon = int(horizon)
    if isinstance(theta, Tabulated):
        return _thin_tabulated(theta, horizon, targets)
    eps = dyadic_samples(theta, horizon)
    lead = _order_class(theta)
    if lead is None or lead[0] <= 0:
        raise HypothesisError("theta must be positive for the thin-existence criterion")
    c, a, b = lead
    ev = {"theta": str(theta), "leading": {"coef": c, "alpha": a, "beta": b}}
    divergent = bertrand_divergent(a, b)
    mono = _logpower_monotone_level(a, b) if theta.nondecreasing_in_level_certified() or a > 0 else None
    tail = None
    if not divergent:
        tail = _thin_tail_function(theta)
    stream = TermStream(eps, 1, mono, tail)
    traj = partial_sums(stream, targets=targets)
    ev["bertrand"] = {"alpha": a, "beta": b}
    if divergent:
        desc = f"eps_m >= const / (m^{a:g} (log m)^{b:g}) eventually; Bertrand series with these exponents diverges"
        return SeriesVerdict(
            Decision.DIVERGENT, Tier.SYMBOLIC, horizon, None, None, mono, desc, traj.total, traj.total, traj, None, ev
        )
    return SeriesVerdict(
        Decision.CONVERGENT, Tier.SYMBOLIC, horizon, traj.tail_bound, horizon, mono, None, None, traj.total, traj, None, ev
    )


def _thin_tail_function(theta: ThetaSpec):
    """``x -> integral_x^inf dy / theta(2**-y)`` bound for convergent LogPower."""
    if not isinstance(theta, LogPower):
        return None
    c, a, b = theta.c, theta.alpha, theta.beta

    def tail(x):
        Lx = 1.0 + x * LOG2
        if b >= 0:
            # log(e + L) >= log L
            return bertrand_tail(a, b, Lx) / (c * LOG2)
        return _quad_tail(lambda L: 1.0 / (c * L**a * math.log(math.e + L) ** b), Lx) / LOG2

    return tail


def _thin_tabulated(theta: Tabulated, horizon, targets):
    levels = theta.levels
    levels = levels[(levels >= 1) & (levels <= horizon)]
    if levels.size == 0:
        raise HypothesisError("tabulated weight has no samples in 1..horizon")
    vals = np.asarray(theta.at_level(levels), dtype=np.float64)
    bad = ~(vals > 0)
    if np.any(bad):
        from .weights import NonPositiveTheta

        k = int(np.argmax(bad))
        raise NonPositiveTheta(int(levels[k]), float(vals[k]))
    eps = 1.0 / vals
    ev = {"theta": str(theta), "levels": [int(levels[0]), int(levels[-1])]}
    return _trend_verdict(levels, eps, int(levels[-1]), ev, theta.nondecreasing_in_level_certified(), targets)


def _require_thick_hypotheses(rho: RhoSpec):
    if not rho.nondecreasing:
        raise HypothesisError("rho flag 'nondecreasing' is not set (required hypothesis)")
    if rho.dominated_by_Ct is None:
        raise HypothesisError("rho flag 'dominated_by_Ct' is not set (required hypothesis)")


def scaled_rho_decision(theta: ThetaSpec):
    """Symbolic decision on ``sum_m exp(theta(2**-m))``.

    Returns ``(decision, reason)``; decision ``None`` when not symbolic.
    """
    if not theta.symbolic:
        return None, "not symbolic"
    lead = leading_term(theta.terms())
    if lead is None:
        return Decision.DIVERGENT, "theta vanishes identically: terms equal 1"
    c, a, b = lead
    if (a, b) <= (0.0, 0.0):
        return Decision.DIVERGENT, "theta bounded: terms stay above a positive constant"
    if c > 0:
        return Decision.DIVERGENT, "theta tends to +infinity: terms unbounded"
    if a > 0:
        return Decision.CONVERGENT, f"theta ~ -{-c:g} L^{a:g}: terms decay faster than any power of m"
    if b > 1:
        return Decision.CONVERGENT, f"theta ~ -{-c:g} (log L)^{b:g}: terms decay faster than any power of m"
    if b == 1:
        if -c > 1:
            return Decision.CONVERGENT, f"terms ~ m^-{-c:g} with exponent above 1"
        return Decision.DIVERGENT, f"terms ~ m^-{-c:g} with exponent at most 1"
    return Decision.DIVERGENT, f"theta ~ -(log L)^{b:g} with b < 1: terms decay slower than any power of m"


def _thick_tail_function(theta: ThetaSpec):
    """``x -> integral_x^inf exp(theta(2**-y)) dy`` for convergent cases."""
    if isinstance(theta, LogL):
        k = theta.k
        return lambda x: (1.0 + x * LOG2) ** (k + 1.0) / ((-k - 1.0) * LOG2)
    if isinstance(theta, LogPower):
        c, a, b = theta.c, theta.alpha, theta.beta
        if a == 0 and b == 1:
            return lambda x: (math.e + 1.0 + x * LOG2) ** (c + 1.0) / ((-c - 1.0) * LOG2)

        def tail(x):
            g = lambda L: math.exp(c * L**a * math.log(math.e + L) ** b)  # noqa: E731
            return _quad_tail(g, 1.0 + x * LOG2) / LOG2

        return tail
    return None


def criterion_thick_exists(rho: RhoSpec, horizon: int = DEFAULT_HORIZON, targets=()) -> SeriesVerdict:
    """Verdict on ``sum_m 2**m rho(2**-m) = sum_m exp(theta(2**-m))``.

    Divergence means separated thick sequences exist.
    """
    _require_thick_hypotheses(rho)
    theta = rho.theta
    horizon = int(horizon)
    if isinstance(theta, Tabulated):
        levels = theta.levels
        levels = levels[(levels >= 1) & (levels <= horizon)]
        logs = np.asarray(theta.at_level(levels), dtype=np.float64)
        terms, clamped = exp_clamped(logs)
        ev = {"theta": str(theta), "clamped_terms": clamped}
        return _trend_verdict(levels, terms, int(levels[-1]) if levels.size else horizon, ev, True, targets)
    ms = np.arange(1, horizon + 1)
    terms, clamped = exp_clamped(theta.at_level(ms))
    dec, reason = scaled_rho_decision(theta)
    ev = {"theta": str(theta), "reason": reason, "clamped_terms": clamped}
    mono = None
    lead = leading_term(theta.terms())
    if theta.nonincreasing_in_level_certified():
        mono = 1
    elif lead is not None and lead[0] < 0:
        mono = _logpower_monotone_level(lead[1], lead[2])
    tail = _thick_tail_function(theta) if dec is Decision.CONVERGENT else None
    traj = partial_sums(TermStream(terms, 1, mono, tail), targets=targets)
    if dec is Decision.DIVERGENT:
        desc = "terms eventually bounded below by m^-1 or a positive constant: " + reason
        return SeriesVerdict(dec, Tier.SYMBOLIC, horizon, None, None, mono, desc, traj.total, traj.total, traj, None, ev)
    return SeriesVerdict(
        dec, Tier.SYMBOLIC, horizon, traj.tail_bound, horizon, mono, None, None, traj.total, traj, None, ev
    )


# ---------------------------------------------------------------------------
# exponential sums over an annulus profile


class Scale(str, enum.Enum):
    DYADIC = "DyadicGap"
    MEAN_SPACING = "MeanSpacing"


def _as_profile(profile) -> CountProfile:
    if isinstance(profile, CountProfile):
        return profile
    if isinstance(profile, Mapping):
        return CountProfile.from_counts(dict(profile))
    raise TypeError("profile must be a CountProfile or a mapping m -> N_m")


@dataclass(frozen=True)
class ExponentialTerms:
    levels: np.ndarray
    log_terms: np.ndarray
    terms: np.ndarray
    clamped: int
    underflow: int
    skipped: list


def exponential_terms(profile, rho: RhoSpec, gamma: float, scale=Scale.DYADIC, horizon=DEFAULT_HORIZON):
    """``log N_m + log rho(2**-m) - gamma g_m`` with ``g_m = 2**m / N_m`` or
    ``1 / (N_m dbar_m)``, evaluated per level."""
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma!r}")
    prof = _as_profile(profile)
    scale = Scale(scale)
    keep = prof.levels <= horizon
    ms = prof.levels[keep]
    logN = prof.log_counts[keep]
    skipped = []
    if scale is Scale.MEAN_SPACING:
        zero = np.isneginf(logN)
        if np.any(zero):
            raise ValueError(f"N_m = 0 at level {int(ms[int(np.argmax(zero))])} with the mean-spacing scale")
        small = logN < math.log(6.0) - 1e-12
        skipped = [int(m) for m in ms[small]]
        ms, logN = ms[~small], logN[~small]
        dbar = prof.dbar or {}
        has = np.array([int(m) in dbar and dbar[int(m)] > 0 for m in ms], dtype=bool)
        skipped += [int(m) for m in ms[~has]]
        ms, logN = ms[has], logN[has]
        d = np.array([dbar[int(m)] for m in ms], dtype=np.float64)
        with np.errstate(over="ignore"):
            g = np.exp(-(logN + np.log(d)))
    else:
        with np.errstate(over="ignore"):
            g = np.exp(ms * LOG2 - logN)
    with np.errstate(invalid="ignore"):
        lt = logN + rho.log_at_level(ms) - gamma * g
    lt = np.where(np.isneginf(logN), -np.inf, lt)
    terms, clamped = exp_clamped(lt)
    underflow = int(np.count_nonzero((terms == 0.0) & np.isfinite(lt)))
    return ExponentialTerms(ms, lt, terms, clamped, underflow, skipped)


def _theta_growth_constant(theta: ThetaSpec) -> float | None:
    """``kappa`` with ``D'(x) <= kappa D(x) / x`` for ``D = theta + log x``, ``x >= e``."""
    if isinstance(theta, LogPower) and theta.c > 0 and theta.alpha >= 0 and theta.beta >= 0:
        return theta.alpha + theta.beta + 1.0
    if isinstance(theta, LogL) and theta.k > 0:
        return theta.k + 1.0
    if isinstance(theta, Constant) and theta.c >= 0:
        return 1.0
    return None


def _example_symbolic(origin: ExampleFormula, gamma: float, horizon: int):
    """Decision for the example profiles from the dominant exponent.

    With ``l_m`` in ``[p_m / D_m, p_m / D_m + 2**-m]`` and
    ``D_m = theta_m + log m`` the term is
    ``l_m exp(theta_m - gamma / l_m)``.
    """
    theta = origin.theta
    if not (theta.symbolic and theta.positive_certified() and theta.nondecreasing_in_level_certified()):
        return None
    lead = leading_term(theta.terms())
    c, a, b = lead
    if origin.diverging:
        m0 = math.ceil(max(math.exp(2.0 * gamma), math.e**2))
        return {
            "decision": Decision.DIVERGENT,
            "reason": f"term_m >= exp(-gamma) for m >= max(e^(2 gamma), e^2) = {m0}; holds for every gamma > 0",
            "lower_bound_from": m0,
            "every_gamma": True,
        }
    p = float(origin.p)
    s = gamma / p
    if s > 1.0:
        kappa = _theta_growth_constant(theta)
        if kappa is None:
            return None
        M = max(int(horizon), math.ceil(2.0 * kappa / LOG2), 3)
        D_M = float(theta.at_level(M)) + math.log(M)
        K = (p / D_M + math.ldexp(1.0, -M)) * math.exp(gamma * math.ldexp(1.0, -M) * D_M**2 / p**2)
        bound = K * M ** (1.0 - s) / (s - 1.0)
        return {
            "decision": Decision.CONVERGENT,
            "reason": f"term_m <= K m^-{s:g} for m >= {M} (gamma/p = {s:g} > 1)",
            "tail_bound": bound,
            "tail_from": M,
            "monotone_from": M,
            "K": K,
        }
    if s < 1.0 and (a, b) > (0.0, 1.0):
        return {
            "decision": Decision.DIVERGENT,
            "reason": "gamma < p and theta grows faster than log m: log term_m -> infinity",
            "every_gamma": False,
        }
    return None


def _full_circle_symbolic(origin: FullCircleFormula, theta: ThetaSpec, gamma: float, horizon: int):
    if not origin.infinite:
        return {"decision": Decision.CONVERGENT, "reason": "finitely many levels: finite sum", "tail_bound": 0.0}
    dec, reason = scaled_rho_decision(theta)
    if dec is None:
        return None
    out = {"decision": dec, "reason": "terms equal exp(theta_m - gamma); " + reason, "every_gamma": True}
    if dec is Decision.CONVERGENT:
        tail = _thick_tail_function(theta)
        if tail is None:
            return None
        lead = leading_term(theta.terms())
        mono = 1 if theta.nonincreasing_in_level_certified() else _logpower_monotone_level(lead[1], lead[2])
        M = max(int(horizon), mono or 1)
        out.update(tail_bound=math.exp(-gamma) * tail(float(M)), tail_from=M, monotone_from=mono)
    return out


def criterion_exponential_sum(
    profile,
    rho: RhoSpec,
    gamma: float,
    scale=Scale.DYADIC,
    horizon: int = DEFAULT_HORIZON,
    J: Iterable[int] | None = None,
    gamma_grid: Iterable[float] | None = None,
    targets=(),
) -> SeriesVerdict:
    """Verdict on ``sum_m N_m rho(2**-m) exp(-gamma g_m)``.

    The evidence carries the full sum and the sum over levels outside ``J``.
    Symbolic profile origins (the example formulas, full circles) are
    decided from their dominant exponent; raw count data gets a trend.
    """
    prof = _as_profile(profile)
    scale = Scale(scale)
    grid = None
    if gamma_grid is not None:
        gs = [float(g) for g in gamma_grid]
        if any(not g > 0 for g in gs):
            raise ValueError("gamma grid values must be positive")
        grid = tuple(
            (g, criterion_exponential_sum(prof, rho, g, scale, horizon, J).decision) for g in gs
        )
    et = exponential_terms(prof, rho, gamma, scale, horizon)
    Jset = set(int(j) for j in J) if J is not None else set()
    outside = np.array([int(m) not in Jset for m in et.levels], dtype=bool)
    ev = {
        "gamma": gamma,
        "scale": scale.value,
        "full_sum": total(et.terms),
        "complement_sum": total(et.terms[outside]) if et.terms.size else 0.0,
        "J": sorted(Jset),
        "clamped_terms": et.clamped,
        "underflow_terms": et.underflow,
        "skipped_levels": et.skipped,
    }
    h = int(et.levels[-1]) if et.levels.size else int(horizon)
    traj = partial_sums(TermStream(et.terms, int(et.levels[0]) if et.levels.size else 1), targets=targets)
    if et.levels.size and np.any(np.diff(et.levels) != 1):
        # gaps: checkpoint sums by position, not by level
        traj = Trajectory(et.levels, running_sums(et.terms), total(et.terms), h, traj.first_hits)

    sym = None
    if scale is Scale.DYADIC and rho.theta.symbolic:
        if isinstance(prof.origin, ExampleFormula) and prof.origin.theta == rho.theta:
            sym = _example_symbolic(prof.origin, gamma, h)
        elif isinstance(prof.origin, FullCircleFormula):
            sym = _full_circle_symbolic(prof.origin, rho.theta, gamma, h)
    if sym is not None:
        ev["symbolic"] = {k: v for k, v in sym.items() if k != "decision"}
        dec = sym["decision"]
        if dec is Decision.CONVERGENT:
            return SeriesVerdict(
                dec,
                Tier.SYMBOLIC,
                h,
                sym.get("tail_bound"),
                sym.get("tail_from", h),
                sym.get("monotone_from"),
                partial_sum=traj.total,
                trajectory=traj,
                gamma_grid=grid,
                evidence=ev,
            )
        return SeriesVerdict(
            dec,
            Tier.SYMBOLIC,
            h,
            lower_bound=sym["reason"],
            lower_bound_value=traj.total,
            partial_sum=traj.total,
            trajectory=traj,
            gamma_grid=grid,
            evidence=ev,
        )
    if et.levels.size == 0:
        ev["trend"] = {"reason": "no levels"}
        return SeriesVerdict(Decision.CONVERGENT, Tier.NUMERIC, h, partial_sum=0.0, trajectory=traj, gamma_grid=grid, evidence=ev)
    dec, info = block_trend(et.levels, et.terms)
    ev["trend"] = info
    return SeriesVerdict(dec, Tier.NUMERIC, h, partial_sum=traj.total, trajectory=traj, gamma_grid=grid, evidence=ev)


def scaled_rho_tail(theta: ThetaSpec, M: int):
    """Certified bound on ``sum_{m > M} exp(theta(2**-m))``.

    Returns ``(bound, monotone_from)`` or ``None`` when the series is not
    symbolically convergent or the terms are not known to decrease past ``M``.
    """
    dec, _ = scaled_rho_decision(theta)
    if dec is not Decision.CONVERGENT:
        return None
    tail = _thick_tail_function(theta)
    if tail is None:
        return None
    if theta.nonincreasing_in_level_certified():
        mono = 1
    else:
        lead = leading_term(theta.terms())
        mono = _logpower_monotone_level(lead[1], lead[2])
    if mono is None or mono > M:
        return None
    return tail(float(M)), mono
