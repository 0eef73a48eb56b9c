"""Constructive procedures: index sets with annulus counts, block subsets of
a divergent series, circle sequences and the example count profiles."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .geometry import (
    TWO_PI,
    CountProfile,
    ExampleFormula,
    FullCircleFormula,
    PointSequence,
    full_circle_chord,
)
from .series import Decision, criterion_thick_exists, criterion_thin_exists, scaled_rho_decision
from .summation import total
from .weights import (
    LOG2,
    HypothesisError,
    LogPower,
    RhoSpec,
    Tabulated,
    ThetaSpec,
    Tri,
    compare,
    dyadic_samples,
    leading_term,
)

DEFAULT_POINT_BUDGET = 2_000_000


class ConstructionError(ValueError):
    """A construction could not be completed within its horizon."""


class HorizonTooSmall(ConstructionError):
    pass


class HorizonExhausted(ConstructionError):
    def __init__(self, msg, partial=None):
        super().__init__(msg)
        self.partial = partial


class InfeasibleLevel(ConstructionError):
    pass


class BudgetExceeded(ConstructionError):
    pass


class CertificationFailure(ConstructionError):
    pass


def point_budget(budget: int | None = None) -> int:
    if budget is not None:
        return int(budget)
    env = os.environ.get("THINLAB_POINT_BUDGET")
    return int(env) if env else DEFAULT_POINT_BUDGET


def _check_budget(n_points: int, budget: int | None):
    cap = point_budget(budget)
    if n_points > cap:
        raise BudgetExceeded(f"materializing {n_points} points exceeds the point budget {cap}")


# ---------------------------------------------------------------------------
# index set with counts


@dataclass(frozen=True)
class IndexSetWithCounts:
    L: list[int]
    counts: dict[int, int]
    eps: dict[int, float]
    provenance: dict
    blocks: list[tuple[int, int]] = field(default_factory=list)
    pruned: list[int] = field(default_factory=list)
    report: dict = field(default_factory=dict)

    def density(self, m: int) -> float:
        """``N_m 2**-m`` (exact ratio rounded once)."""
        return float(Fraction(self.counts[m], 1 << m))

    def to_json(self) -> dict:
        return {
            "L": list(self.L),
            "N": {str(m): int(self.counts[m]) for m in self.L},
            "eps": {str(m): float(self.eps[m]) for m in self.L},
            "provenance": self.provenance,
        }


def _regularize(theta2: ThetaSpec, regularizer):
    """``max(theta2, regularizer)`` when theta2 stays bounded; else theta2.
    ``regularizer=False`` keeps theta2 as given."""
    if regularizer is False or not theta2.symbolic:
        return theta2, None
    lead = leading_term(theta2.terms())
    if lead is not None and lead[0] > 0 and (lead[1], lead[2]) > (0.0, 0.0):
        return theta2, None
    reg = regularizer if regularizer is not None else LogPower(1.0, 0.0, 1.0)
    return _MaxTheta(theta2, reg), reg


@dataclass(frozen=True)
class _MaxTheta(ThetaSpec):
    a: ThetaSpec
    b: ThetaSpec

    def at_level(self, x):
        return np.maximum(self.a.at_level(x), self.b.at_level(x))

    def at(self, t):
        return max(self.a.at(t), self.b.at(t))

    def positive_certified(self):
        return self.a.positive_certified() or self.b.positive_certified()

    def nondecreasing_in_level_certified(self):
        return self.a.nondecreasing_in_level_certified() and self.b.nondecreasing_in_level_certified()

    def __str__(self):
        return f"max({self.a}, {self.b})"


def _find_blocks(eps: np.ndarray, first_level: int):
    """Greedy windows with ``1/(2n) < sum < 1/n``; ``eps[i]`` is level
    ``first_level + i``. Returns ``[(lo, hi)]`` in levels (inclusive) and the
    number of start advances."""
    blocks = []
    advances = 0
    n = 1
    i = 0
    size = eps.size
    while i < size:
        lo = i
        s = 0.0
        found = False
        while i < size:
            s += eps[i]
            i += 1
            while lo < i and s >= 1.0 / n:
                s -= eps[lo]
                lo += 1
                advances += 1
            if lo < i and s > 1.0 / (2 * n):
                exact = math.fsum(eps[lo:i].tolist())
                if 1.0 / (2 * n) < exact < 1.0 / n:
                    found = True
                    break
        if not found:
            break
        blocks.append((first_level + lo, first_level + i - 1))
        n += 1
    return blocks, advances


def _pow2_times(eps: float, k: int) -> Fraction:
    return Fraction(eps) * (1 << k) if k >= 0 else Fraction(eps) / (1 << -k)


def build_index_set_and_counts(
    theta2: ThetaSpec, m_max: int, regularizer: ThetaSpec | None | bool = None
) -> IndexSetWithCounts:
    """Index set ``L`` and counts ``N_m`` with ``2**(m-1) eps_m < N_m <= 2**m eps_m``.

    ``eps_m = 1 / theta2(2**-m)``. Blocks of consecutive levels carry
    ``eps``-mass in ``(1/(2n), 1/n)``; levels dominated by an earlier
    ``2**m eps_m`` are pruned; counts follow
    ``N_k = min(2**(k-m) N_m, floor(2**k eps_k))``. A bounded ``theta2`` is
    first replaced by ``max(theta2, regularizer)``, which tends to infinity.
    """
    m_max = int(m_max)
    if m_max < 2:
        raise HorizonTooSmall("m_max must be at least 2")
    if isinstance(theta2, Tabulated):
        if not theta2.nondecreasing_in_level_certified():
            raise HypothesisError("theta2 must be validated nonincreasing in t (tabulated monotone flag)")
        top = theta2.levels_available()
        m_max = min(m_max, top)
    elif not theta2.nondecreasing_in_level_certified():
        raise HypothesisError("theta2 must be nonincreasing in t")
    verdict = criterion_thin_exists(theta2, horizon=min(m_max, 10**6))
    if verdict.decision is Decision.CONVERGENT:
        raise HypothesisError("sum 1/theta2(2^-m) converges: the construction needs a divergent series")
    work, reg = _regularize(theta2, regularizer)
    eps = dyadic_samples(work, m_max)
    if np.any(np.diff(eps) > 0):
        raise HypothesisError("eps_m is not nonincreasing on the sampled levels")

    blocks, advances = _find_blocks(eps, 1)
    if not blocks:
        raise HorizonTooSmall(f"no block with eps-mass in (1/2, 1) fits below m_max={m_max}")
    L1 = [m for lo, hi in blocks for m in range(lo, hi + 1)]

    # pruning: j is dropped when 2^j eps_j <= 2^m eps_m for an earlier m in L1
    v = {m: m * LOG2 + math.log(eps[m - 1]) for m in L1}
    pruned, L = [], []
    best_m = None
    for m in L1:
        if best_m is not None:
            gap = v[m] - v[best_m]
            if gap < -1e-9:
                drop = True
            elif gap > 1e-9:
                drop = False
            else:
                drop = _pow2_times(eps[m - 1], m - best_m) <= Fraction(eps[best_m - 1])
            if drop:
                pruned.append(m)
                continue
        if best_m is None or v[m] >= v[best_m]:
            best_m = m
        L.append(m)

    # start where 2^m eps_m >= 2 so the first count is at least 2
    dropped_start = []
    while L and _pow2_times(eps[L[0] - 1], L[0]) < 2:
        dropped_start.append(L.pop(0))
    if not L:
        raise HorizonTooSmall("no level with 2^m eps_m >= 2 in the index set")

    counts: dict[int, int] = {}
    prev = None
    for k in L:
        fl = math.floor(_pow2_times(eps[k - 1], k))
        counts[k] = fl if prev is None else min(counts[prev] << (k - prev), fl)
        prev = k

    Lset = set(L)
    eps_L = np.array([eps[m - 1] for m in L])
    report = {
        "sum_eps_L": total(eps_L),
        "sum_eps_sq_L": total(eps_L**2),
        "blocks": len(blocks),
        # each block has eps-mass < 1/n with every term < 1/n
        "sum_eps_sq_tail_bound": 1.0 / len(blocks),
        "sum_eps_sq_tail_from_block": len(blocks),
        "start_advances": advances,
        "dropped_before_start": dropped_start,
    }
    prov = {
        "construction": "index_set_and_counts",
        "theta2": str(theta2),
        "m_max": m_max,
        "regularizer": None if reg is None else str(reg),
        "block_rule": "greedy sliding window, first window with mass in (1/(2n), 1/n)",
    }
    return IndexSetWithCounts(
        L,
        counts,
        {m: float(eps[m - 1]) for m in L},
        prov,
        blocks,
        [m for m in pruned if m not in Lset],
        report,
    )


# ---------------------------------------------------------------------------
# block subset of a divergent series


@dataclass(frozen=True)
class BlockSubset:
    blocks: list[tuple[int, int]]
    A: list[int]
    rho1_block_sums: list[float]
    rho2_block_sums: list[float]
    C: float
    report: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "blocks": [list(b) for b in self.blocks],
            "A": self.A,
            "rho1_block_sums": self.rho1_block_sums,
            "rho2_block_sums": self.rho2_block_sums,
            "C": self.C,
            "report": self.report,
        }


def split_series_subset(rho1: RhoSpec, rho2: RhoSpec, j_max: int, n_max: int = 100_000) -> BlockSubset:
    """Blocks ``[n_j, n'_j]`` with ``rho1``-mass at least 1 on which
    ``rho2(2**-n) <= 2**-j rho1(2**-n)``.

    ``n'_j`` is the first level where the block's ``2**n rho1(2**-n)`` sum
    reaches 1; a level violating the ratio condition restarts the block.
    """
    if rho1.dominated_by_Ct is None:
        raise HypothesisError("rho1 flag 'dominated_by_Ct' is not set (required hypothesis)")
    v = criterion_thick_exists(rho1, horizon=min(n_max, 10**6))
    if v.decision is not Decision.DIVERGENT:
        raise HypothesisError("sum 2^n rho1(2^-n) is not certified divergent")
    cmp = compare(rho1.theta, rho2.theta, n_max)
    if cmp.rho_ratio_to_infinity is Tri.REFUTED:
        raise HypothesisError("rho1/rho2 does not tend to infinity")
    C = float(rho1.dominated_by_Ct)
    th1 = np.asarray(rho1.theta.at_level(np.arange(1, n_max + 1)), dtype=np.float64)
    th2 = np.asarray(rho2.theta.at_level(np.arange(1, n_max + 1)), dtype=np.float64)
    blocks, s1, s2 = [], [], []
    n = 1
    for j in range(1, int(j_max) + 1):
        thr = -j * LOG2
        start, acc = None, []
        while n <= n_max:
            i = n - 1
            if th2[i] - th1[i] > thr:
                start, acc = None, []
                n += 1
                continue
            if start is None:
                start = n
            acc.append(math.exp(th1[i]))
            n += 1
            if math.fsum(acc) >= 1.0:
                break
        else:
            partial = BlockSubset(blocks, [m for a, b in blocks for m in range(a, b + 1)], s1, s2, C)
            raise HorizonExhausted(f"block {j} did not complete below n_max={n_max}", partial)
        if start is None or math.fsum(acc) < 1.0:
            partial = BlockSubset(blocks, [m for a, b in blocks for m in range(a, b + 1)], s1, s2, C)
            raise HorizonExhausted(f"block {j} did not complete below n_max={n_max}", partial)
        end = n - 1
        blocks.append((start, end))
        s1.append(math.fsum(acc))
        s2.append(math.fsum(math.exp(th2[k - 1]) for k in range(start, end + 1)))
    A = [m for a, b in blocks for m in range(a, b + 1)]
    measured_C = max(math.exp(th1[m - 1]) for m in A) if A else 0.0
    report = {
        "rho1_sum_over_A": math.fsum(s1),
        "completed_blocks": len(blocks),
        "rho2_sum_over_A": math.fsum(s2),
        "rho2_bound": math.fsum(2.0**-j * (1.0 + C) for j in range(1, len(blocks) + 1)),
        # every later block j adds at most 2^-j (1 + C)
        "rho2_tail_bound": 2.0 ** -len(blocks) * (1.0 + C),
        "measured_C": measured_C,
    }
    return BlockSubset(blocks, A, s1, s2, C, report)


# ---------------------------------------------------------------------------
# circle sequences


@dataclass(frozen=True)
class CircleConstruction:
    sequence: PointSequence
    profile: CountProfile
    materialized_levels: list[int]
    profile_only_levels: list[int]


def _circle_points(m: int, n: int):
    j = np.arange(n, dtype=np.int64)
    if n == 1 << m:
        ang = np.ldexp(TWO_PI * j.astype(np.float64), -m)
    else:
        ang = TWO_PI * j.astype(np.float64) / n
    ang = np.mod(ang, TWO_PI)
    deltas = np.full(n, math.ldexp(1.0, -m))
    gen = np.stack([np.full(n, m, np.int64), j, np.full(n, n, np.int64)], axis=1)
    return deltas, ang, gen


def _assemble(levels, claimed=None):
    if not levels:
        return PointSequence.empty()
    d = np.concatenate([x[0] for x in levels])
    a = np.concatenate([x[1] for x in levels])
    g = np.concatenate([x[2] for x in levels])
    return PointSequence(d, a, g, claimed)


def full_circle_sequence(A, m_materialize: int, budget: int | None = None) -> CircleConstruction:
    """``2**m`` points ``(1 - 2**-m) exp(2 pi i j / 2**m)`` for each ``m`` in ``A``.

    Levels above ``m_materialize`` appear in the profile only.
    """
    A = sorted({int(m) for m in A})
    if any(m < 0 for m in A):
        raise ValueError("levels must be nonnegative")
    mat = [m for m in A if m <= m_materialize]
    _check_budget(sum(1 << m for m in mat), budget)
    seq = _assemble([_circle_points(m, 1 << m) for m in mat])
    prof = CountProfile.from_counts(
        {m: 1 << m for m in A},
        dbar={m: full_circle_chord(m) for m in A if (1 << m) >= 6},
        origin=FullCircleFormula(frozenset(A)),
    )
    return CircleConstruction(seq, prof, mat, [m for m in A if m > m_materialize])


def full_circle_profile(m0: int, horizon: int) -> CountProfile:
    """Counts ``2**m`` on every level ``m0..horizon`` of the infinite family."""
    ms = np.arange(m0, horizon + 1, dtype=np.int64)
    exact = {int(m): 1 << int(m) for m in ms if m <= 64}
    # spacings below 2**-1000 are not kept; deeper levels use counts only
    dbar = {int(m): full_circle_chord(int(m)) for m in ms if 3 <= m <= 1000}
    return CountProfile(ms, ms * LOG2, exact, dbar, FullCircleFormula(None, m0))


def spaced_circle_sequence(levels, cor52: bool = False, budget: int | None = None) -> PointSequence:
    """``N_m`` equally spaced points on ``|z| = 1 - 2**-m`` per ``(m, N_m, d_m)``.

    Feasibility ``N_m d_m <= 2 pi (1 - 2**-m)`` and the measured chord
    ``>= d_m`` are checked; ``cor52`` also demands ``2**-m <= d_m <= 1``.
    """
    levels = [(int(m), int(n), float(d)) for m, n, d in levels]
    ms = [m for m, _, _ in levels]
    if len(set(ms)) != len(ms):
        raise InfeasibleLevel("each level may appear once")
    _check_budget(sum(n for _, n, _ in levels), budget)
    parts = []
    for m, n, d in sorted(levels):
        r = 1.0 - math.ldexp(1.0, -m)
        if n < 0 or d < 0:
            raise InfeasibleLevel(f"level {m}: negative count or spacing")
        if n * d > TWO_PI * r:
            raise InfeasibleLevel(f"level {m}: N_m d_m = {n * d:g} exceeds 2 pi (1 - 2^-m) = {TWO_PI * r:g}")
        if cor52 and not (math.ldexp(1.0, -m) <= d <= 1.0):
            raise InfeasibleLevel(f"level {m}: d_m = {d:g} outside [2^-m, 1]")
        if n == 0:
            continue
        if n >= 2:
            chord = 2.0 * r * math.sin(math.pi / n)
            if chord < d:
                raise InfeasibleLevel(f"level {m}: chord {chord:g} below d_m = {d:g}")
        parts.append(_circle_points(m, n))
    return _assemble(parts)


@dataclass(frozen=True)
class Counterexample:
    levels: list[tuple[int, int]]
    sequence: PointSequence
    profile: CountProfile
    rho_over_t_sum: float
    rho_over_t_tail_bound: float
    blaschke_sum: int
    materialized_levels: list[int]


def small_rho_counterexample(
    rho: RhoSpec, j_max: int, horizon: int = 10**6, m_materialize: int = 20, budget: int | None = None
) -> Counterexample:
    """Full circles on dyadic levels ``m_j`` with ``2**m_j rho(2**-m_j) <= 2**-j``
    and ``m_{j+1} >= m_j + 2``.

    The circles form a non-Blaschke sequence while
    ``sum_j rho(t_j)/t_j <= sum_j 2**-j``.
    """
    theta = rho.theta
    dec, _ = scaled_rho_decision(theta) if theta.symbolic else (None, None)
    top = horizon if theta.levels_available() is None else min(horizon, theta.levels_available())
    ms = np.arange(1, top + 1)
    try:
        th = np.asarray(theta.at_level(ms), dtype=np.float64)
    except Exception as exc:  # tabulated gaps
        raise CertificationFailure(str(exc)) from exc
    lead = leading_term(theta.terms()) if theta.symbolic else None
    certified = lead is not None and lead[0] < 0 and (lead[1], lead[2]) > (0.0, 0.0)
    picks = []
    m_next = 1
    for j in range(1, int(j_max) + 1):
        thr = -j * LOG2
        cand = np.nonzero((ms >= m_next) & (th <= thr))[0]
        if cand.size == 0:
            raise CertificationFailure(
                f"no level m <= {top} with 2^m rho(2^-m) <= 2^-{j}"
                + ("" if certified else "; liminf rho(t)/t = 0 is not certified")
            )
        m = int(ms[cand[0]])
        picks.append(m)
        m_next = m + 2
    levels = [(m, 1 << m) for m in picks]
    mat = [m for m in picks if m <= m_materialize]
    _check_budget(sum(1 << m for m in mat), budget)
    seq = _assemble([_circle_points(m, 1 << m) for m in mat])
    prof = CountProfile.from_counts({m: n for m, n in levels}, origin=FullCircleFormula(frozenset(picks)))
    s = math.fsum(math.exp(th[m - 1]) for m in picks)
    return Counterexample(levels, seq, prof, s, 2.0 ** -len(picks), len(picks), mat)


# ---------------------------------------------------------------------------
# example profiles

EXACT_LEVELS = 1000


def example_profile(theta: ThetaSpec, p, m_range) -> CountProfile:
    """``N_m = max(1, ceil(p_m 2**m / (theta(2**-m) + log m)))``.

    ``p`` is a positive constant or ``"log"`` (``p_m = log m``). Counts are
    exact integers up to level 1000 and kept in log form above.
    """
    lo, hi = (1, int(m_range)) if np.isscalar(m_range) else (int(m_range[0]), int(m_range[1]))
    if lo < 1:
        raise ValueError("example profiles start at level 1")
    if not isinstance(p, str) and not p > 0:
        raise ValueError("p must be positive")
    origin = ExampleFormula(theta, p if isinstance(p, str) else float(p))
    ms = np.arange(lo, hi + 1, dtype=np.int64)
    th = np.asarray(theta.at_level(ms), dtype=np.float64)
    if np.any(~(th > 0)):
        bad = int(ms[int(np.argmax(~(th > 0)))])
        raise HypothesisError(f"theta must be positive; fails at level {bad}")
    D = th + np.log(ms.astype(np.float64))
    pm = origin.p_at(ms)
    logN = np.empty(ms.size)
    exact = {}
    small = ms <= EXACT_LEVELS
    x = pm[small] * np.ldexp(1.0, ms[small]) / D[small]
    with np.errstate(divide="ignore"):
        n_small = np.maximum(1.0, np.ceil(x))
    for m, n in zip(ms[small], n_small):
        exact[int(m)] = int(n)
    logN[small] = np.log(n_small)
    big = ~small
    with np.errstate(divide="ignore"):
        logN[big] = np.log(pm[big]) + ms[big] * LOG2 - np.log(D[big])
    return CountProfile(ms, logN, exact, None, origin)
