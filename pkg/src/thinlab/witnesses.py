"""Bounded holomorphic functions on the disk, evaluated through ``log|f|``.

Blaschke factors use the pseudohyperbolic identity ``|b_a(z)| = d_G(a, z)``,
so values near the boundary keep their digits and zeros give ``-inf``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .geometry import (
    LOG2,
    AnnulusProfile,
    CountProfile,
    DiskPoint,
    DomainError,
    PointSequence,
    blaschke_sum,
    log_pseudo_distance_arrays,
    separation_constant,
    whitney_count_bound,
)
from .summation import exp_clamped, running_sums, total
from .weights import RhoSpec, ThetaSpec, theta_at_t


class HInftyFunction:
    """A function in the unit ball of ``H^infinity``."""

    def log_modulus(self, deltas, angles) -> np.ndarray:
        raise NotImplementedError

    @property
    def identically_zero(self) -> bool:
        return False


@dataclass(frozen=True)
class ConstantFn(HInftyFunction):
    c: complex = 1.0

    def __post_init__(self):
        if abs(self.c) > 1.0:
            raise ValueError(f"|c| = {abs(self.c)} exceeds 1")

    def log_modulus(self, deltas, angles):
        a = abs(self.c)
        val = -math.inf if a == 0.0 else math.log(a)
        return np.full(np.shape(deltas), val)

    @property
    def identically_zero(self):
        return self.c == 0

    def __str__(self):
        c = complex(self.c)
        return f"const:{c.real!r},{c.imag!r}"


@dataclass(frozen=True, eq=False)
class FiniteBlaschke(HInftyFunction):
    """``prod_k b_{a_k}^{mult_k}`` with ``|b_a(z)| = |a - z| / |1 - conj(a) z|``."""

    deltas: np.ndarray
    angles: np.ndarray
    mult: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.deltas, dtype=np.float64).reshape(-1)
        a = np.asarray(self.angles, dtype=np.float64).reshape(-1)
        m = np.asarray(self.mult, dtype=np.int64).reshape(-1)
        if not (d.shape == a.shape == m.shape):
            raise ValueError("zeros and multiplicities differ in length")
        if d.size and (np.any(~(d > 0)) or np.any(d > 1)):
            raise DomainError("zeros must lie in the open unit disk")
        if np.any(m < 1):
            raise ValueError("multiplicities must be positive")
        object.__setattr__(self, "deltas", d)
        object.__setattr__(self, "angles", np.mod(a, 2 * math.pi))
        object.__setattr__(self, "mult", m)

    @classmethod
    def from_points(cls, zeros: Sequence[DiskPoint], mult: Sequence[int] | None = None) -> "FiniteBlaschke":
        zeros = list(zeros)
        mult = [1] * len(zeros) if mult is None else list(mult)
        return cls([z.delta for z in zeros], [z.angle for z in zeros], mult)

    @classmethod
    def from_sequence(cls, seq: PointSequence) -> "FiniteBlaschke":
        return cls(seq.deltas, seq.angles, np.ones(len(seq), dtype=np.int64))

    @classmethod
    def factor(cls, a: complex) -> "FiniteBlaschke":
        p = DiskPoint.from_complex(a)
        return cls([p.delta], [p.angle], [1])

    def __len__(self):
        return int(self.deltas.size)

    def zeros_complex(self) -> np.ndarray:
        return (1.0 - self.deltas) * np.exp(1j * self.angles)

    def log_modulus(self, deltas, angles):
        s = np.asarray(deltas, dtype=np.float64)
        a = np.asarray(angles, dtype=np.float64)
        out = np.zeros(np.broadcast(s, a).shape)
        for zd, za, k in zip(self.deltas, self.angles, self.mult):
            out = out + k * log_pseudo_distance_arrays(zd, za, s, a)
        return out

    def __str__(self):
        return f"blaschke:{len(self)} zeros"


@dataclass(frozen=True)
class Power(HInftyFunction):
    base: HInftyFunction
    m: int

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise ValueError("power must be a positive integer")

    def log_modulus(self, deltas, angles):
        return self.m * self.base.log_modulus(deltas, angles)

    @property
    def identically_zero(self):
        return self.base.identically_zero

    def __str__(self):
        return f"pow:{self.base}^{self.m}"


@dataclass(frozen=True)
class Product(HInftyFunction):
    factors: tuple

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))

    def log_modulus(self, deltas, angles):
        out = np.zeros(np.shape(np.asarray(deltas)))
        for f in self.factors:
            out = out + f.log_modulus(deltas, angles)
        return out

    @property
    def identically_zero(self):
        return any(f.identically_zero for f in self.factors)

    def __str__(self):
        return "prod:[" + ";".join(str(f) for f in self.factors) + "]"


ONE = ConstantFn(1.0)


def eval_log_modulus(f: HInftyFunction, p: DiskPoint) -> float:
    """``log|f(z)|``; ``-inf`` at zeros of ``f``."""
    return float(f.log_modulus(np.array([p.delta]), np.array([p.angle]))[0])


# ---------------------------------------------------------------------------
# summatory functional


@dataclass(frozen=True)
class SummatoryReport:
    total: float
    per_level: dict
    running: np.ndarray
    terms: np.ndarray
    levels: np.ndarray
    tail_bound: float | None = None
    notes: tuple = ()

    def as_dict(self) -> dict:
        return {
            "total": self.total,
            "per_level": {str(m): v for m, v in self.per_level.items()} if len(self.per_level) <= 4096 else None,
            "tail_bound": self.tail_bound,
            "notes": list(self.notes),
        }


def summatory(f: HInftyFunction, rho: RhoSpec, seq) -> SummatoryReport:
    """``sum_k rho(1 - |z_k|) |f(z_k)|`` with per-annulus sums.

    ``seq`` may be a count profile when ``f`` is constant; the points are
    then taken on the circles ``|z| = 1 - 2**-m``.
    """
    if isinstance(seq, (CountProfile, AnnulusProfile)):
        if not isinstance(f, ConstantFn):
            raise TypeError("a profile without points supports constant witnesses only")
        prof = seq.to_counts() if isinstance(seq, AnnulusProfile) else seq
        logc = float(f.log_modulus(np.zeros(1) + 0.5, np.zeros(1))[0])
        lt = prof.log_counts + rho.log_at_level(prof.levels) + logc
        lt = np.where(np.isneginf(prof.log_counts), -np.inf, lt)
        terms, clamped = exp_clamped(lt)
        per = {int(m): float(v) for m, v in zip(prof.levels, terms)}
        notes = ("points on circles |z| = 1 - 2^-m",) + ((f"{clamped} clamped terms",) if clamped else ())
        return SummatoryReport(total(terms), per, running_sums(terms), terms, prof.levels.copy(), None, notes)
    if len(seq) == 0:
        return SummatoryReport(0.0, {}, np.empty(0), np.empty(0), np.empty(0, np.int64))
    logf = f.log_modulus(seq.deltas, seq.angles)
    lt = rho.log_at(seq.deltas) + logf
    terms, clamped = exp_clamped(lt)
    levels = seq.levels
    per = {int(m): total(terms[levels == m]) for m in np.unique(levels)}
    notes = (f"{clamped} clamped terms",) if clamped else ()
    return SummatoryReport(total(terms), per, running_sums(terms), terms, levels, None, notes)


# ---------------------------------------------------------------------------
# Blaschke filter


@dataclass(frozen=True)
class FilterCertificate:
    rows: list  # (k, lhs, rhs, ok)
    kept: np.ndarray
    remainder: np.ndarray
    remainder_blaschke_sum: float

    @property
    def all_ok(self) -> bool:
        return all(r[3] for r in self.rows)

    def to_json(self) -> list:
        return [[int(k), _num(l), _num(r), bool(ok)] for k, l, r, ok in self.rows]


def _num(x):
    x = float(x)
    return x if math.isfinite(x) else repr(x)


def blaschke_filter_transform(f: HInftyFunction, theta: ThetaSpec, seq: PointSequence):
    """Multiply ``f`` by the Blaschke product over the points where
    ``|f(z_k)| > exp(-theta(1 - |z_k|))``.

    Returns ``(f1, certificate)``; the certificate re-evaluates ``f1`` at
    every point and records ``log|f1(z_k)| <= -theta(delta_k)``.
    """
    if len(seq) == 0:
        return f, FilterCertificate([], np.empty(0, np.int64), np.empty(0, np.int64), 0.0)
    logf = f.log_modulus(seq.deltas, seq.angles)
    bound = -theta_at_t(theta, seq.deltas)
    ok = logf <= bound
    kept = np.nonzero(ok)[0]
    rem = np.nonzero(~ok)[0]
    if rem.size:
        B = FiniteBlaschke(seq.deltas[rem], seq.angles[rem], np.ones(rem.size, dtype=np.int64))
        f1 = Product((f, B))
    else:
        f1 = f
    lhs = f1.log_modulus(seq.deltas, seq.angles)
    rows = [(int(k), float(lhs[k]), float(bound[k]), bool(lhs[k] <= bound[k])) for k in range(len(seq))]
    rsum = blaschke_sum(seq.subset(~ok)).total
    return f1, FilterCertificate(rows, kept, rem, rsum)


# ---------------------------------------------------------------------------
# power trick


@dataclass(frozen=True)
class PowerTrickResult:
    m: int
    exponent: float
    finite_sum: float | None
    tail_bound: float | None
    tail_from: int | None
    L_validated: bool
    C_delta: float | None
    notes: tuple = ()


def power_exponent(L_lower: float) -> int:
    """Smallest integer ``m`` with ``(m - 1) L_lower / 2 > 1``."""
    if not L_lower > 0:
        raise ValueError("L_lower must be positive")
    if math.isinf(L_lower):
        return 2
    # exact: (m - 1) L > 2 iff m - 1 > 2 / L
    return math.floor(Fraction(2) / Fraction(L_lower)) + 2


def power_trick(
    f: HInftyFunction,
    theta: ThetaSpec,
    seq_profile,
    decay_certificate,
    L_lower: float,
    seq: PointSequence | None = None,
    horizon: int = 4096,
    C_delta: float | None = None,
) -> PowerTrickResult:
    """Raise a decaying witness to the power ``m`` chosen from ``L_lower``.

    ``decay_certificate`` is a :class:`FilterCertificate` (or a boolean per
    point) for ``log|f(z_k)| <= -theta(delta_k)``. ``L_lower`` bounds
    ``liminf theta(t) / log log(1/t)`` and is checked on levels
    ``horizon/2 .. horizon``.
    """
    m = power_exponent(L_lower)
    ok = decay_certificate.all_ok if isinstance(decay_certificate, FilterCertificate) else bool(np.all(decay_certificate))
    if not ok:
        raise ValueError("decay certificate does not hold at every point")
    notes = []
    lo = max(3, horizon // 2)
    ns = np.arange(lo, horizon + 1)
    L_eff = min(L_lower, 1e6)
    th = np.asarray(theta.at_level(ns), dtype=np.float64)
    validated = bool(np.all(th >= L_eff * np.log(ns * LOG2)))
    if not validated:
        notes.append(f"theta(2^-n) >= L_lower log(n log 2) fails somewhere in levels {lo}..{horizon}")
    finite = None
    if seq is not None and len(seq):
        fm = Power(f, m)
        lt = np.log(seq.deltas) + theta_at_t(theta, seq.deltas) + fm.log_modulus(seq.deltas, seq.angles)
        vals, _ = exp_clamped(lt)
        finite = total(vals)
        if C_delta is None:
            sep = separation_constant(seq).value
            C_delta = whitney_count_bound(sep)
            notes.append("C_delta from the separation (Whitney count bound)")
    if C_delta is None and isinstance(seq_profile, (AnnulusProfile, CountProfile)):
        dens = seq_profile.to_counts().density() if isinstance(seq_profile, AnnulusProfile) else seq_profile.density()
        C_delta = float(dens.max()) if dens.size else 0.0
        notes.append("C_delta measured from the profile (horizon-limited)")
    tail = tail_from = None
    s = (m - 1) * L_eff
    if validated and C_delta is not None and math.isfinite(C_delta) and s > 1:
        # per annulus: sum delta e^{-(m-1) theta} <= C_delta (n log 2)^{-s}
        tail_from = horizon
        tail = C_delta * LOG2 ** (-s) * horizon ** (1.0 - s) / (s - 1.0)
    return PowerTrickResult(m, s, finite, tail, tail_from, validated, C_delta, tuple(notes))


# ---------------------------------------------------------------------------
# exceptional indices


@dataclass(frozen=True)
class ExceptionalResult:
    J: set
    C: float
    scale: str
    satisfied: dict
    counts: dict
    J_density_sum: float
    skipped: list

    def as_dict(self):
        return {
            "J": sorted(self.J),
            "C": self.C,
            "scale": self.scale,
            "J_density_sum": self.J_density_sum,
            "skipped": self.skipped,
        }


def _level_scale(seq: PointSequence, scale: str):
    levels = seq.levels
    ms, counts = np.unique(levels, return_counts=True)
    g, skipped = {}, []
    if scale == "MeanSpacing":
        from .geometry import build_profile

        prof = build_profile(seq)
        for m, n in zip(ms, counts):
            rec = prof[int(m)]
            if rec.dbar is None:
                skipped.append(int(m))
                continue
            g[int(m)] = 1.0 / (n * rec.dbar)
    else:
        for m, n in zip(ms, counts):
            g[int(m)] = math.ldexp(1.0, int(m)) / n
    return levels, dict(zip(ms.tolist(), counts.tolist())), g, skipped


def exceptional_indices(f: HInftyFunction, seq: PointSequence, C: float, scale: str = "DyadicGap", _cache=None):
    """Levels where fewer than ``ceil(N_m/2)`` points satisfy
    ``log|f(z_k)| > -C g_m`` with ``g_m = 2**m/N_m`` or ``1/(N_m dbar_m)``."""
    if scale not in ("DyadicGap", "MeanSpacing"):
        raise ValueError(f"unknown scale {scale!r}")
    if _cache is None:
        logf = f.log_modulus(seq.deltas, seq.angles) if len(seq) else np.empty(0)
        levels, counts, g, skipped = _level_scale(seq, scale) if len(seq) else (np.empty(0, np.int64), {}, {}, [])
    else:
        logf, levels, counts, g, skipped = _cache
    J, sat = set(), {}
    for m, gm in g.items():
        mask = levels == m
        k = int(np.count_nonzero(logf[mask] > -C * gm))
        sat[m] = k
        if k < -(-counts[m] // 2):
            J.add(m)
    dens = math.fsum(math.ldexp(counts[m], -m) for m in J)
    return ExceptionalResult(J, C, scale, sat, counts, dens, skipped)


@dataclass(frozen=True)
class ExceptionalProbe:
    results: list
    threshold: float
    smallest_C: float | None

    def as_dict(self):
        return {
            "grid": [r.as_dict() for r in self.results],
            "threshold": self.threshold,
            "smallest_C": self.smallest_C,
        }


def exceptional_probe(f, seq, C_grid, scale="DyadicGap", threshold: float = 0.0) -> ExceptionalProbe:
    """``J(C)`` over a grid and the smallest ``C`` with
    ``sum_{m in J} N_m 2**-m <= threshold``."""
    logf = f.log_modulus(seq.deltas, seq.angles) if len(seq) else np.empty(0)
    levels, counts, g, skipped = _level_scale(seq, scale) if len(seq) else (np.empty(0, np.int64), {}, {}, [])
    cache = (logf, levels, counts, g, skipped)
    res = [exceptional_indices(f, seq, float(C), scale, cache) for C in sorted(C_grid)]
    smallest = next((r.C for r in res if r.J_density_sum <= threshold), None)
    return ExceptionalProbe(res, threshold, smallest)


# ---------------------------------------------------------------------------
# Nevanlinna characteristic and eta


@dataclass(frozen=True)
class NevanlinnaValue:
    value: float
    error_estimate: float
    r: float
    quad_n: int


def _check_r(r):
    if not (0.0 < r < 1.0):
        raise ValueError(f"r must lie in (0, 1), got {r!r}")


def _circle_mean(f: HInftyFunction, r: float, n: int, positive_part: bool, reciprocal: bool):
    phi = 2.0 * math.pi * np.arange(n) / n
    lm = f.log_modulus(np.full(n, 1.0 - r), phi)
    if reciprocal:
        lm = -lm
    vals = np.maximum(lm, 0.0) if positive_part else lm
    return total(vals) / n


def nevanlinna_T(f: HInftyFunction, r: float, quad_n: int = 4096, reciprocal: bool = False) -> NevanlinnaValue:
    """``T(r) = (1/2pi) int log+|g(r e^{i phi})| dphi + sum_{|b| < r} log(r/|b|)``
    for ``g = f`` or ``g = 1/f``; poles of ``1/f`` are the zeros of a finite
    Blaschke product ``f``. Error estimate: change under halving ``quad_n``.
    """
    _check_r(r)
    quad_n = max(8, int(quad_n))
    pole_term = 0.0
    if reciprocal:
        if not isinstance(f, FiniteBlaschke):
            raise TypeError("1/f is supported for finite Blaschke products")
        rad = 1.0 - f.deltas
        if np.any(rad == 0.0):
            raise ValueError("0 is a zero of f, so a pole of 1/f")
        if np.any(rad == r):
            r = math.nextafter(r, 0.0)
        inside = rad < r
        pole_term = math.fsum((f.mult[inside] * (math.log(r) - np.log(rad[inside]))).tolist())
    full = _circle_mean(f, r, quad_n, True, reciprocal)
    half = _circle_mean(f, r, quad_n // 2, True, reciprocal)
    return NevanlinnaValue(full + pole_term, abs(full - half), r, quad_n)


@dataclass(frozen=True)
class EtaRegion:
    """A closed disk ``|z - center| <= radius``; ``None`` radius is the closed unit disk."""

    center: complex = 0.0
    radius: float | None = None

    def __post_init__(self):
        if self.radius is not None and self.radius < 0:
            raise ValueError("radius must be nonnegative")

    @classmethod
    def closed_disk(cls) -> "EtaRegion":
        return cls(0.0, None)

    def contains(self, z: np.ndarray) -> np.ndarray:
        if self.radius is None:
            return np.ones(np.shape(z), dtype=bool)
        return np.abs(z - self.center) <= self.radius


@dataclass(frozen=True)
class EtaValue:
    value: float
    zero_part: float
    boundary_part: float
    zeros_counted: int


def eta_measure(f: FiniteBlaschke, region: EtaRegion) -> EtaValue:
    """``sum_{a in E} log(1/|a|)``; the boundary term vanishes for finite
    Blaschke products and is reported as exactly zero."""
    if not isinstance(f, FiniteBlaschke):
        raise TypeError("eta is computed for finite Blaschke products only")
    inside = region.contains(f.zeros_complex())
    vals = -f.mult[inside] * np.log1p(-f.deltas[inside])
    zp = math.fsum(vals.tolist())
    return EtaValue(zp, zp, 0.0, int(f.mult[inside].sum()))
