"""Unit-disk geometry: points stored by boundary gap, the pseudohyperbolic
metric, separation constants, dyadic annuli and annulus profiles.

A point is kept as ``(delta, angle)`` with ``delta = 1 - |z|``. All distance
formulas below work from that pair directly, so nothing near the unit
circle is ever recovered as ``1 - |z|`` by subtraction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .summation import total

TWO_PI = 2.0 * math.pi
# 2*pi - TWO_PI, the rounding error of the double constant
TWO_PI_LO = 2.4492935982947064e-16
LOG2 = math.log(2.0)
ONE_BELOW = math.nextafter(1.0, 0.0)


class DomainError(ValueError):
    """Raised for points outside the open unit disk."""


def _reduce_angle(angle: float) -> float:
    a = math.fmod(angle, TWO_PI)
    if a < 0.0:
        a += TWO_PI
    if a >= TWO_PI:
        a = 0.0
    return a


def _check_delta(delta: float) -> None:
    if not (0.0 < delta <= 1.0) or math.isnan(delta):
        raise DomainError(f"delta must lie in (0, 1], got {delta!r}")


@dataclass(frozen=True)
class DiskPoint:
    """A point of the open unit disk.

    ``gen = (m, j, n)`` marks a generated point on the circle
    ``|z| = 1 - 2**-m`` at angle ``2*pi*j/n``.
    """

    delta: float
    angle: float = 0.0
    gen: tuple[int, int, int] | None = None

    def __post_init__(self):
        _check_delta(self.delta)
        object.__setattr__(self, "angle", _reduce_angle(float(self.angle)))
        if self.gen is not None:
            m, j, n = self.gen
            if self.delta != math.ldexp(1.0, -m):
                raise DomainError(f"generated point at level {m} must have delta 2**-{m}")

    @classmethod
    def generated(cls, m: int, j: int, n: int | None = None) -> "DiskPoint":
        n = 2**m if n is None else n
        return cls(math.ldexp(1.0, -m), generator_angle(j, n, m), (m, j, n))

    @classmethod
    def from_complex(cls, z: complex) -> "DiskPoint":
        r = abs(z)
        if r >= 1.0:
            raise DomainError(f"|z| = {r} is not inside the unit disk")
        return cls(1.0 - r, math.atan2(z.imag, z.real))

    @property
    def modulus(self) -> float:
        return 1.0 - self.delta

    def to_complex(self) -> complex:
        r = 1.0 - self.delta
        return complex(r * math.cos(self.angle), r * math.sin(self.angle))


def generator_angle(j, n, m=None):
    """Angle ``2*pi*j/n``; exact power-of-two scaling when ``n == 2**m``."""
    if m is not None and n == 2**m:
        return _reduce_angle(math.ldexp(TWO_PI * j, -m))
    return _reduce_angle(TWO_PI * j / n)


# ---------------------------------------------------------------------------
# stable kernels (vectorized)


def half_angle_sin(a, b):
    """``|sin((a - b)/2)|`` accurate even when ``a - b`` is close to 2*pi."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    d = a - b
    # exact residual of the subtraction (TwoSum)
    bb = d - a
    lo = (a - (d - bb)) + (-b - bb)
    ad = np.abs(d)
    lo = np.where(d < 0, -lo, lo)
    wrap = ad > math.pi
    comp = (TWO_PI - ad) - lo + TWO_PI_LO
    arg = np.where(wrap, comp, ad)
    return np.abs(np.sin(0.5 * arg))


def _pieces(s, a, u, b):
    s = np.asarray(s, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    sh = half_angle_sin(a, b)
    cross = 4.0 * (1.0 - s) * (1.0 - u) * sh * sh
    num2 = (s - u) ** 2 + cross
    den2 = (s + u - s * u) ** 2 + cross
    return s, u, num2, den2


def chordal_distance_arrays(s, a, u, b):
    """Euclidean ``|z - w|`` from gaps and angles."""
    s, u, num2, _ = _pieces(s, a, u, b)
    return np.sqrt(num2)


def pseudo_distance_arrays(s, a, u, b):
    """Vectorized pseudohyperbolic distance; values stay strictly below 1."""
    s, u, num2, den2 = _pieces(s, a, u, b)
    with np.errstate(invalid="ignore", divide="ignore"):
        d = np.sqrt(num2 / den2)
    return np.minimum(d, ONE_BELOW)


def log_pseudo_distance_arrays(s, a, u, b):
    """``log d_G`` without losing digits when ``d_G`` is close to 1.

    Uses ``1 - d**2 = s*u*(2-s)*(2-u) / |1 - conj(z) w|**2``.
    Returns ``-inf`` where the points coincide.
    """
    s, u, num2, den2 = _pieces(s, a, u, b)
    gap = s * u * (2.0 - s) * (2.0 - u) / den2
    with np.errstate(divide="ignore", invalid="ignore"):
        near = 0.5 * np.log1p(-gap)
        far = 0.5 * (np.log(num2) - np.log(den2))
    out = np.where(gap < 0.5, near, far)
    return np.where(num2 == 0.0, -np.inf, out)


def pseudo_distance(p: DiskPoint, q: DiskPoint) -> float:
    """Pseudohyperbolic distance ``|z - w| / |1 - conj(z) w|``."""
    _check_delta(p.delta)
    _check_delta(q.delta)
    if p.delta == q.delta and p.angle == q.angle:
        return 0.0
    return float(pseudo_distance_arrays(p.delta, p.angle, q.delta, q.angle))


# ---------------------------------------------------------------------------
# annuli


def annulus_index(delta) -> int:
    """Level ``m`` with ``2**-(m+1) < delta <= 2**-m``."""
    _check_delta(delta)
    f, e = math.frexp(delta)
    return 1 - e if f == 0.5 else -e


def annulus_indices(deltas) -> np.ndarray:
    deltas = np.asarray(deltas, dtype=np.float64)
    if deltas.size and (np.any(deltas <= 0.0) or np.any(deltas > 1.0) or np.any(np.isnan(deltas))):
        raise DomainError("delta must lie in (0, 1]")
    f, e = np.frexp(deltas)
    return np.where(f == 0.5, 1 - e, -e).astype(np.int64)


# ---------------------------------------------------------------------------
# sequences


@dataclass(frozen=True, eq=False)
class PointSequence:
    """Finite ordered point set stored column-wise.

    ``gen`` is an ``(N, 3)`` integer array of generator tags, with ``-1`` rows
    for points without one.
    """

    deltas: np.ndarray
    angles: np.ndarray
    gen: np.ndarray | None = None
    claimed_separation: float | None = None

    def __post_init__(self):
        d = np.ascontiguousarray(self.deltas, dtype=np.float64).reshape(-1)
        a = np.ascontiguousarray(self.angles, dtype=np.float64).reshape(-1)
        if d.shape != a.shape:
            raise ValueError("deltas and angles differ in length")
        if d.size and (np.any(~(d > 0.0)) or np.any(d > 1.0)):
            raise DomainError("every delta must lie in (0, 1]")
        a = np.mod(a, TWO_PI)
        a[a >= TWO_PI] = 0.0
        object.__setattr__(self, "deltas", d)
        object.__setattr__(self, "angles", a)
        if self.gen is not None:
            g = np.asarray(self.gen, dtype=np.int64).reshape(-1, 3)
            if g.shape[0] != d.size:
                raise ValueError("gen tags must match the number of points")
            object.__setattr__(self, "gen", g)
        cs = self.claimed_separation
        if cs is not None and not (0.0 < cs < 1.0):
            raise ValueError("claimed_separation must lie in (0, 1)")

    @classmethod
    def from_points(cls, points: Iterable[DiskPoint], claimed_separation=None) -> "PointSequence":
        pts = list(points)
        gen = None
        if any(p.gen is not None for p in pts):
            gen = np.array([p.gen if p.gen is not None else (-1, -1, -1) for p in pts], dtype=np.int64)
        return cls(
            np.array([p.delta for p in pts], dtype=np.float64),
            np.array([p.angle for p in pts], dtype=np.float64),
            gen,
            claimed_separation,
        )

    @classmethod
    def empty(cls) -> "PointSequence":
        return cls(np.empty(0), np.empty(0))

    @classmethod
    def concat(cls, parts: Sequence["PointSequence"], claimed_separation=None) -> "PointSequence":
        parts = list(parts)
        if not parts:
            return cls.empty()
        gen = None
        if any(p.gen is not None for p in parts):
            gen = np.concatenate(
                [p.gen if p.gen is not None else np.full((len(p), 3), -1, dtype=np.int64) for p in parts]
            )
        return cls(
            np.concatenate([p.deltas for p in parts]),
            np.concatenate([p.angles for p in parts]),
            gen,
            claimed_separation,
        )

    def __len__(self) -> int:
        return int(self.deltas.size)

    def __getitem__(self, k: int) -> DiskPoint:
        g = None
        if self.gen is not None and self.gen[k, 0] >= 0:
            g = tuple(int(x) for x in self.gen[k])
        return DiskPoint(float(self.deltas[k]), float(self.angles[k]), g)

    def __iter__(self):
        return (self[k] for k in range(len(self)))

    @cached_property
    def levels(self) -> np.ndarray:
        return annulus_indices(self.deltas)

    def subset(self, mask) -> "PointSequence":
        mask = np.asarray(mask)
        return PointSequence(
            self.deltas[mask],
            self.angles[mask],
            None if self.gen is None else self.gen[mask],
            self.claimed_separation,
        )

    def to_complex(self) -> np.ndarray:
        r = 1.0 - self.deltas
        return r * np.exp(1j * self.angles)


# ---------------------------------------------------------------------------
# separation


@dataclass(frozen=True)
class Separation:
    value: float
    pair: tuple[int, int] | None
    claimed: float | None = None

    @property
    def separated(self) -> bool:
        return self.value > 0.0

    @property
    def claim_holds(self) -> bool | None:
        if self.claimed is None:
            return None
        return self.value >= self.claimed


def _angular_window(best, smax, umax, cmin):
    """Half-width in angle outside of which no pair can beat ``best``."""
    if cmin <= best:
        return math.pi
    x = best * (smax + umax) / (2.0 * (cmin - best))
    if x >= 1.0:
        return math.pi
    return min(math.pi, 2.0 * math.asin(x))


def _window_pairs(ang_p, ang_q, width, same):
    """Index pairs ``(i, k)`` with circular angle difference below ``width``.

    ``ang_q`` must be sorted. When ``same`` is set only ``i < k`` pairs from
    one array are produced.
    """
    n_q = ang_q.size
    if n_q == 0 or ang_p.size == 0:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    if width >= math.pi:
        if same:
            i, k = np.triu_indices(n_q, 1)
            return i.astype(np.int64), k.astype(np.int64)
        i, k = np.meshgrid(np.arange(ang_p.size), np.arange(n_q), indexing="ij")
        return i.ravel().astype(np.int64), k.ravel().astype(np.int64)
    ext = np.concatenate([ang_q - TWO_PI, ang_q, ang_q + TWO_PI])
    lo = np.searchsorted(ext, ang_p - width, side="left")
    hi = np.searchsorted(ext, ang_p + width, side="right")
    counts = hi - lo
    idx_p = np.repeat(np.arange(ang_p.size, dtype=np.int64), counts)
    offs = np.arange(counts.sum(), dtype=np.int64) - np.repeat(np.cumsum(counts) - counts, counts)
    idx_q = (np.repeat(lo, counts) + offs) % n_q
    if same:
        keep = idx_p < idx_q
        idx_p, idx_q = idx_p[keep], idx_q[keep]
    pairs = np.unique(np.stack([idx_p, idx_q], axis=1), axis=0) if idx_p.size else np.empty((0, 2), np.int64)
    return pairs[:, 0], pairs[:, 1]


def _min_over_pairs(seq, ip, iq, best, best_pair):
    chunk = 1 << 22
    for start in range(0, ip.size, chunk):
        a = ip[start : start + chunk]
        b = iq[start : start + chunk]
        d = pseudo_distance_arrays(seq.deltas[a], seq.angles[a], seq.deltas[b], seq.angles[b])
        same = (seq.deltas[a] == seq.deltas[b]) & (seq.angles[a] == seq.angles[b])
        d = np.where(same, 0.0, d)
        k = int(np.argmin(d))
        if d[k] < best:
            best = float(d[k])
            best_pair = (int(min(a[k], b[k])), int(max(a[k], b[k])))
    return best, best_pair


def separation_constant(seq: PointSequence) -> Separation:
    """Minimum pseudohyperbolic distance over distinct index pairs.

    Fewer than two points give 1 (empty infimum). Points are bucketed by
    annulus and scanned in angular windows sized by a lower bound on the
    distance, so circle-structured input costs near-linear time.
    """
    n = len(seq)
    if n < 2:
        return Separation(1.0, None, seq.claimed_separation)
    levels = seq.levels
    order = np.lexsort((seq.angles, levels))
    uniq, starts = np.unique(levels[order], return_index=True)
    groups = {int(m): order[s:e] for m, s, e in zip(uniq, starts, list(starts[1:]) + [n])}

    best, best_pair = 1.0, None
    # seed with angular neighbours inside each level and between adjacent levels
    for m, idx in groups.items():
        if idx.size >= 2:
            nxt = np.roll(idx, -1)
            best, best_pair = _min_over_pairs(seq, idx, nxt, best, best_pair)
        if m + 1 in groups:
            both = np.concatenate([idx, groups[m + 1]])
            both = both[np.argsort(seq.angles[both], kind="stable")]
            best, best_pair = _min_over_pairs(seq, both, np.roll(both, -1), best, best_pair)
    if best == 0.0:
        return Separation(0.0, best_pair, seq.claimed_separation)

    for m, idx in groups.items():
        for m2 in (m, m + 1):
            if m2 not in groups:
                continue
            idx2 = groups[m2]
            smax, umax = math.ldexp(1.0, -m), math.ldexp(1.0, -m2)
            cmin = math.sqrt((1.0 - smax) * (1.0 - umax))
            width = _angular_window(best, smax, umax, cmin)
            ip, iq = _window_pairs(seq.angles[idx], seq.angles[idx2], width, same=(m2 == m))
            if ip.size:
                best, best_pair = _min_over_pairs(seq, idx[ip], idx2[iq], best, best_pair)

    # levels two or more apart are at distance > 1/3; only checked when needed
    if best > 1.0 / 3.0:
        ms = sorted(groups)
        for i, m in enumerate(ms):
            for m2 in ms[i + 1 :]:
                if m2 < m + 2:
                    continue
                a, b = math.ldexp(1.0, -m - 1), math.ldexp(1.0, -m2)
                radial = (a - b) / (a + b - a * b)
                if radial >= best:
                    continue
                idx, idx2 = groups[m], groups[m2]
                ip, iq = _window_pairs(seq.angles[idx], seq.angles[idx2], math.pi, same=False)
                best, best_pair = _min_over_pairs(seq, idx[ip], idx2[iq], best, best_pair)
    return Separation(best, best_pair, seq.claimed_separation)


def whitney_count_bound(separation: float) -> float:
    """Upper bound on ``N_m * 2**-m`` for a sequence with this separation.

    Euclidean disks of radius ``sep * 2**-(m+2)`` around points of one
    annulus are disjoint and fit in a slightly widened annulus.
    """
    if not separation > 0.0:
        return math.inf
    return 16.0 * (1.0 + separation) / separation**2


# ---------------------------------------------------------------------------
# profiles


@dataclass(frozen=True)
class AnnulusRecord:
    count: int
    spacings: np.ndarray
    dbar: float | None
    density: float


@dataclass(frozen=True)
class AnnulusProfile:
    """Per-level statistics ``N_m``, sorted spacings, trimmed mean ``dbar_m``
    and density ``l_m = N_m 2**-m``."""

    records: dict[int, AnnulusRecord] = field(default_factory=dict)

    def __len__(self):
        return len(self.records)

    def __getitem__(self, m: int) -> AnnulusRecord:
        return self.records[m]

    def __contains__(self, m) -> bool:
        return m in self.records

    @property
    def levels(self) -> list[int]:
        return sorted(self.records)

    def total_count(self) -> int:
        return sum(r.count for r in self.records.values())

    def counts(self) -> dict[int, int]:
        return {m: self.records[m].count for m in self.levels}

    def to_counts(self) -> "CountProfile":
        ms = self.levels
        dbar = [self.records[m].dbar for m in ms]
        return CountProfile.from_counts(
            {m: self.records[m].count for m in ms},
            dbar={m: d for m, d in zip(ms, dbar) if d is not None},
        )


def _nearest_neighbour(deltas, angles, m):
    """Exact within-annulus Euclidean nearest-neighbour distances."""
    n = deltas.size
    order = np.argsort(angles, kind="stable")
    s, a = deltas[order], angles[order]
    best = np.full(n, np.inf)
    rmin = 1.0 - math.ldexp(1.0, -m)
    idx = np.arange(n)
    for k in range(1, n // 2 + 1):
        j = (idx + k) % n
        d = chordal_distance_arrays(s, a, s[j], a[j])
        best = np.minimum(best, d)
        best[j] = np.minimum(best[j], d)
        # unvisited neighbours lie beyond the k-th one on both sides
        gap_next = (a[j] - a) % TWO_PI
        gap_prev = gap_next[(idx - k) % n]
        circ = np.minimum(np.minimum(gap_next, gap_prev), math.pi)
        if np.all(2.0 * rmin * np.sin(0.5 * circ) >= best):
            break
    out = np.empty(n)
    out[order] = best
    return out


def build_profile(seq: PointSequence) -> AnnulusProfile:
    """Group points by annulus and collect spacing statistics."""
    if len(seq) == 0:
        return AnnulusProfile({})
    levels = seq.levels
    records = {}
    for m in np.unique(levels):
        m = int(m)
        mask = levels == m
        count = int(mask.sum())
        if count >= 2:
            spacings = np.sort(_nearest_neighbour(seq.deltas[mask], seq.angles[mask], m))
        else:
            spacings = np.empty(0)
        dbar = None
        if count >= 6:
            dbar = total(spacings[: count // 6]) / (count // 6)
        records[m] = AnnulusRecord(count, spacings, dbar, math.ldexp(count, -m))
    return AnnulusProfile(records)


@dataclass(frozen=True)
class BlaschkeSum:
    total: float
    per_level: dict[int, float]


def blaschke_sum(seq: PointSequence) -> BlaschkeSum:
    """``sum(1 - |z_k|)`` with its per-annulus breakdown."""
    if len(seq) == 0:
        return BlaschkeSum(0.0, {})
    levels = seq.levels
    per = {int(m): total(seq.deltas[levels == m]) for m in np.unique(levels)}
    return BlaschkeSum(total(seq.deltas), per)


# ---------------------------------------------------------------------------
# count-only profiles (possibly astronomically large counts)


@dataclass(frozen=True, eq=False)
class CountProfile:
    """Annulus counts ``N_m`` kept in log form.

    ``exact`` holds integer counts where they are known exactly; ``dbar``
    the trimmed mean spacing where a geometry backs the profile; ``origin``
    an optional symbolic description used for tail analysis.
    """

    levels: np.ndarray
    log_counts: np.ndarray
    exact: dict[int, int] | None = None
    dbar: dict[int, float] | None = None
    origin: object | None = None

    def __post_init__(self):
        lv = np.asarray(self.levels, dtype=np.int64).reshape(-1)
        lc = np.asarray(self.log_counts, dtype=np.float64).reshape(-1)
        if lv.shape != lc.shape:
            raise ValueError("levels and log_counts differ in length")
        if lv.size and np.any(np.diff(lv) <= 0):
            raise ValueError("levels must be strictly increasing")
        object.__setattr__(self, "levels", lv)
        object.__setattr__(self, "log_counts", lc)

    @classmethod
    def from_counts(cls, counts: dict[int, int], dbar=None, origin=None) -> "CountProfile":
        ms = sorted(counts)
        if any(counts[m] < 0 for m in ms):
            raise ValueError("counts must be nonnegative")
        with np.errstate(divide="ignore"):
            logs = np.array([math.log(counts[m]) if counts[m] > 0 else -math.inf for m in ms])
        return cls(np.array(ms, dtype=np.int64), logs, {m: int(counts[m]) for m in ms}, dbar, origin)

    def __len__(self):
        return int(self.levels.size)

    def log_density(self) -> np.ndarray:
        """``log l_m = log N_m - m log 2``."""
        return self.log_counts - self.levels * LOG2

    def density(self) -> np.ndarray:
        with np.errstate(under="ignore"):
            return np.exp(self.log_density())

    def count(self, m: int) -> int:
        if self.exact is not None and m in self.exact:
            return self.exact[m]
        i = np.searchsorted(self.levels, m)
        if i < self.levels.size and self.levels[i] == m:
            return int(round(math.exp(self.log_counts[i])))
        return 0

    def truncate(self, m_max: int) -> "CountProfile":
        keep = self.levels <= m_max
        exact = None if self.exact is None else {m: n for m, n in self.exact.items() if m <= m_max}
        dbar = None if self.dbar is None else {m: d for m, d in self.dbar.items() if m <= m_max}
        return CountProfile(self.levels[keep], self.log_counts[keep], exact, dbar, self.origin)


# ---------------------------------------------------------------------------
# symbolic profile descriptions (for tail analysis of constructed sequences)


@dataclass(frozen=True)
class ExampleFormula:
    """``N_m = max(1, ceil(p_m 2**m / (theta(2**-m) + log m)))``.

    ``p`` is a positive constant or ``"log"`` for ``p_m = log m``.
    """

    theta: object
    p: float | str

    @property
    def diverging(self) -> bool:
        return isinstance(self.p, str)

    def p_at(self, m):
        m = np.asarray(m, dtype=np.float64)
        if self.p == "log":
            return np.log(m)
        if isinstance(self.p, str):
            raise ValueError(f"unknown diverging sequence {self.p!r}")
        return np.full(m.shape, float(self.p))


@dataclass(frozen=True)
class FullCircleFormula:
    """``2**m`` equally spaced points on ``|z| = 1 - 2**-m`` for each level in
    ``levels`` (``None`` means every level ``>= m0``)."""

    levels: frozenset | None = None
    m0: int = 1

    def contains(self, m: int) -> bool:
        return m >= self.m0 if self.levels is None else m in self.levels

    @property
    def infinite(self) -> bool:
        return self.levels is None


def full_circle_chord(m: int) -> float:
    """Chord between neighbours of ``2**m`` equally spaced points at level ``m``."""
    return 2.0 * (1.0 - math.ldexp(1.0, -m)) * math.sin(math.ldexp(math.pi, -m))
