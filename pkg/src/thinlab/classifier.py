"""Verdicts combining weights, annulus profiles and witnesses.

Every verdict carries its evidence. A thin verdict names a witness that can
be replayed; a thick verdict names the series criterion that fired and its
tier. Numeric trends never upgrade a verdict past ``Undecided``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .constructions import (
    CircleConstruction,
    ConstructionError,
    build_index_set_and_counts,
    full_circle_sequence,
    spaced_circle_sequence,
    split_series_subset,
)
from .geometry import (
    AnnulusProfile,
    CountProfile,
    ExampleFormula,
    FullCircleFormula,
    PointSequence,
    build_profile,
    separation_constant,
)
from .series import (
    DEFAULT_HORIZON,
    Decision,
    Scale,
    SeriesVerdict,
    criterion_exponential_sum,
    criterion_thick_exists,
    criterion_thin_exists,
    scaled_rho_tail,
)
from .weights import (
    LogPower,
    RhoSpec,
    Tabulated,
    ThetaSpec,
    Tri,
    WeightError,
    compare,
    leading_term,
)
from .witnesses import ONE, ConstantFn, HInftyFunction, exceptional_probe, summatory

FORMAT_VERSION = 1
DEFAULT_GAMMA_GRID = (1.0, 10.0, 100.0)
C_GRID = tuple(float(2**k) for k in range(11))


def infer_rho(theta: ThetaSpec) -> RhoSpec:
    """``rho_theta`` with every hypothesis flag that validates."""
    C = None
    if theta.symbolic:
        lead = leading_term(theta.terms())
        if lead is None or lead[0] < 0 or (lead[1], lead[2]) <= (0.0, 0.0):
            levels = np.arange(0, 2049)
            C = math.exp(float(np.max(theta.at_level(levels))))
    elif isinstance(theta, Tabulated):
        C = math.exp(float(np.max(theta.at_level(theta.levels))))
    for nd, dom in ((True, C), (True, None), (False, C), (False, None)):
        try:
            return RhoSpec(theta, nondecreasing=nd, dominated_by_Ct=dom)
        except WeightError:
            continue
    return RhoSpec(theta)


# ---------------------------------------------------------------------------
# weight regime


class Regime(str, enum.Enum):
    ALL_THICK = "AllThickSide"
    ALL_THIN = "AllThinSide"
    MIXED = "Mixed"
    UNDECIDED = "Undecided"


@dataclass(frozen=True)
class RegimeVerdict:
    regime: Regime
    thin: SeriesVerdict | None
    thick: SeriesVerdict | None
    skipped: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.regime is Regime.ALL_THICK:
            assert self.thin is not None and self.thin.decision is Decision.CONVERGENT and self.thin.proven
        if self.regime is Regime.ALL_THIN:
            assert self.thick is not None and self.thick.decision is Decision.CONVERGENT and self.thick.proven

    @property
    def decided(self) -> bool:
        return self.regime is not Regime.UNDECIDED

    def to_json(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "regime": self.regime.value,
            "thin_exists": None if self.thin is None else self.thin.to_json(),
            "thick_exists": None if self.thick is None else self.thick.to_json(),
            "skipped": dict(self.skipped),
        }


def weight_regime(theta: ThetaSpec, rho: RhoSpec | None = None, horizon: int = DEFAULT_HORIZON) -> RegimeVerdict:
    """Which separated sequences can occur for ``theta``.

    The two existence criteria run independently; one whose hypotheses
    fail is skipped and recorded.
    """
    rho = infer_rho(theta) if rho is None else rho
    skipped = {}
    thin = thick = None
    try:
        thin = criterion_thin_exists(theta, horizon)
    except WeightError as exc:
        skipped["thin_exists"] = str(exc)
    try:
        thick = criterion_thick_exists(rho, horizon)
    except WeightError as exc:
        skipped["thick_exists"] = str(exc)

    def proven(v, d):
        return v is not None and v.proven and v.decision is d

    thin_conv, thick_conv = proven(thin, Decision.CONVERGENT), proven(thick, Decision.CONVERGENT)
    if thin_conv and thick_conv:
        # the two cannot both hold for a weight meeting both hypothesis sets
        skipped["conflict"] = "both existence series converge; hypotheses of one criterion must be violated"
        regime = Regime.UNDECIDED
    elif thin_conv:
        regime = Regime.ALL_THICK
    elif thick_conv:
        regime = Regime.ALL_THIN
    elif proven(thin, Decision.DIVERGENT) and proven(thick, Decision.DIVERGENT):
        regime = Regime.MIXED
    else:
        regime = Regime.UNDECIDED
    return RegimeVerdict(regime, thin, thick, skipped)


# ---------------------------------------------------------------------------
# class comparison


class ClassRelation(str, enum.Enum):
    SAME = "SameClass"
    DIFFERENT = "DifferentClass"
    UNDECIDED = "Undecided"


@dataclass
class IndexSetPlan:
    """Spaced circles on the index set built from the smaller weight.

    The thin sequence for the smaller weight that is thick for the larger."""

    larger: ThetaSpec
    smaller: ThetaSpec
    regularizer: ThetaSpec | None
    preview_levels: int

    kind = "index_set+spaced_circles"

    def index_set(self, m_max: int | None = None):
        return build_index_set_and_counts(self.smaller, m_max or self.preview_levels, self.regularizer)

    def level_triples(self, m_cap: int):
        iset = self.index_set(max(m_cap, 2))
        out = []
        for m in iset.L:
            if m > m_cap:
                break
            n = int(iset.counts[m])
            r = 1.0 - math.ldexp(1.0, -m)
            out.append((m, n, 2.0 * r * math.sin(math.pi / n) if n >= 2 else 0.0))
        return out

    def materialize(self, m_cap: int, budget: int | None = None) -> PointSequence:
        return spaced_circle_sequence(self.level_triples(m_cap), budget=budget)

    def to_json(self) -> dict:
        iset = self.index_set()
        return {
            "construction": self.kind,
            "larger": str(self.larger),
            "smaller": str(self.smaller),
            "regularizer": None if self.regularizer is None else str(self.regularizer),
            "preview_m_max": self.preview_levels,
            "L": iset.L,
            "N": {str(m): int(iset.counts[m]) for m in iset.L},
        }


@dataclass
class SmallWeightPlan:
    """Full circles on block levels where the small weight is relatively tiny."""

    rho_large: RhoSpec
    rho_small: RhoSpec
    j_max: int = 8

    kind = "split_series+full_circles"

    def subset(self):
        return split_series_subset(self.rho_large, self.rho_small, self.j_max)

    def materialize(self, m_cap: int, budget: int | None = None) -> CircleConstruction:
        return full_circle_sequence(self.subset().A, m_cap, budget)

    def to_json(self) -> dict:
        out = {"construction": self.kind, "rho_large": str(self.rho_large.theta), "rho_small": str(self.rho_small.theta)}
        try:
            out["subset"] = self.subset().to_json()
        except ConstructionError as exc:
            out["subset_error"] = str(exc)
        return out


@dataclass(frozen=True)
class ClassComparison:
    relation: ClassRelation
    reasons: list
    report: dict
    plan: object | None = None
    via: str | None = None

    @property
    def decided(self) -> bool:
        return self.relation is not ClassRelation.UNDECIDED

    def to_json(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "relation": self.relation.value,
            "via": self.via,
            "reasons": list(self.reasons),
            "comparison": self.report,
            "witness_plan": None if self.plan is None else self.plan.to_json(),
        }


def _regularizer_below(larger: ThetaSpec) -> ThetaSpec:
    """An unbounded weight still negligible against ``larger``."""
    lead = leading_term(larger.terms()) if larger.symbolic else None
    if lead is None or (lead[1], lead[2]) > (0.0, 1.0):
        return LogPower(1.0, 0.0, 1.0)
    return LogPower(1.0, 0.0, lead[2] / 2.0)


def _thin_divergent(theta, horizon):
    try:
        v = criterion_thin_exists(theta, horizon)
    except WeightError as exc:
        return False, str(exc)
    if v.decision is Decision.DIVERGENT and v.proven:
        return True, "sum of 1/theta diverges (proof tier)"
    return False, f"thin-existence series for {theta}: {v.decision.value} at tier {v.tier.value}"


def _thick_divergent(rho, horizon):
    try:
        v = criterion_thick_exists(rho, horizon)
    except WeightError as exc:
        return False, str(exc)
    if v.decision is Decision.DIVERGENT and v.proven:
        return True, "sum of 2^m rho(2^-m) diverges (proof tier)"
    return False, f"thick-existence series for {rho.theta}: {v.decision.value} at tier {v.tier.value}"


def compare_weight_classes(
    theta1: ThetaSpec, theta2: ThetaSpec, horizon: int = DEFAULT_HORIZON, preview_levels: int = 256
) -> ClassComparison:
    """Same class, different classes with a witness plan, or undecided."""
    rep = compare(theta1, theta2, horizon)
    report = rep.as_dict()
    if rep.comparable is Tri.PROVEN:
        return ClassComparison(ClassRelation.SAME, ["weights comparable up to constants"], report, via="comparable")
    if rep.log_rho_gap_bounded is Tri.PROVEN:
        return ClassComparison(ClassRelation.SAME, ["theta1 - theta2 bounded"], report, via="bounded_gap")

    reasons = []
    pairs = (
        (theta1, theta2, rep.ratio_to_infinity, rep.rho_ratio_to_infinity),
        (theta2, theta1, rep.reverse_ratio_to_infinity, rep.reverse_rho_ratio_to_infinity),
    )
    for big, small, ratio, _ in pairs:
        if ratio is not Tri.PROVEN:
            continue
        ok, why = _thin_divergent(small, horizon)
        if ok:
            plan = IndexSetPlan(big, small, _regularizer_below(big), preview_levels)
            return ClassComparison(
                ClassRelation.DIFFERENT,
                [f"{big} / {small} -> infinity", why],
                report,
                plan,
                via="ratio_with_thin_existence",
            )
        reasons.append(f"ratio {big} / {small} -> infinity, but {why}")
    for big, small, _, rho_ratio in pairs:
        if rho_ratio is not Tri.PROVEN:
            continue
        rho_big, rho_small = infer_rho(big), infer_rho(small)
        if rho_big.dominated_by_Ct is None:
            reasons.append(f"rho for {big} is not validated below C t")
            continue
        ok, why = _thick_divergent(rho_big, horizon)
        if ok:
            plan = SmallWeightPlan(rho_big, rho_small)
            return ClassComparison(
                ClassRelation.DIFFERENT,
                [f"rho({big}) / rho({small}) -> infinity", why, f"rho({big}) <= {rho_big.dominated_by_Ct:g} t"],
                report,
                plan,
                via="small_weights",
            )
        reasons.append(f"rho ratio -> infinity for {big} over {small}, but {why}")
    if not reasons:
        reasons.append("no asymptotic relation between the weights is proven: " + "; ".join(rep.reasons.values()))
    return ClassComparison(ClassRelation.UNDECIDED, reasons, report)


# ---------------------------------------------------------------------------
# sequences


class SequenceDecision(str, enum.Enum):
    THIN = "ThinWitnessed"
    THICK = "ThickIndicated"
    UNDECIDED = "Undecided"


@dataclass(frozen=True)
class SequenceVerdict:
    decision: SequenceDecision
    criterion: str | None
    evidence: dict
    replay: dict
    annotations: list = field(default_factory=list)

    @property
    def decided(self) -> bool:
        return self.decision is not SequenceDecision.UNDECIDED

    def to_json(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "decision": self.decision.value,
            "paper_criterion": self.criterion,
            "evidence": self.evidence,
            "replay": self.replay,
            "annotations": list(self.annotations),
        }


@dataclass(frozen=True)
class _Source:
    seq: PointSequence | None
    profile: CountProfile
    complete: bool
    description: str


def _resolve_source(source, complete) -> _Source:
    if isinstance(source, CircleConstruction):
        origin = source.profile.origin
        finite = isinstance(origin, FullCircleFormula) and not origin.infinite
        if source.profile_only_levels:
            return _Source(None, source.profile, finite if complete is None else complete, "circle construction (profile)")
        return _Source(source.sequence, source.profile, finite if complete is None else complete, "circle construction")
    if isinstance(source, PointSequence):
        prof = build_profile(source).to_counts() if len(source) else CountProfile.from_counts({})
        return _Source(source, prof, True if complete is None else complete, f"{len(source)} points")
    if isinstance(source, AnnulusProfile):
        return _Source(None, source.to_counts(), bool(complete), "annulus profile")
    if isinstance(source, CountProfile):
        origin = source.origin
        default = isinstance(origin, FullCircleFormula) and not origin.infinite
        return _Source(None, source, default if complete is None else complete, "count profile")
    raise TypeError("source must be a PointSequence, CircleConstruction or profile")


def _profile_levels_sum_diverges(prof: CountProfile, K) -> tuple[bool | None, str]:
    """Whether ``sum_{m in K} N_m 2**-m`` diverges, from the profile origin."""
    origin = prof.origin
    if isinstance(origin, FullCircleFormula) and origin.infinite:
        return True, "full circles on every level: each level contributes 1"
    if isinstance(origin, ExampleFormula) and origin.diverging:
        return True, "l_m >= log m / (theta_m + log m) with sum_m diverging"
    return None, "finite data: the sum over K is finite at every horizon"


def _cor53(src: _Source, theta: ThetaSpec, c: float | None):
    prof = src.profile
    if not theta.positive_certified():
        return None, "rho >= c1 t needs theta bounded below; positivity is not certified"
    if not theta.nondecreasing_in_level_certified():
        return None, "theta is not certified nonincreasing in t"
    if not prof.dbar:
        return None, "profile carries no mean spacings"
    logN = dict(zip(prof.levels.tolist(), prof.log_counts.tolist()))
    prod = {
        m: math.exp(logN[m] + math.log(d))
        for m, d in prof.dbar.items()
        if m in logN and d > 0 and logN[m] >= math.log(6.0) - 1e-12
    }
    if not prod:
        return None, "no level with at least six points"
    c_used = min(prod.values()) if c is None else float(c)
    K = sorted(m for m, v in prod.items() if v >= c_used)
    origin = prof.origin
    full_infinite = isinstance(origin, FullCircleFormula) and origin.infinite
    div, why = _profile_levels_sum_diverges(prof, K)
    ev = {
        "c": c_used,
        "c1": 1.0,
        "K_range": [K[0], K[-1]] if K else None,
        "K_size": len(K),
        "sum_over_K": math.fsum(math.exp(logN[m] - m * math.log(2.0)) for m in K),
        "reason": why,
        "horizon_limited": not full_infinite,
    }
    if div and full_infinite and c_used > 0:
        # N_m dbar_m = 2^(m+1)(1 - 2^-m) sin(pi 2^-m) increases towards 2 pi for m >= 3
        return True, ev
    return None, ev


def _witness_tail(f: HInftyFunction, src: _Source, theta, M):
    if src.complete:
        return 0.0, "finite sequence: the sum is complete"
    origin = src.profile.origin
    if isinstance(f, ConstantFn) and isinstance(origin, FullCircleFormula) and origin.infinite:
        res = scaled_rho_tail(theta, int(M))
        if res is None:
            return None, "sum of 2^m rho(2^-m) is not certified convergent past the horizon"
        bound, mono = res
        return abs(f.c) * bound, f"|c| times integral tail of exp(theta(2^-y)) from {M} (terms decrease from level {mono})"
    return None, "no certified tail for this witness and source"


def classify_sequence(
    source,
    theta: ThetaSpec,
    rho: RhoSpec | None = None,
    gamma_grid=DEFAULT_GAMMA_GRID,
    witness_candidates=(),
    horizon: int = DEFAULT_HORIZON,
    complete: bool | None = None,
    cor53_c: float | None = None,
) -> SequenceVerdict:
    """Thin witness, thick indication or undecided for one sequence.

    ``complete`` states whether the data is the whole sequence; it defaults
    to true for explicit point lists and finite constructions.
    """
    rho = infer_rho(theta) if rho is None else rho
    gamma_grid = tuple(float(g) for g in gamma_grid)
    if any(not g > 0 for g in gamma_grid):
        raise ValueError("gamma grid values must be positive")
    src = _resolve_source(source, complete)
    replay = {
        "theta": str(theta),
        "source": src.description,
        "complete": src.complete,
        "gamma_grid": list(gamma_grid),
        "horizon": int(horizon),
    }
    annotations = []
    ev: dict = {}

    if src.seq is not None and len(src.seq) == 0:
        rep = summatory(ONE, rho, src.seq)
        ev["witness"] = {"f": str(ONE), "summatory": rep.as_dict(), "tail_bound": 0.0}
        replay["witness"] = str(ONE)
        return SequenceVerdict(SequenceDecision.THIN, "witness", ev, replay, ["empty sequence"])

    if src.seq is not None:
        sep = separation_constant(src.seq)
        ev["separation"] = sep.value
        if not sep.separated:
            annotations.append("sequence is not separated; criteria assume separation")

    thick_proof = None

    # (i) constant-spacing shortcut
    fired, info = _cor53(src, theta, cor53_c)
    ev["cor5.3"] = info if isinstance(info, dict) else {"skipped": info}
    if fired:
        thick_proof = "cor5.3"

    # (ii) exponential sums over the gamma grid
    candidates = [ONE] + [f for f in witness_candidates if f is not ONE]
    Js = []
    if src.seq is not None and len(src.seq):
        for f in candidates:
            if isinstance(f, ConstantFn):
                continue
            for scale in ("DyadicGap", "MeanSpacing"):
                probe = exceptional_probe(f, src.seq, C_GRID, scale)
                pick = next((r for r in probe.results if r.C == probe.smallest_C), probe.results[-1])
                Js.append({"f": str(f), "scale": scale, **pick.as_dict()})
    ev["J_tested"] = Js
    prop23_ok = theta.positive_certified() and theta.nondecreasing_in_level_certified()
    exp_ev = {}
    for scale, cid in ((Scale.DYADIC, "prop2.3a"), (Scale.MEAN_SPACING, "cor5.2a")):
        if scale is Scale.MEAN_SPACING and not src.profile.dbar:
            exp_ev[cid] = {"skipped": "profile carries no mean spacings"}
            continue
        J_union = set()
        for j in Js:
            if j["scale"] == scale.value:
                J_union |= set(j["J"])
        verdicts = []
        for g in gamma_grid:
            v = criterion_exponential_sum(src.profile, rho, g, scale, horizon, J_union or None)
            verdicts.append(v)
        exp_ev[cid] = {
            "hypotheses_certified": prop23_ok,
            "per_gamma": [
                {
                    "gamma": g,
                    "decision": v.decision.value,
                    "tier": v.tier.value,
                    "partial_sum": v.partial_sum,
                    "complement_sum": v.evidence.get("complement_sum"),
                    "every_gamma": v.evidence.get("symbolic", {}).get("every_gamma", False),
                }
                for g, v in zip(gamma_grid, verdicts)
            ],
        }
        all_div = all(v.decision is Decision.DIVERGENT for v in verdicts)
        if all_div and all(v.proven for v in verdicts) and prop23_ok:
            if thick_proof is None:
                thick_proof = cid
        elif all_div:
            annotations.append(f"thick-trend ({cid}: divergent on the grid, numeric tier)")
        if scale is Scale.DYADIC and any(v.decision is Decision.CONVERGENT and v.proven for v in verdicts):
            annotations.append("exponential sum converges for some gamma: these counts admit a thin sequence")
    ev["exponential_sums"] = exp_ev

    # (iii) witnesses
    thin = None
    ev["witnesses"] = []
    for f in candidates:
        if f.identically_zero:
            continue
        if src.seq is not None:
            rep = summatory(f, rho, src.seq)
            M = int(src.seq.levels.max())
        elif isinstance(f, ConstantFn):
            rep = summatory(f, rho, src.profile)
            M = int(src.profile.levels[-1]) if len(src.profile) else 0
        else:
            continue
        tail, why = _witness_tail(f, src, theta, M)
        entry = {
            "f": str(f),
            "summatory": rep.as_dict(),
            "finite": math.isfinite(rep.total),
            "tail_bound": tail,
            "tail_reason": why,
        }
        ev["witnesses"].append(entry)
        if thin is None and tail is not None and math.isfinite(rep.total) and math.isfinite(tail):
            thin = (f, entry)

    if thick_proof is not None and thin is not None:
        raise AssertionError(f"proof-tier conflict: {thick_proof} fired and witness {thin[1]['f']} certifies thinness")
    if thick_proof is not None:
        return SequenceVerdict(SequenceDecision.THICK, thick_proof, ev, replay, annotations)
    if thin is not None:
        replay["witness"] = thin[1]["f"]
        ev["witness"] = thin[1]
        return SequenceVerdict(SequenceDecision.THIN, "witness", ev, replay, annotations)
    return SequenceVerdict(SequenceDecision.UNDECIDED, None, ev, replay, annotations)
