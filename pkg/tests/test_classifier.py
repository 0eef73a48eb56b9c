import math

import numpy as np
import pytest

from thinlab.classifier import (
    ClassRelation,
    IndexSetPlan,
    Regime,
    SequenceDecision,
    SmallWeightPlan,
    classify_sequence,
    compare_weight_classes,
    infer_rho,
    weight_regime,
)
from thinlab.constructions import example_profile, full_circle_profile, full_circle_sequence, spaced_circle_sequence
from thinlab.geometry import PointSequence
from thinlab.weights import Constant, LogL, LogPower, RhoSpec, Tabulated
from thinlab.witnesses import ONE, FiniteBlaschke, summatory

THETA_GRID = [
    Constant(1.0),
    Constant(0.0),
    LogPower(1.0, 1.0, 0.0),
    LogPower(0.3, 1.0, 0.0),
    LogPower(1.0, 0.0, 1.0),
    LogPower(1.0, 2.0, 0.0),
    LogL(-2.0),
    LogL(1.0),
    Tabulated({m: math.log(m + 2) for m in range(1, 200)}, True, True),
]


# --- regimes ------------------------------------------------------------------


def test_regime_examples():
    assert weight_regime(LogPower(1.0, 2.0, 0.0)).regime is Regime.ALL_THICK
    assert weight_regime(LogL(-2.0)).regime is Regime.ALL_THIN
    assert weight_regime(Constant(1.0)).regime is Regime.MIXED


def test_regime_skips_failed_hypotheses():
    v = weight_regime(LogPower(-1.0, 1.0, 0.0))
    assert "thin_exists" in v.skipped
    assert v.to_json()["format_version"] == 1


@pytest.mark.parametrize("theta", THETA_GRID, ids=str)
def test_regime_invariants(theta):
    v = weight_regime(theta, horizon=2000)
    if v.regime is Regime.ALL_THICK:
        assert v.thin.decision.value == "Convergent" and v.thin.proven
    if v.regime is Regime.ALL_THIN:
        assert v.thick.decision.value == "Convergent" and v.thick.proven


# --- class comparison ---------------------------------------------------------


@pytest.mark.parametrize("theta", THETA_GRID, ids=str)
def test_compare_with_itself_is_same_class(theta):
    assert compare_weight_classes(theta, theta, horizon=2000).relation is ClassRelation.SAME


def test_power_weights_same_class():
    # rho = t^0.3 and t^0.7
    res = compare_weight_classes(LogPower(0.7, 1.0, 0.0), LogPower(0.3, 1.0, 0.0))
    assert res.relation is ClassRelation.SAME


def test_power_weight_vs_linear_is_different():
    res = compare_weight_classes(LogPower(1.0, 1.0, 0.0), Constant(1.0))
    assert res.relation is ClassRelation.DIFFERENT
    assert isinstance(res.plan, IndexSetPlan) and res.via == "ratio_with_thin_existence"
    seq = res.plan.materialize(10)
    assert len(seq) > 0
    out = res.to_json()
    assert out["witness_plan"]["L"] and out["format_version"] == 1


def test_ratio_without_thin_existence_is_undecided():
    res = compare_weight_classes(LogPower(1.0, 3.0, 0.0), LogPower(1.0, 2.0, 0.0))
    assert res.relation is ClassRelation.UNDECIDED
    assert any("Convergent" in r for r in res.reasons)


def test_bounded_gap_is_same_class():
    # log(e + L) - log L stays bounded
    res = compare_weight_classes(LogPower(1.0, 0.0, 1.0), LogL(1.0))
    assert res.relation is ClassRelation.SAME


def test_small_weight_plan():
    res = compare_weight_classes(LogL(-1.0), LogL(-3.0))
    assert res.relation is ClassRelation.DIFFERENT and isinstance(res.plan, SmallWeightPlan)
    assert res.via == "small_weights"
    sub = res.plan.subset()
    assert all(s >= 1.0 for s in sub.rho1_block_sums)


# --- sequences ----------------------------------------------------------------


def test_full_circles_thin_with_constant_witness():
    v = classify_sequence(full_circle_profile(1, 4096), LogL(-2.0), horizon=4096)
    assert v.decision is SequenceDecision.THIN
    assert v.replay["witness"] == str(ONE)
    tail = v.evidence["witness"]["tail_bound"]
    M = 4096
    # sum_{m > M} (1 + m log 2)^-2 <= 1 / (log 2 (1 + M log 2))
    assert 0 < tail <= 1.0 / (math.log(2) * (1 + M * math.log(2))) * (1 + 1e-12)


def test_diverging_example_thick():
    theta = LogPower(1.0, 1.0, 0.0)
    v = classify_sequence(example_profile(theta, "log", 20000), theta, horizon=20000)
    assert v.decision is SequenceDecision.THICK and v.criterion == "prop2.3a"
    assert v.to_json()["paper_criterion"] == "prop2.3a"


def test_constant_example_annotated():
    theta = LogPower(1.0, 1.0, 0.0)
    v = classify_sequence(example_profile(theta, 1.0, 20000), theta, gamma_grid=[4.0], horizon=20000)
    assert v.decision is SequenceDecision.UNDECIDED
    assert any("converges for some gamma" in a for a in v.annotations)


def test_empty_sequence_thin():
    v = classify_sequence(PointSequence.empty(), LogPower(1.0, 1.0, 0.0))
    assert v.decision is SequenceDecision.THIN and v.evidence["witness"]["tail_bound"] == 0.0


def test_linear_weight_full_circles_thick():
    v = classify_sequence(full_circle_profile(1, 2000), Constant(1.0), horizon=2000)
    assert v.decision is SequenceDecision.THICK and v.criterion == "cor5.3"


def test_witness_replay_matches():
    cc = full_circle_sequence(range(1, 9), 10)
    theta = LogPower(1.0, 1.0, 0.0)
    v = classify_sequence(cc.sequence, theta)
    assert v.decision is SequenceDecision.THIN
    rep = summatory(ONE, infer_rho(theta), cc.sequence)
    assert v.evidence["witness"]["summatory"]["total"] == rep.total


def test_class_inclusion_replay():
    # a witness for the larger weight also works for the smaller one
    seq = full_circle_sequence(range(2, 10), 12).sequence
    big, small = LogPower(1.0, 1.0, 0.0), Constant(0.5)
    ms = np.arange(1, 200)
    assert np.all(big.at_level(ms) >= small.at_level(ms))
    f = FiniteBlaschke.factor(0.5 + 0.2j)
    r_big = summatory(f, RhoSpec(big), seq)
    r_small = summatory(f, RhoSpec(small), seq)
    assert np.all(r_small.terms <= r_big.terms)
    assert r_small.total <= r_big.total


def circle_families():
    yield "finite-full", full_circle_sequence(range(1, 10), 12).sequence
    yield "infinite-full", full_circle_profile(1, 3000)
    yield "spaced", spaced_circle_sequence([(m, 2 ** (m - 1), 2.0**-m) for m in range(2, 11)])


@pytest.mark.parametrize("name,src", list(circle_families()), ids=lambda x: x if isinstance(x, str) else "")
def test_all_thin_regime_gives_constant_witness(name, src):
    theta = LogL(-2.0)
    assert weight_regime(theta).regime is Regime.ALL_THIN
    v = classify_sequence(src, theta, horizon=3000)
    assert v.decision is SequenceDecision.THIN
    assert v.replay["witness"] == str(ONE)


@pytest.mark.parametrize(
    "theta",
    [LogPower(1.0, 1.0, 0.0), Constant(1.0), LogL(-2.0), LogL(-1.0), LogPower(1.0, 0.0, 1.0)],
    ids=str,
)
def test_no_proof_tier_conflict(theta):
    sources = [
        full_circle_profile(1, 1500),
        full_circle_sequence(range(1, 10), 12).sequence,
        example_profile(LogPower(1.0, 1.0, 0.0), "log", 1500),
    ]
    for src in sources:
        v = classify_sequence(src, theta, horizon=1500)
        thick = v.decision is SequenceDecision.THICK
        thin = v.decision is SequenceDecision.THIN
        assert not (thick and thin)
        if thin:
            assert v.evidence["witness"]["tail_bound"] is not None
