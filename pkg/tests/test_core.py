import math

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from papaya import (FragmentationConfig, InfeasibleError, UndefinedPointError, papaya_point,
                    papaya_score, predict_max, throughput_at, throughput_derivative, verdict,
                    verdict_fragmented, verdict_general)
from papaya.core import is_infeasible

from conftest import cost

pos = dict(allow_nan=False, allow_infinity=False)


def central_difference(model, b, h=1e-4):
    """Central difference; pass h=None for a step relative to the batch."""
    h = 1e-4 * b if h is None else h
    return (throughput_at(model, b + h) - throughput_at(model, b - h)) / (2 * h)


def test_throughput_at_reference(baseline):
    assert throughput_at(baseline, 140) == pytest.approx(73.684, abs=5e-4)
    assert throughput_at(baseline, 140) == pytest.approx(1 / (0.01 + 0.5 / 140))


@pytest.mark.parametrize("batch", [1, 7.5, 140, 1e4])
def test_zero_fixed_latency_gives_flat_throughput(batch):
    m = cost(0.1, 2.0, 0.01, 0.0)
    assert throughput_at(m, batch) == pytest.approx(100.0)
    assert throughput_derivative(m, batch) == 0.0


def test_throughput_approaches_inverse_gamma(baseline):
    values = [throughput_at(baseline, b) for b in (1e2, 1e4, 1e6, 1e8)]
    assert all(v < 100.0 for v in values)
    assert values[-1] == pytest.approx(100.0, rel=1e-6)


def test_derivative_reference(baseline):
    d = throughput_derivative(baseline, 140)
    assert d == pytest.approx(0.13850, abs=5e-6)
    assert d == pytest.approx(central_difference(baseline, 140), rel=1e-6)


def test_predict_max_reference(baseline):
    p = predict_max(baseline)
    assert p.max_batch_continuous == pytest.approx(140.0)
    assert p.max_batch_integer == 140
    assert p.max_throughput == pytest.approx(73.684, abs=5e-4)
    assert p.at_latency == pytest.approx(1.9)


def test_predict_max_fractional_batch():
    p = predict_max(cost(0.3, 2.0, 0.01, 0.5))
    assert p.max_batch_continuous == pytest.approx(46.667, abs=5e-4)
    assert p.max_batch_integer == 46
    assert p.integer_throughput < p.max_throughput


def test_predict_max_infeasible():
    with pytest.raises(InfeasibleError):
        predict_max(cost(0.1, 17.0, 0.01, 0.5))


@pytest.mark.parametrize("alpha_mom, gamma_mom, expected, defined", [
    (0.04, 0.013, 20.0, True),
    (0.10, 0.013, 0.0, True),
    (0.04, 0.010, math.inf, False),
    (0.04, 0.008, math.inf, False),
    (0.10, 0.010, -math.inf, False),
])
def test_papaya_score(baseline, alpha_mom, gamma_mom, expected, defined):
    score, ok = papaya_score(baseline, cost(alpha_mom, 2.0, gamma_mom, 0.5, "mom"))
    assert ok is defined
    assert score == pytest.approx(expected)


def test_papaya_point(baseline):
    assert papaya_point(baseline) == pytest.approx(28.0)
    assert papaya_point(cost(0.1, 2.0, 0.01, 1.0)) == pytest.approx(14.0)
    assert papaya_point(cost(1e-6, 16.0 - 1e-5, 0.01, 0.5)) < 1e-4


def test_papaya_point_errors():
    with pytest.raises(UndefinedPointError):
        papaya_point(cost(0.1, 2.0, 0.01, 0.0))
    with pytest.raises(InfeasibleError):
        papaya_point(cost(0.1, 17.0, 0.01, 0.5))


def test_verdict_mom_a(baseline, mom_a):
    v = verdict(baseline, mom_a)
    assert v.score == pytest.approx(20.0) and v.point == pytest.approx(28.0)
    assert not v.beneficial
    assert v.mom_prediction.max_throughput == pytest.approx(69.307, abs=5e-4)
    assert v.baseline_prediction.max_throughput == pytest.approx(73.684, abs=5e-4)
    assert v.normalized_score == pytest.approx(20 / 28)


def test_verdict_mom_b(baseline, mom_b):
    v = verdict(baseline, mom_b)
    assert v.score == pytest.approx(40.0)
    assert v.beneficial
    assert v.mom_prediction.max_throughput == pytest.approx(78.652, abs=5e-4)
    assert v.normalized_max_throughput == pytest.approx(78.652 / 73.684, abs=1e-4)


def test_verdict_by_necessity(mom_b):
    v = verdict(cost(0.1, 17.0, 0.01, 0.5), cost(0.02, 15.0, 0.012, 0.5, "mom"))
    assert v.beneficial and v.by_necessity
    assert v.baseline_prediction is None


def test_verdict_both_infeasible():
    with pytest.raises(InfeasibleError):
        verdict(cost(0.1, 17.0, 0.01, 0.5), cost(0.02, 17.0, 0.012, 0.5, "mom"))


def test_verdict_mom_infeasible(baseline):
    v = verdict(baseline, cost(0.02, 16.5, 0.012, 0.5, "mom"))
    assert not v.beneficial and v.mom_prediction is None


def test_verdict_dominating(baseline):
    v = verdict(baseline, cost(0.05, 2.0, 0.009, 0.5, "mom"))
    assert v.beneficial and v.dominating and v.score == math.inf and not v.score_defined


def test_verdict_tie_is_beneficial(baseline):
    v = verdict(baseline, baseline)
    assert v.beneficial and v.normalized_max_throughput == 1.0


def test_verdict_device_mismatch(baseline):
    with pytest.raises(ValueError):
        verdict(baseline, cost(0.02, 2.0, 0.012, 0.5, "mom", device_memory=32.0))


def test_assumption_warning(baseline):
    v = verdict(baseline, cost(0.02, 3.0, 0.012, 0.6, "mom"))
    assert len(v.warnings) == 2


def test_verdict_general_matches_direct(baseline):
    mom = cost(0.02, 3.0, 0.012, 0.6, "mom")
    g = verdict_general(baseline, mom)
    direct = predict_max(mom).max_throughput >= predict_max(baseline).max_throughput
    assert g.beneficial == direct
    assert (g.inequality_lhs <= g.inequality_rhs) == direct
    assert not g.inequality_fallback


def test_verdict_general_identical_models(baseline):
    g = verdict_general(baseline, baseline)
    assert g.beneficial
    assert g.inequality_lhs == pytest.approx(g.inequality_rhs)


def test_verdict_general_fallback(baseline):
    g = verdict_general(baseline, cost(0.02, 2.0, 0.2, 0.5, "mom"))
    assert g.inequality_fallback and not g.beneficial


def test_fragmented_example(baseline, mom_b):
    v = verdict_fragmented(baseline, mom_b, FragmentationConfig(0.9, 0.8))
    assert v.inequality_lhs == pytest.approx(512.0, rel=1e-4)
    assert v.inequality_rhs == pytest.approx(267.84, rel=1e-4)
    assert v.beneficial
    assert v.mom_prediction.max_throughput == pytest.approx(77.364, abs=5e-4)
    assert v.baseline_prediction.max_throughput == pytest.approx(71.264, abs=5e-4)


def test_fragmented_exact_condition(baseline, mom_b):
    # score/point carry the exact condition, including when only one side fragments
    for frag in (FragmentationConfig(0.9, 0.8), FragmentationConfig(1.0, 0.5), FragmentationConfig(0.6, 1.0)):
        v = verdict_fragmented(baseline, mom_b, frag)
        assert (v.score >= v.point) == v.beneficial


def test_fragmented_infeasible(baseline, mom_b):
    with pytest.raises(InfeasibleError):
        verdict_fragmented(baseline, mom_b, FragmentationConfig(1.0, 0.1))


@pytest.mark.parametrize("f", [0.0, -0.1, 1.01])
def test_fragmentation_config_range(f):
    with pytest.raises(ValueError):
        FragmentationConfig(f, 1.0)


# ---- properties --------------------------------------------------------------

coef = st.fixed_dictionaries({
    "alpha": st.floats(1e-3, 1.0, **pos), "beta": st.floats(0.0, 12.0, **pos),
    "gamma": st.floats(1e-4, 0.1, **pos), "delta": st.floats(1e-3, 5.0, **pos)})


@settings(max_examples=300, deadline=None)
@given(c=coef, b1=st.floats(1, 1e4, **pos), b2=st.floats(1, 1e4, **pos))
def test_throughput_monotone_and_concave(c, b1, b2):
    assume(b1 < b2)
    m = cost(**c)
    assert throughput_at(m, b1) < throughput_at(m, b2)
    assert throughput_derivative(m, b1) > throughput_derivative(m, b2)


@settings(max_examples=3000, deadline=None)
@given(c=coef, b=st.floats(1, 1e4, **pos))
def test_derivative_matches_finite_difference(c, b):
    m = cost(**c)
    assert throughput_derivative(m, b) == pytest.approx(central_difference(m, b, h=None), rel=1e-6)


@st.composite
def shared_pair(draw):
    beta = draw(st.floats(0.0, 14.0, **pos))
    delta = draw(st.floats(1e-3, 5.0, **pos))
    a0 = draw(st.floats(1e-3, 1.0, **pos))
    g0 = draw(st.floats(1e-4, 0.1, **pos))
    am = a0 * draw(st.floats(0.01, 0.999, **pos))
    gm = g0 * (1 + draw(st.floats(1e-3, 5.0, **pos)))
    return cost(a0, beta, g0, delta), cost(am, beta, gm, delta, "mom")


@settings(max_examples=1000, deadline=None)
@given(pair=shared_pair())
def test_score_point_sign_equivalence(pair):
    b, m = pair
    assume(not is_infeasible(b) and not is_infeasible(m))
    score, _ = papaya_score(b, m)
    direct = predict_max(m).max_throughput >= predict_max(b).max_throughput
    assume(abs(score / papaya_point(b) - 1) > 1e-12)
    assert (score >= papaya_point(b)) == direct
    assert verdict(b, m).beneficial == direct


@settings(max_examples=300, deadline=None)
@given(pair=shared_pair(), shrink=st.floats(0.1, 0.99))
def test_co_monotone_in_mom_alpha(pair, shrink):
    b, m = pair
    assume(not is_infeasible(b) and not is_infeasible(m))
    m2 = cost(m.alpha * shrink, m.beta, m.gamma, m.delta, "mom")
    assert papaya_score(b, m2)[0] > papaya_score(b, m)[0]
    assert predict_max(m2).max_throughput > predict_max(m).max_throughput


@settings(max_examples=300, deadline=None)
@given(pair=shared_pair(), shrink=st.floats(0.01, 0.99))
def test_co_monotone_in_mom_gamma(pair, shrink):
    b, m = pair
    assume(not is_infeasible(b) and not is_infeasible(m))
    gm = b.gamma + (m.gamma - b.gamma) * shrink
    m2 = cost(m.alpha, m.beta, gm, m.delta, "mom")
    assert papaya_score(b, m2)[0] > papaya_score(b, m)[0]
    assert predict_max(m2).max_throughput > predict_max(m).max_throughput


@settings(max_examples=500, deadline=None)
@given(c0=coef, cm=coef)
def test_fragmented_unit_ratio_equals_plain(c0, cm):
    b, m = cost(**c0), cost(**cm, method="mom")
    assume(not (is_infeasible(b) and is_infeasible(m)))
    assume(b.beta < b.device_memory)
    assert verdict_fragmented(b, m, FragmentationConfig(1.0, 1.0)).core() == verdict(b, m).core()


@settings(max_examples=500, deadline=None)
@given(c0=coef, cm=coef)
def test_beneficial_iff_direct_comparison(c0, cm):
    b, m = cost(**c0), cost(**cm, method="mom")
    assume(not is_infeasible(b) and not is_infeasible(m))
    v = verdict(b, m)
    assert v.beneficial == (v.mom_prediction.max_throughput >= v.baseline_prediction.max_throughput)
    assert verdict_general(b, m).beneficial == v.beneficial
