"""
Test the nonexistence conditions on the goose wake and on test benefits
"""
import numpy as np
import pytest

from echelon.agents import condition_agent
from echelon.agents.condition_agent import (
    ConditionAgent,
    check_ce_condition,
    check_propositions_n3,
    check_theorem1,
    check_theorem2,
    check_theorem3,
    compute_epsilon,
    compute_Q,
    default_beta_lower,
    lemma1_bound,
    lemma1_check,
)
from echelon.agents.state_schema import IntervalSpec, Verdict, classify_margin
from echelon.tools.benefit import ConstantBenefit, SeparableTestBenefit
from echelon.tools.search_1d import GridMaximum, grid_maximize


def test_classify_margin():
    assert classify_margin(1e-6, 1e-8) == Verdict.HOLDS
    assert classify_margin(-1e-6, 1e-8) == Verdict.FAILS
    assert classify_margin(1e-8, 1e-8) == Verdict.INCONCLUSIVE
    assert classify_margin(0.0, 1e-8) == Verdict.INCONCLUSIVE
    assert [v.exit_code for v in Verdict] == [0, 1, 2]


def test_interval_spec_accessors(narrow):
    assert narrow.P == (-3.5, -0.5)
    assert narrow.minus_P == (0.5, 3.5)
    assert narrow.two_P == (-7.0, -1.0)
    assert narrow.theorem3_interval(2.601) == (-7.0, -5.202)
    assert narrow.contains(-2.0) and not narrow.contains(-0.4)
    with pytest.raises(ValueError):
        IntervalSpec(alpha_s=4.0, alpha_l=3.0)


# ==================== epsilon and Q ====================

def test_epsilon_of_constant_is_zero():
    assert compute_epsilon(ConstantBenefit(2.0), (-14.0, -5.0), 1.0) == 0.0


def test_epsilon_monotone_in_interval(wake, goose):
    rng = np.random.default_rng(5)
    for _ in range(5):
        lo, hi = np.sort(rng.uniform(-14.0, -0.5, size=2))
        inner_lo, inner_hi = np.sort(rng.uniform(lo, hi, size=2))
        outer = compute_epsilon(wake, (lo, hi), goose.beta)
        inner = compute_epsilon(wake, (inner_lo, inner_hi), goose.beta)
        assert inner <= outer * (1 + 1e-9) + 1e-15


def test_epsilon_rejects_interval_through_origin(wake, goose):
    with pytest.raises(ValueError):
        compute_epsilon(wake, (-1.0, 1.0), goose.beta)


def test_Q_on_shifted_interval(wake, goose, shifted):
    Q = compute_Q(wake, shifted.two_P, shifted.P, goose.beta)
    assert len(Q) == 1
    lo, hi = Q[0]
    assert lo == pytest.approx(-2.78, abs=0.02)
    assert hi == pytest.approx(-2.5, abs=0.02)


def test_Q_empty_without_flat_point(wake, goose):
    """epsilon = 0 and the peak outside P: nothing is flat enough"""
    assert compute_Q(wake, (-14.0, -5.0), (-2.0, -0.5), goose.beta, epsilon=0.0) == []


def test_Q_inside_P_and_growing_with_epsilon(wake, goose, shifted):
    small = compute_Q(wake, shifted.two_P, shifted.P, goose.beta, epsilon=1e-4)
    large = compute_Q(wake, shifted.two_P, shifted.P, goose.beta, epsilon=1e-3)
    for lo, hi in small + large:
        assert shifted.P[0] <= lo <= hi <= shifted.P[1]
    for lo, hi in small:
        assert any(L <= lo and hi <= H for L, H in large)
    assert sum(h - l for l, h in large) >= sum(h - l for l, h in small)


def test_Q_keeps_anchor_between_grid_points(wake, goose, shifted):
    peak = -2.601
    Q = compute_Q(wake, shifted.two_P, shifted.P, goose.beta, epsilon=0.0, anchors=[peak])
    assert Q == [(peak, peak)]


# ==================== Theorem 1 / Proposition 1 ====================

def test_theorem1_narrow_fails_for_goose(wake, goose, narrow):
    """P = [-3.5, -0.5] reaches behind the peak, where f_x(., -beta) outgrows the slope ahead"""
    report = check_theorem1(wake, narrow, goose.beta)
    assert report.verdict == Verdict.FAILS
    assert report.delta2 == pytest.approx(-0.0027410, abs=2e-6)
    assert report.delta1 == pytest.approx(0.0027907, abs=2e-6)
    assert report.margin == pytest.approx(-4.97e-5, abs=2e-6)
    assert report.margin == pytest.approx(-report.delta1 - report.delta2, rel=1e-12)


def test_theorem1_holds_in_front_of_peak(wake, goose):
    """alpha_l below the peak distance: f_x(., -beta) < 0 on both P and -P"""
    report = check_theorem1(wake, IntervalSpec(alpha_s=0.5, alpha_l=2.5), goose.beta)
    assert report.verdict == Verdict.HOLDS
    assert report.delta1 < 0
    assert report.margin > 2e-3


def test_theorem1_breaks_when_interval_grows(wake, goose):
    report = check_theorem1(wake, IntervalSpec(alpha_s=0.5, alpha_l=3.6), goose.beta)
    assert report.verdict != Verdict.HOLDS


def test_theorem1_quadratic_never_holds():
    """g = x^2: the slope on -P dominates the slope on P"""
    report = check_theorem1(SeparableTestBenefit('quadratic'), IntervalSpec(alpha_s=0.5, alpha_l=3.5), 1.0)
    assert report.verdict != Verdict.HOLDS
    assert report.delta1 == pytest.approx(-1.0)
    assert report.delta2 == pytest.approx(7.0)


def test_theorem1_stable_under_grid_refinement(wake, goose, narrow):
    coarse = check_theorem1(wake, narrow, goose.beta, step=1e-3 * goose.b)
    fine = check_theorem1(wake, narrow, goose.beta, step=1e-4 * goose.b)
    assert abs(coarse.delta1 - fine.delta1) < 1e-8
    assert abs(coarse.delta2 - fine.delta2) < 1e-8
    assert coarse.verdict == fine.verdict


def test_proposition1_subtracts_epsilon(wake, goose, narrow):
    theorem = check_theorem1(wake, narrow, goose.beta)
    prop = check_propositions_n3(wake, narrow, goose.beta, 1)
    epsilon = compute_epsilon(wake, narrow.two_P, goose.beta)
    assert prop.check == 'prop1'
    assert prop.epsilon_I == pytest.approx(epsilon, rel=1e-12)
    assert prop.margin == pytest.approx(theorem.margin - epsilon, rel=1e-12, abs=1e-15)
    assert prop.details['theorem1_margin'] == theorem.margin


def test_unknown_proposition(wake, goose, narrow):
    with pytest.raises(ValueError):
        check_propositions_n3(wake, narrow, goose.beta, 4)


# ==================== Theorem 2 / 3, Propositions 2 / 3 ====================

def test_theorem2_shifted_holds(wake, goose, shifted):
    report = check_theorem2(wake, shifted, goose.beta)
    assert report.verdict == Verdict.HOLDS
    assert report.alpha == pytest.approx(2.5877, abs=1e-3)
    assert [a.name for a in report.assumptions] == ['2(a)', '2(b)']
    assert all(a.holds for a in report.assumptions)
    assert report.delta3 <= -report.delta1
    assert report.epsilon_interval == shifted.two_P


def test_theorem2_fails_for_small_alpha_s(wake, goose):
    report = check_theorem2(wake, IntervalSpec(alpha_s=0.5, alpha_l=7.0), goose.beta)
    assert report.verdict != Verdict.HOLDS


def test_theorem2_requires_peak_in_P(wake, goose):
    report = check_theorem2(wake, IntervalSpec(alpha_s=0.5, alpha_l=2.0), goose.beta)
    assert report.verdict == Verdict.INCONCLUSIVE
    assert report.reason == "Assumption 2(b) violated"
    assert report.margin is None


def test_theorem2_with_zero_epsilon(wake, goose, shifted):
    report = check_theorem2(wake, shifted, goose.beta, epsilon_override=0.0)
    alpha = report.alpha
    assert report.q_interval == [(-alpha, -alpha)]
    assert report.delta3 == pytest.approx(float(wake.deriv_x(alpha, -goose.beta)), rel=1e-12)


def test_theorem3_wide_holds(wake, goose, wide):
    report = check_theorem3(wake, wide, goose.beta)
    assert report.verdict == Verdict.HOLDS
    assert [a.name for a in report.assumptions] == ['2(a)', '2(b)', '3']
    assert report.epsilon_interval == pytest.approx((-28.0, -2 * report.alpha))


def test_theorem3_nested_in_theorem2(wake, goose, shifted):
    thm2 = check_theorem2(wake, shifted, goose.beta)
    thm3 = check_theorem3(wake, shifted, goose.beta)
    assert thm3.epsilon_I <= thm2.epsilon_I * (1 + 1e-9) + 1e-15
    if thm3.delta3 is not None:
        assert thm3.delta3 <= thm2.delta3 + 1e-12


def test_delta3_bounded_by_delta2(wake, goose, shifted):
    """Q(I) inside P, so the maximum over -Q(I) cannot exceed the one over -P"""
    delta2 = grid_maximize(lambda xs: wake.deriv_x(xs, -goose.beta), *shifted.minus_P, 1e-3 * goose.b).value
    thm2 = check_theorem2(wake, shifted, goose.beta)
    thm3 = check_theorem3(wake, shifted, goose.beta)
    assert thm3.delta3 <= thm2.delta3 + 1e-12
    assert thm2.delta3 <= delta2 + 1e-9


@pytest.mark.parametrize('check', [check_theorem2, check_theorem3])
def test_q_condition_stable_under_grid_refinement(wake, goose, shifted, check):
    coarse = check(wake, shifted, goose.beta, step=1e-3 * goose.b)
    fine = check(wake, shifted, goose.beta, step=1e-4 * goose.b)
    assert abs(coarse.epsilon_I - fine.epsilon_I) < coarse.tolerance
    assert abs(coarse.delta3 - fine.delta3) < coarse.tolerance
    assert coarse.verdict == fine.verdict


def test_theorem3_gate_on_assumption3():
    """Single bump at -1: f(., -2 beta) rises on [-2, -1]"""
    f = SeparableTestBenefit('shifted_gaussian', offset=1.0, width=2.0)
    report = check_theorem3(f, IntervalSpec(alpha_s=0.5, alpha_l=3.0), 1.0)
    assert report.verdict == Verdict.INCONCLUSIVE
    assert report.reason == "Assumption 3 violated"
    assert report.assumptions[0].holds


def test_proposition2_adds_epsilon_penalty(wake, goose, shifted):
    thm2 = check_theorem2(wake, shifted, goose.beta)
    prop2 = check_propositions_n3(wake, shifted, goose.beta, 2)
    assert prop2.check == 'prop2'
    assert prop2.margin == pytest.approx(thm2.margin - thm2.epsilon_I, rel=1e-12, abs=1e-15)


def test_proposition3_matches_theorem3(wake, goose, wide):
    thm3 = check_theorem3(wake, wide, goose.beta)
    prop3 = check_propositions_n3(wake, wide, goose.beta, 3)
    assert prop3.verdict == Verdict.HOLDS
    assert prop3.margin == thm3.margin


# ==================== Cooperative condition ====================

def test_ce_condition_constant_is_inconclusive(wide):
    report = check_ce_condition(ConstantBenefit(1.0), wide, 1.0, 0.9)
    assert report.verdict == Verdict.INCONCLUSIVE
    assert report.margin == 0.0
    assert report.reason == "paired slope vanishes on the sampled domain"


@pytest.mark.parametrize('scale, verdict', [(1e-3, Verdict.HOLDS), (1e-12, Verdict.INCONCLUSIVE)])
def test_ce_condition_margin_is_smallest_slope(wide, scale, verdict):
    f = SeparableTestBenefit('quadratic', h=lambda y: scale * np.ones_like(y))
    report = check_ce_condition(f, wide, 1.0, 0.9, tol=1e-8)
    assert report.margin == report.details['min_abs_paired_slope']
    assert report.verdict == verdict == classify_margin(report.margin, 1e-8)


def test_ce_condition_wake_uses_closed_bound(wake, goose, wide):
    report = check_ce_condition(wake, wide, goose.beta, default_beta_lower(goose))
    assert report.verdict == Verdict.HOLDS
    assert report.check == 'ce'
    assert report.details['path'] == 'lemma1'


def test_ce_condition_even_gaussian():
    """g even and h even: the paired slope is 2 g'(x) h(y) while the literal sum cancels"""
    f = SeparableTestBenefit('gaussian', width=5.0)
    report = check_ce_condition(f, IntervalSpec(alpha_s=0.5, alpha_l=14.0), 1.0, 0.9)
    assert report.verdict == Verdict.HOLDS
    assert report.reason == "holds on sampled domain"
    assert report.details['path'] == 'sampled'
    assert report.details['min_abs_literal_sum'] == pytest.approx(0.0, abs=1e-15)


def test_ce_condition_rejects_beta_lower_above_beta(wide):
    with pytest.raises(ValueError):
        check_ce_condition(ConstantBenefit(), wide, 1.0, 1.5)


def test_lemma1_bound(goose):
    assert lemma1_bound(goose) / goose.b == pytest.approx(14945, abs=1)


def test_lemma1_holds_inside_bound(goose):
    report = lemma1_check(goose, 14.0, default_beta_lower(goose))
    assert report.verdict == Verdict.HOLDS
    assert report.details['g_max_sampled'] < 0
    assert report.details['two_ab'] == pytest.approx(2 * goose.a * goose.b)


def test_lemma1_fails_beyond_bound(goose):
    report = lemma1_check(goose, lemma1_bound(goose) + goose.b, default_beta_lower(goose))
    assert report.verdict == Verdict.FAILS


@pytest.mark.parametrize('g_level, verdict', [(1e-3, Verdict.FAILS), (1e-12, Verdict.INCONCLUSIVE)])
def test_lemma1_sampled_g_sets_margin(goose, monkeypatch, g_level, verdict):
    monkeypatch.setattr(condition_agent, 'g_of_R', lambda R, y, params: np.full(np.shape(R), g_level))
    report = lemma1_check(goose, 14.0, default_beta_lower(goose), tol=1e-8)
    assert report.details['bound_margin'] > 0
    assert report.margin == -g_level
    assert report.verdict == verdict
    assert (report.verdict == Verdict.INCONCLUSIVE) == (abs(report.margin) <= 1e-8)


def test_lemma1_argument_checks(goose):
    with pytest.raises(ValueError):
        lemma1_check(goose, 14.0, goose.a + goose.b)
    with pytest.raises(ValueError):
        lemma1_check(goose, 14.0, 0.5)
    with pytest.raises(ValueError):
        lemma1_check(goose, 0.0, default_beta_lower(goose))


# ==================== Agent ====================

def test_condition_agent_envelope(wake, goose, narrow):
    agent = ConditionAgent()
    envelope = agent.run({
        'task': 'thm1',
        'params': {'benefit': wake, 'interval': narrow, 'beta': goose.beta},
    })
    assert envelope['status'] == 'success'
    assert envelope['result']['report'].verdict == Verdict.FAILS

    peak = agent.run({'task': 'peak', 'params': {'benefit': wake, 'beta': goose.beta}})
    assert peak['result']['peak'].x == pytest.approx(-2.5877, abs=1e-3)


def test_condition_agent_rejects_bad_input(wake, goose):
    agent = ConditionAgent()
    assert agent.run({'task': 'thm9', 'params': {'benefit': wake}})['status'] == 'failed'
    assert agent.run({'task': 'thm1', 'params': {}})['status'] == 'failed'

    lemma = agent.run({
        'task': 'lemma1',
        'params': {'benefit': ConstantBenefit(), 'interval': IntervalSpec(alpha_s=0.5, alpha_l=14.0),
                   'beta': 1.0, 'beta_lower': 0.9},
    })
    assert lemma['status'] == 'failed'
    assert agent.get_metrics()['failed'] == 3


def test_condition_agent_reuses_upstream_peak(wake, goose, shifted):
    agent = ConditionAgent()
    step = 1e-3 * goose.b
    found = agent.run({'task': 'peak', 'params': {'benefit': wake, 'beta': goose.beta, 'step': step}})
    peak = found['result']['peak']
    nudged = GridMaximum(x=peak.x + 0.25 * step, value=peak.value, on_boundary=False, step=step)
    params = {'benefit': wake, 'interval': shifted, 'beta': goose.beta, 'step': step}

    reused = agent.run({'task': 'thm2', 'params': params,
                        'dependency_results': {1: {**found, 'result': {'peak': nudged}}}})
    assert reused['result']['report'].alpha == -nudged.x

    coarse = GridMaximum(x=nudged.x, value=peak.value, on_boundary=False, step=10 * step)
    fresh = agent.run({'task': 'thm2', 'params': params,
                       'dependency_results': {1: {**found, 'result': {'peak': coarse}}}})
    assert fresh['result']['report'].alpha == -peak.x
