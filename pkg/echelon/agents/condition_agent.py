"""
Condition Agent
Evaluates the nonexistence conditions for equilibria of interest

Capabilities:
- epsilon_I and Q(I)
- Theorems 1-3 (n = 2) and their n >= 3 counterparts
- The cooperative condition |d/dx [f(x, y) + f(-x, -y)]| > 0
- The closed-form alpha_l bound for the wake benefit

Every maximum is a grid scan refined by golden section; every strict
inequality is classified against an explicit tolerance.
"""
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from echelon.config.settings import settings
from echelon.tools.benefit import BenefitFunction, DerivativeDomainError
from echelon.tools.search_1d import GridMaximum, grid_maximize, grid_points
from echelon.tools.wake import (
    WakeBenefit,
    WakeParams,
    find_benefit_peak,
    g_of_R,
    g_positive_root,
)
from .base_agent import BaseAgent
from .state_schema import (
    AssumptionReport,
    ConditionReport,
    IntervalSpec,
    Verdict,
    classify_margin,
)

Interval = Tuple[float, float]


def benefit_scale(f: BenefitFunction, beta: float) -> float:
    """Natural length unit: b for the wake model, beta otherwise"""
    return f.params.b if isinstance(f, WakeBenefit) else beta


def default_step(f: BenefitFunction, beta: float) -> float:
    return settings.GRID_FRACTION * benefit_scale(f, beta)


def _require_nonzero(interval: Interval):
    lo, hi = interval
    if lo <= 0 <= hi:
        raise DerivativeDomainError(f"interval [{lo}, {hi}] contains x = 0")


def max_derivative(f: BenefitFunction, interval: Interval, y: float, step: float) -> GridMaximum:
    """max over the interval of f_x(x, y)"""
    _require_nonzero(interval)
    return grid_maximize(lambda xs: f.deriv_x(xs, y), interval[0], interval[1], step)


def compute_epsilon(
    f: BenefitFunction,
    I: Interval,
    beta: float,
    step: Optional[float] = None,
) -> float:
    """epsilon_I = max over I of |f_x(x, -2 beta)|"""
    step = step or default_step(f, beta)
    _require_nonzero(I)
    peak = grid_maximize(lambda xs: np.abs(f.deriv_x(xs, -2 * beta)), I[0], I[1], step)
    return peak.value


def _merge(intervals: List[Interval]) -> List[Interval]:
    merged: List[Interval] = []
    for lo, hi in sorted(intervals):
        if merged and lo <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
        else:
            merged.append((lo, hi))
    return merged


def compute_Q(
    f: BenefitFunction,
    I: Interval,
    P: Interval,
    beta: float,
    step: Optional[float] = None,
    epsilon: Optional[float] = None,
    anchors: Sequence[float] = (),
) -> List[Interval]:
    """
    Q(I) = {x in P : |f_x(x, -beta)| <= epsilon_I}, as a union of closed intervals.

    Args:
        epsilon: use this level instead of computing epsilon_I
        anchors: points known to have f_x(x, -beta) = 0 (the benefit peak);
                 kept even when the grid straddles them

    Returns:
        Sorted disjoint intervals; empty list when Q(I) is empty
    """
    step = step or default_step(f, beta)
    _require_nonzero(P)
    eps = compute_epsilon(f, I, beta, step) if epsilon is None else epsilon

    def excess(x):
        return np.abs(f.deriv_x(x, -beta)) - eps

    xs = grid_points(P[0], P[1], step)
    inside = excess(xs) <= 0
    last = len(xs) - 1

    def scalar(x: float) -> float:
        return float(excess(np.asarray([x]))[0])

    intervals: List[Interval] = []
    edges = np.diff(np.concatenate(([0], inside.astype(int), [0])))
    for start, stop in zip(np.flatnonzero(edges == 1), np.flatnonzero(edges == -1) - 1):
        lo = P[0] if start == 0 else brentq(scalar, xs[start - 1], xs[start], xtol=1e-13)
        hi = P[1] if stop == last else brentq(scalar, xs[stop], xs[stop + 1], xtol=1e-13)
        intervals.append((float(lo), float(hi)))

    for anchor in anchors:
        if P[0] <= anchor <= P[1]:
            intervals.append((float(anchor), float(anchor)))

    return _merge(intervals)


def _max_over_reflected(f: BenefitFunction, Q: List[Interval], beta: float, step: float) -> Optional[GridMaximum]:
    """delta3 = max over -Q of f_x(x, -beta); None when Q is empty"""
    best: Optional[GridMaximum] = None
    for lo, hi in Q:
        candidate = max_derivative(f, (-hi, -lo), -beta, step)
        if best is None or candidate.value > best.value:
            best = candidate
    return best


# ==================== Assumption verification ====================

def verify_assumption2(
    f: BenefitFunction,
    beta: float,
    P: Interval,
    step: float,
    window: Optional[float] = None,
    peak: Optional[GridMaximum] = None,
) -> Tuple[Optional[float], List[AssumptionReport]]:
    """
    Locate the peak -alpha of f(., -beta) and check Assumption 2.

    A peak already found by find_benefit_peak at the same step may be passed in.

    Returns:
        (alpha or None, [report for 2(a), report for 2(b)])
    """
    scale = benefit_scale(f, beta)
    half_width = (window or settings.ASSUMPTION_WINDOW) * scale
    exclusion = 0.01 * scale

    if peak is None:
        peak = find_benefit_peak(f, beta, step=step)
    alpha = -peak.x

    if peak.on_boundary:
        reports = [
            AssumptionReport(
                name='2(a)', holds=False, detail=f"maximum of f(., -beta) on the search boundary at {peak.x:.6g}"
            ),
            AssumptionReport(name='2(b)', holds=False, detail="peak not located"),
        ]
        return None, reports

    xs = grid_points(-half_width, half_width, step)
    keep = (np.abs(xs) >= exclusion) & (np.abs(xs + alpha) >= 2 * step)
    xs = xs[keep]
    slope = f.deriv_x(xs, -beta)
    rising = slope[xs < -alpha]
    falling = slope[xs > -alpha]
    worst = min(
        float(np.min(rising)) if rising.size else np.inf,
        float(np.min(-falling)) if falling.size else np.inf,
    )
    monotone = worst > 0

    positive = xs[xs > 0]
    dominated = bool(np.all(f.value(positive, -beta) <= peak.value)) if positive.size else True

    detail = f"peak at x = {peak.x:.6g}; f_x(., -beta) {'is' if monotone else 'is not'} strictly monotone on each side"
    if not dominated:
        detail += "; a larger value exists for x > 0"

    reports = [
        AssumptionReport(
            name='2(a)',
            holds=monotone and dominated,
            window=(-half_width, half_width),
            detail=detail,
            worst_value=worst,
        ),
        AssumptionReport(
            name='2(b)',
            holds=P[0] <= -alpha <= P[1],
            window=P,
            detail=f"-alpha = {-alpha:.6g} {'in' if P[0] <= -alpha <= P[1] else 'outside'} P",
        ),
    ]
    return alpha, reports


def verify_assumption3(
    f: BenefitFunction,
    beta: float,
    alpha: float,
    step: float,
    window: Optional[float] = None,
) -> AssumptionReport:
    """f(., -2 beta) strictly decreasing for x >= -2 alpha, checked on the window"""
    scale = benefit_scale(f, beta)
    hi = (window or settings.ASSUMPTION_WINDOW) * scale
    xs = grid_points(-2 * alpha, hi, step)
    xs = xs[np.abs(xs) >= 0.01 * scale]
    slope = f.deriv_x(xs, -2 * beta)
    worst = float(np.max(slope))
    return AssumptionReport(
        name='3',
        holds=worst < 0,
        window=(-2 * alpha, hi),
        detail=f"max of f_x(., -2 beta) on the window is {worst:.6g}",
        worst_value=worst,
    )


def _failed_assumption(assumptions: List[AssumptionReport]) -> Optional[str]:
    for report in assumptions:
        if not report.holds:
            return f"Assumption {report.name} violated"
    return None


# ==================== Theorem checks ====================

def _resolve(f: BenefitFunction, beta: float, step: Optional[float], tol: Optional[float]):
    return step or default_step(f, beta), settings.TOLERANCE if tol is None else tol


def check_theorem1(
    f: BenefitFunction,
    P: IntervalSpec,
    beta: float,
    step: Optional[float] = None,
    tol: Optional[float] = None,
    check: str = 'thm1',
) -> ConditionReport:
    """max over -P of f_x(x, -beta) < -max over P of f_x(x, -beta)"""
    step, tol = _resolve(f, beta, step, tol)
    delta1 = max_derivative(f, P.P, -beta, step)
    delta2 = max_derivative(f, P.minus_P, -beta, step)
    margin = -delta1.value - delta2.value
    return ConditionReport(
        check=check,
        verdict=classify_margin(margin, tol),
        margin=margin,
        tolerance=tol,
        grid_resolution=step,
        interval=P.P,
        beta=beta,
        delta1=delta1.value,
        delta2=delta2.value,
        details={'delta1_at': delta1.x, 'delta2_at': delta2.x},
    )


def _q_condition(
    f: BenefitFunction,
    P: IntervalSpec,
    beta: float,
    I: Interval,
    alpha: float,
    step: float,
    tol: float,
    epsilon_override: Optional[float],
    epsilon_penalty: float,
) -> Dict[str, Any]:
    """Shared core of Theorems 2, 3 and Propositions 2, 3"""
    delta1 = max_derivative(f, P.P, -beta, step)
    epsilon = compute_epsilon(f, I, beta, step) if epsilon_override is None else epsilon_override
    Q = compute_Q(f, I, P.P, beta, step, epsilon=epsilon, anchors=[-alpha])
    delta3 = _max_over_reflected(f, Q, beta, step)

    fields: Dict[str, Any] = {
        'delta1': delta1.value,
        'epsilon_I': epsilon,
        'epsilon_interval': I,
        'q_interval': Q,
        'alpha': alpha,
    }
    if delta3 is None:
        fields.update(verdict=Verdict.HOLDS, reason="Q(I) empty (trivial case)")
        return fields

    margin = -delta1.value - epsilon_penalty - delta3.value
    fields.update(
        delta3=delta3.value,
        margin=margin,
        verdict=classify_margin(margin, tol),
        details={'delta1_at': delta1.x, 'delta3_at': delta3.x},
    )
    return fields


def check_theorem2(
    f: BenefitFunction,
    P: IntervalSpec,
    beta: float,
    step: Optional[float] = None,
    tol: Optional[float] = None,
    epsilon_override: Optional[float] = None,
    check: str = 'thm2',
    epsilon_penalty: bool = False,
    peak: Optional[GridMaximum] = None,
) -> ConditionReport:
    """max over -Q(2P) of f_x(x, -beta) < -max over P of f_x(x, -beta)"""
    step, tol = _resolve(f, beta, step, tol)
    alpha, assumptions = verify_assumption2(f, beta, P.P, step, peak=peak)
    base = dict(check=check, tolerance=tol, grid_resolution=step, interval=P.P, beta=beta, assumptions=assumptions)

    failure = _failed_assumption(assumptions)
    if failure:
        return ConditionReport(verdict=Verdict.INCONCLUSIVE, reason=failure, alpha=alpha, **base)

    I = P.two_P
    penalty = 0.0
    if epsilon_penalty:
        penalty = compute_epsilon(f, I, beta, step) if epsilon_override is None else epsilon_override
    fields = _q_condition(f, P, beta, I, alpha, step, tol, epsilon_override, penalty)
    return ConditionReport(**base, **fields)


def check_theorem3(
    f: BenefitFunction,
    P: IntervalSpec,
    beta: float,
    step: Optional[float] = None,
    tol: Optional[float] = None,
    check: str = 'thm3',
    peak: Optional[GridMaximum] = None,
) -> ConditionReport:
    """Condition of Theorem 2 with I = [-2 alpha_l, -2 alpha], under Assumptions 2 and 3"""
    step, tol = _resolve(f, beta, step, tol)
    alpha, assumptions = verify_assumption2(f, beta, P.P, step, peak=peak)
    if alpha is not None:
        assumptions.append(verify_assumption3(f, beta, alpha, step))
    base = dict(check=check, tolerance=tol, grid_resolution=step, interval=P.P, beta=beta, assumptions=assumptions)

    failure = _failed_assumption(assumptions)
    if failure:
        return ConditionReport(verdict=Verdict.INCONCLUSIVE, reason=failure, alpha=alpha, **base)

    I = P.theorem3_interval(alpha)
    fields = _q_condition(f, P, beta, I, alpha, step, tol, None, 0.0)
    return ConditionReport(**base, **fields)


def check_propositions_n3(
    f: BenefitFunction,
    P: IntervalSpec,
    beta: float,
    which: int,
    step: Optional[float] = None,
    tol: Optional[float] = None,
    peak: Optional[GridMaximum] = None,
) -> ConditionReport:
    """
    n >= 3 counterparts.

    1: delta2 < -delta1 - epsilon_2P
    2: delta3 over -Q(2P) < -delta1 - epsilon_2P   (Assumption 2)
    3: delta3 over -Q([-2 alpha_l, -2 alpha]) < -delta1   (Assumptions 2, 3)
    """
    step, tol = _resolve(f, beta, step, tol)
    check = f'prop{which}'
    if which == 1:
        report = check_theorem1(f, P, beta, step, tol, check=check)
        epsilon = compute_epsilon(f, P.two_P, beta, step)
        margin = report.margin - epsilon
        return report.model_copy(update={
            'margin': margin,
            'verdict': classify_margin(margin, tol),
            'epsilon_I': epsilon,
            'epsilon_interval': P.two_P,
            'details': {**report.details, 'theorem1_margin': report.margin},
        })
    if which == 2:
        return check_theorem2(f, P, beta, step, tol, check=check, epsilon_penalty=True, peak=peak)
    if which == 3:
        return check_theorem3(f, P, beta, step, tol, check=check, peak=peak)
    raise ValueError(f"Unknown proposition: {which}")


# ==================== Cooperative condition ====================

def admissible_beta_lower(params: WakeParams) -> Interval:
    """Open interval (sqrt(a^2 + b^2), a + b) for the lateral lower bound"""
    return (float(np.hypot(params.a, params.b)), params.a + params.b)


def default_beta_lower(params: WakeParams) -> float:
    lo, hi = admissible_beta_lower(params)
    return 0.5 * (lo + hi)


def lemma1_bound(params: WakeParams) -> float:
    """Largest alpha_l for which the wake benefit meets the cooperative condition, (U / D_f)(2ab - r0^2)"""
    return params.U / params.D_f * (2 * params.a * params.b - params.r0 ** 2)


def lemma1_check(
    params: WakeParams,
    alpha_l: float,
    beta_lower: float,
    tol: Optional[float] = None,
    samples: int = 10_000,
    y_max_factor: float = 10.0,
) -> ConditionReport:
    """
    alpha_l <= (U / D_f)(2ab - r0^2), confirmed by g(R) < 0 on
    R in (r0^2, r0^2 + D_f alpha_l / U] and |y| in [beta_lower, y_max_factor * beta].

    Raises:
        ValueError: beta_lower outside (sqrt(a^2 + b^2), a + b), or alpha_l <= 0
    """
    tol = settings.TOLERANCE if tol is None else tol
    lo, hi = admissible_beta_lower(params)
    if not lo < beta_lower < hi:
        raise ValueError(f"beta_lower must lie in ({lo:.6g}, {hi:.6g}), got {beta_lower}")
    if alpha_l <= 0:
        raise ValueError("alpha_l must be positive")

    bound = lemma1_bound(params)
    margin = bound - alpha_l

    side = max(int(np.sqrt(samples)), 2)
    r0sq = params.r0 ** 2
    R = r0sq + params.D_f * alpha_l / params.U * np.linspace(0.0, 1.0, side + 1)[1:]
    ys = np.linspace(beta_lower, y_max_factor * params.beta, side)
    RR, YY = np.meshgrid(R, ys, indexing='ij')
    g = g_of_R(RR, YY, params)
    g_max = float(np.max(g))

    # a sampled g(R) >= 0 is a point where the paired slope is not negative
    reason = ''
    if g_max >= 0:
        margin = min(margin, -g_max)
        reason = f"g(R) = {g_max:.3g} >= 0 at a sampled point"
    verdict = classify_margin(margin, tol)

    return ConditionReport(
        check='lemma1',
        verdict=verdict,
        reason=reason,
        margin=margin,
        tolerance=tol,
        grid_resolution=float(R[1] - R[0]) if side > 1 else 0.0,
        interval=None,
        beta=params.beta,
        details={
            'alpha_l': alpha_l,
            'alpha_l_bound': bound,
            'alpha_l_bound_in_b': bound / params.b,
            'bound_margin': bound - alpha_l,
            'beta_lower': beta_lower,
            'g_max_sampled': g_max,
            'g_samples': int(g.size),
            'g_root_at_beta_lower': float(g_positive_root(beta_lower, params)),
            'two_ab': 2 * params.a * params.b,
        },
    )


def check_ce_condition(
    f: BenefitFunction,
    P: IntervalSpec,
    beta: float,
    beta_lower: float,
    step: Optional[float] = None,
    tol: Optional[float] = None,
    y_max_factor: float = 10.0,
    y_points: int = 200,
) -> ConditionReport:
    """
    |d/dx [f(x, y) + f(-x, -y)]| > 0 for x in (0, alpha_l], |y| in [beta_lower, y_max].

    The wake benefit takes the exact alpha_l-bound path; any other benefit is
    sampled on a grid (truncated at y_max_factor * beta) and the verdict
    reads "holds on sampled domain".
    """
    if beta_lower > beta:
        raise ValueError("beta_lower must not exceed beta")
    step, tol = _resolve(f, beta, step, tol)

    if isinstance(f, WakeBenefit):
        report = lemma1_check(f.params, P.alpha_l, beta_lower, tol, y_max_factor=y_max_factor)
        return report.model_copy(update={
            'check': 'ce',
            'interval': P.P,
            'details': {**report.details, 'path': 'lemma1'},
        })

    xs = grid_points(0.0, P.alpha_l, step)[1:]
    ys = np.linspace(beta_lower, y_max_factor * beta, y_points)
    XX, YY = np.meshgrid(xs, ys, indexing='ij')
    slope = f.paired_deriv_x(XX, YY)
    literal = f.deriv_x(XX, YY) + f.deriv_x(-XX, -YY)

    top, bottom = float(np.max(slope)), float(np.min(slope))
    smallest = float(np.min(np.abs(slope)))
    details = {
        'path': 'sampled',
        'x_range': (float(xs[0]), float(xs[-1])),
        'y_range': (float(ys[0]), float(ys[-1])),
        'min_abs_paired_slope': smallest,
        'min_abs_literal_sum': float(np.min(np.abs(literal))),
    }

    # A sign change forces a zero in between
    margin = smallest if top * bottom > 0 else -min(top, -bottom)
    verdict = classify_margin(margin, tol)
    if verdict == Verdict.HOLDS:
        reason = "holds on sampled domain"
    elif max(abs(top), abs(bottom)) <= tol:
        reason = "paired slope vanishes on the sampled domain"
    else:
        reason = ''
    return ConditionReport(
        check='ce',
        verdict=verdict,
        reason=reason,
        margin=margin,
        tolerance=tol,
        grid_resolution=step,
        interval=P.P,
        beta=beta,
        details=details,
    )


class ConditionAgent(BaseAgent):
    """
    Routes condition checks by task name

    Input: {'task': 'peak'|'thm1'|'thm2'|'thm3'|'prop1'|'prop2'|'prop3'|'ce'|'lemma1',
            'params': {'benefit', 'interval', 'beta', 'step', 'tol', 'beta_lower'},
            'dependency_results': optional, a 'peak' result is reused by the Q-based checks}
    """

    TASKS = ('peak', 'thm1', 'thm2', 'thm3', 'prop1', 'prop2', 'prop3', 'ce', 'lemma1')

    def __init__(self, config: Optional[Dict] = None):
        super().__init__("condition", config)

    def validate_input(self, input_data: Dict[str, Any]) -> bool:
        """Validate we have a known task and its benefit"""
        return (
            isinstance(input_data, dict) and
            input_data.get('task') in self.TASKS and
            isinstance(input_data.get('params', {}).get('benefit'), BenefitFunction)
        )

    def execute(self, input_data: Dict[str, Any]) -> Dict[str, Any]:
        """Route to the requested check"""
        task = input_data['task']
        params = input_data['params']
        f = params['benefit']
        P = params.get('interval')
        beta = params['beta']
        step = params.get('step')
        tol = params.get('tol')

        if task == 'peak':
            peak = find_benefit_peak(f, beta, step=step)
            self.logger.info(f"benefit peak at x = {peak.x:.6g} (alpha = {-peak.x:.6g})")
            return {'peak': peak}
        peak = self._dependency_peak(input_data)
        if task == 'thm1':
            report = check_theorem1(f, P, beta, step, tol)
        elif task == 'thm2':
            report = check_theorem2(f, P, beta, step, tol, peak=peak)
        elif task == 'thm3':
            report = check_theorem3(f, P, beta, step, tol, peak=peak)
        elif task.startswith('prop'):
            report = check_propositions_n3(f, P, beta, int(task[-1]), step, tol, peak=peak)
        elif task == 'ce':
            report = check_ce_condition(
                f, P, beta, params['beta_lower'], step, tol,
                y_max_factor=params.get('y_max_factor', 10.0),
            )
        else:
            if not isinstance(f, WakeBenefit):
                raise ValueError("lemma1 applies to the wake benefit only")
            report = lemma1_check(f.params, P.alpha_l, params['beta_lower'], tol)
            report = report.model_copy(update={'interval': P.P})

        self.logger.info(f"{task}: {report.verdict.value} (margin {report.margin})")
        return {'report': report}

    def _dependency_peak(self, input_data: Dict[str, Any]) -> Optional[GridMaximum]:
        """Peak located by an upstream 'peak' step, reused when its grid is no coarser"""
        step = input_data['params'].get('step')
        for result in input_data.get('dependency_results', {}).values():
            peak = result.get('result', {}).get('peak')
            if isinstance(peak, GridMaximum) and step is not None and peak.step <= step * (1 + 1e-9):
                self.logger.info(f"reusing benefit peak at x = {peak.x:.6g}")
                return peak
        return None
