"""
Curve Agent
Samples f(x, -k beta) or f_x(x, -k beta) on a uniform grid for the curve files,
and the paired f_x(x, -beta) / f_x(x, -2 beta) curves behind a Q-based check.
"""
from typing import Any, Dict, Optional, Tuple

import numpy as np

from echelon.tools.benefit import BenefitFunction
from echelon.tools.search_1d import grid_points
from .base_agent import BaseAgent
from .state_schema import ConditionReport

QUANTITIES = {'f': 'f(x, y)', 'fx': 'df/dx(x, y)'}
LEVEL_COLUMNS = ('x', 'fx_y1', 'fx_y2')


def compute_curve(
    f: BenefitFunction,
    which: str,
    y_multiple: int,
    beta: float,
    x_range: Tuple[float, float],
    step: float,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    (xs, values) for y = -y_multiple * beta.

    Derivative samples where the benefit declares f_x undefined (x = 0 for
    the wake) are NaN. An interval with hi < lo gives empty arrays.
    """
    if which not in QUANTITIES:
        raise ValueError(f"Unknown curve quantity: {which}")
    if y_multiple not in (1, 2):
        raise ValueError("y_multiple must be 1 or 2")

    lo, hi = x_range
    if hi < lo:
        return np.empty(0), np.empty(0)

    xs = grid_points(lo, hi, step)
    # linspace can land a hair off the origin
    xs[np.abs(xs) < 1e-12 * max(abs(lo), abs(hi), 1.0)] = 0.0
    y = -y_multiple * beta
    if which == 'f':
        return xs, f.value(xs, y)

    values = np.full(xs.shape, np.nan)
    valid = np.asarray(f.derivative_valid(xs), dtype=bool)
    values[valid] = f.deriv_x(xs[valid], y)
    return xs, values


def report_levels(report: ConditionReport) -> Dict[str, Any]:
    """Header entries drawn as reference levels next to the f_x curves"""
    levels: Dict[str, Any] = {
        'check': report.check,
        'verdict': report.verdict.value,
        'alpha': report.alpha,
        'epsilon_I': report.epsilon_I,
        'I_lo': report.epsilon_interval[0] if report.epsilon_interval else None,
        'I_hi': report.epsilon_interval[1] if report.epsilon_interval else None,
        'delta1': report.delta1,
        'delta3': report.delta3,
    }
    for k, (lo, hi) in enumerate(report.q_interval or []):
        levels[f'q{k}_lo'], levels[f'q{k}_hi'] = lo, hi
    return levels


def compute_level_curves(
    f: BenefitFunction,
    beta: float,
    report: ConditionReport,
    step: float,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    f_x(x, -beta) and f_x(x, -2 beta) over [I_lo, alpha_l], which covers the
    epsilon interval I, P and -Q(I).

    Raises:
        ValueError: the report stopped before computing epsilon_I
    """
    if report.epsilon_interval is None or report.interval is None:
        raise ValueError(f"{report.check} report has no epsilon interval ({report.reason or report.verdict.value})")
    x_range = (report.epsilon_interval[0], -report.interval[0])
    xs, near = compute_curve(f, 'fx', 1, beta, x_range, step)
    _, far = compute_curve(f, 'fx', 2, beta, x_range, step)
    return xs, np.column_stack([near, far])


class CurveAgent(BaseAgent):
    """
    Input:
    - {'task': 'curve', 'params': {'benefit', 'which', 'y_multiple', 'beta', 'x_range', 'step'}}
    - {'task': 'levels', 'params': {'benefit', 'beta', 'step'}}, with the ConditionReport
      of a 'thm2' / 'thm3' step among its dependency results
    """

    TASKS = ('curve', 'levels')

    def __init__(self, config: Optional[Dict] = None):
        super().__init__("curve", config)

    def validate_input(self, input_data: Dict[str, Any]) -> bool:
        if not isinstance(input_data, dict) or input_data.get('task') not in self.TASKS:
            return False
        params = input_data.get('params', {})
        if not isinstance(params.get('benefit'), BenefitFunction):
            return False
        if input_data['task'] == 'levels':
            return self._dependency_report(input_data) is not None
        return params.get('which') in QUANTITIES

    def execute(self, input_data: Dict[str, Any]) -> Dict[str, Any]:
        params = input_data['params']
        if input_data['task'] == 'levels':
            report = self._dependency_report(input_data)
            xs, values = compute_level_curves(params['benefit'], params['beta'], report, params['step'])
            self.logger.info(f"f_x levels for {report.check}: {len(xs)} samples, epsilon_I = {report.epsilon_I}")
            return {'x': xs, 'values': values, 'columns': LEVEL_COLUMNS, 'levels': report_levels(report)}

        xs, values = compute_curve(
            params['benefit'],
            params['which'],
            params.get('y_multiple', 1),
            params['beta'],
            params['x_range'],
            params['step'],
        )
        finite = np.isfinite(values)
        if np.any(finite):
            self.logger.info(
                f"{params['which']} at y = -{params.get('y_multiple', 1)} beta: {len(xs)} samples, "
                f"max {np.max(values[finite]):.6g} at x = {xs[finite][np.argmax(values[finite])]:.6g}"
            )
        return {'x': xs, 'values': values, 'quantity': QUANTITIES[params['which']]}

    @staticmethod
    def _dependency_report(input_data: Dict[str, Any]) -> Optional[ConditionReport]:
        for result in input_data.get('dependency_results', {}).values():
            report = result.get('result', {}).get('report')
            if isinstance(report, ConditionReport):
                return report
        return None
