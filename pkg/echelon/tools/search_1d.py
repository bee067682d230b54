"""
One-dimensional maximization over closed intervals.

Coarse grid scan, then golden-section refinement around the best grid
cells. Every maximum the package reports (delta, epsilon, benefit peak,
best response) goes through grid_maximize so results are deterministic
for a given step.
"""
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

INV_PHI = (math.sqrt(5) - 1) / 2  # 1 / phi
INV_PHI_SQUARE = (3 - math.sqrt(5)) / 2  # 1 / phi^2


@dataclass(frozen=True)
class GridMaximum:
    x: float
    value: float
    on_boundary: bool
    step: float


def grid_points(lo: float, hi: float, step: float) -> np.ndarray:
    """Uniform grid covering [lo, hi] with spacing <= step, both ends included"""
    if hi < lo:
        raise ValueError(f"empty interval [{lo}, {hi}]")
    if step <= 0:
        raise ValueError("grid step must be positive")
    count = max(int(math.ceil((hi - lo) / step - 1e-9)), 1)
    return np.linspace(lo, hi, count + 1)


def golden_section_max(
    func: Callable[[float], float],
    a: float,
    b: float,
    tol: float = 1e-10,
    max_iterations: int = 200,
):
    """
    Golden-section search for the maximum of a unimodal func on [a, b].

    Returns (x, func(x)); the endpoints are compared at the end so a maximum
    sitting on the bracket edge is returned exactly.
    """
    a, b = min(a, b), max(a, b)
    fa, fb = func(a), func(b)
    h = b - a
    if h <= tol:
        return (a, fa) if fa >= fb else (b, fb)

    c = a + INV_PHI_SQUARE * h
    d = a + INV_PHI * h
    yc = func(c)
    yd = func(d)

    for _ in range(max_iterations):
        if h <= tol:
            break
        if yc > yd:
            b = d
            d = c
            yd = yc
            h = INV_PHI * h
            c = a + INV_PHI_SQUARE * h
            yc = func(c)
        else:
            a = c
            c = d
            yc = yd
            h = INV_PHI * h
            d = a + INV_PHI * h
            yd = func(d)

    best_x, best_y = (c, yc) if yc >= yd else (d, yd)
    for edge_x, edge_y in ((a, func(a)), (b, func(b))):
        if edge_y > best_y:
            best_x, best_y = edge_x, edge_y
    return best_x, best_y


def grid_maximize(
    func: Callable[[np.ndarray], np.ndarray],
    lo: float,
    hi: float,
    step: float,
    refine_top: int = 3,
    tol: float = 1e-10,
    mask: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> GridMaximum:
    """
    Maximize a vectorized func over [lo, hi].

    Args:
        func: vectorized objective
        lo, hi: interval ends
        step: coarse grid spacing
        refine_top: number of best grid cells refined by golden section
        tol: golden-section bracket tolerance
        mask: optional vectorized predicate; grid points where it is False
              are never evaluated nor used as refinement brackets

    Returns:
        GridMaximum; on_boundary is set when the best point is an interval end
    """
    xs = grid_points(lo, hi, step)
    keep = np.ones_like(xs, dtype=bool) if mask is None else np.asarray(mask(xs), dtype=bool)
    if not np.any(keep):
        raise ValueError(f"no admissible grid point in [{lo}, {hi}]")

    values = np.full(xs.shape, -np.inf)
    values[keep] = func(xs[keep])

    def scalar(x: float) -> float:
        return float(func(np.asarray([x]))[0])

    order = np.argsort(-values, kind='stable')[:refine_top]
    best_x, best_y = float(xs[order[0]]), float(values[order[0]])
    last = len(xs) - 1
    for k in order:
        if not np.isfinite(values[k]):
            continue
        left = k - 1 if k > 0 and keep[k - 1] else k
        right = k + 1 if k < last and keep[k + 1] else k
        if left == right:
            continue
        x, y = golden_section_max(scalar, float(xs[left]), float(xs[right]), tol=tol)
        if y > best_y:
            best_x, best_y = x, y

    span_tol = max(tol, 1e-12 * max(abs(lo), abs(hi), 1.0))
    on_boundary = abs(best_x - lo) <= span_tol or abs(best_x - hi) <= span_tol
    return GridMaximum(x=best_x, value=best_y, on_boundary=on_boundary, step=float(xs[1] - xs[0]) if last else 0.0)
