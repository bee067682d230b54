"""
Fixed-wing horseshoe-vortex wake model.

Upwash behind a gliding bird (bound vortex + two diffusing tip vortices),
the wingspan-averaged wake benefit f(x, y) in closed form and by adaptive
quadrature, its analytic x-derivative, and the quadratic g(R) that decides
the sign of the paired benefit slope.

All functions broadcast over numpy arrays.
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import integrate
from tenacity import Retrying, retry_if_exception_type, stop_after_attempt

from echelon.config.settings import settings
from .benefit import BenefitFunction, DerivativeDomainError
from .search_1d import GridMaximum, grid_maximize

logger = logging.getLogger(__name__)


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance"""

    def __init__(self, message: str, abserr: float):
        super().__init__(f"{message} (achieved abs error {abserr:.3e})")
        self.abserr = abserr


class WakeParams(BaseModel):
    """Physical parameters of the fixed-wing model; derived values are recomputed on access"""
    model_config = ConfigDict(frozen=True)

    W: float = Field(..., gt=0, description="Weight (N)")
    b: float = Field(..., gt=0, description="Half-wingspan (m)")
    U: float = Field(..., gt=0, description="Airspeed (m/s)")
    rho: float = Field(..., gt=0, description="Air density (kg/m^3)")
    df_coeff: float = Field(1.05e-4, gt=0, description="D_f = df_coeff * U * b")
    r0_coeff: float = Field(0.04, gt=0, description="r0 = r0_coeff * b")

    @classmethod
    def goose(cls) -> 'WakeParams':
        """Canadian goose at 1 km: W = 36.75 N, 2b = 1.5 m, U = 18 m/s"""
        return cls(W=36.75, b=0.75, U=18.0, rho=1.112)

    @property
    def a(self) -> float:
        """Half-span of the bound vortex"""
        return math.pi / 4 * self.b

    @property
    def Gamma(self) -> float:
        return self.W / (2 * self.rho * self.a * self.U)

    @property
    def r0(self) -> float:
        return self.r0_coeff * self.b

    @property
    def D_f(self) -> float:
        return self.df_coeff * self.U * self.b

    @property
    def beta(self) -> float:
        """Lateral spacing where the benefit peaks, a + b"""
        return self.a + self.b

    @property
    def prefactor(self) -> float:
        """Gamma / (8 pi b)"""
        return self.Gamma / (8 * math.pi * self.b)

    def R(self, x) -> np.ndarray:
        """Squared effective core radius, r0^2 + D_f |x| / U"""
        return self.r0 ** 2 + self.D_f * np.abs(np.asarray(x, dtype=float)) / self.U

    def dR_dx(self, x) -> np.ndarray:
        return np.sign(np.asarray(x, dtype=float)) * self.D_f / self.U


@dataclass(frozen=True)
class ClosedFormTerms:
    c1: np.ndarray
    c2: np.ndarray
    c3: np.ndarray
    c4: np.ndarray
    c6: np.ndarray
    c7: np.ndarray


def closed_form_terms(y, params: WakeParams) -> ClosedFormTerms:
    y = np.asarray(y, dtype=float)
    a, b = params.a, params.b
    return ClosedFormTerms(
        c1=(y + b - a) ** 2,
        c2=(y - b + a) ** 2,
        c3=(y + b + a) ** 2,
        c4=(y - b - a) ** 2,
        c6=2 * (a ** 2 + b ** 2 - y ** 2),
        c7=-3 * y ** 4 + 2 * (a ** 2 + b ** 2) * y ** 2 + (a ** 2 - b ** 2) ** 2,
    )


def _warn_outside_validity(x, params: WakeParams):
    limit = settings.VALIDITY_WINDOW * params.b
    if np.any(np.abs(x) > limit):
        logger.warning(f"Wake model evaluated beyond |x| = {limit:.3g} m; results are outside model validity")


def _tip_term(u, x, R):
    """u / (u^2 + R) * (1 - x / sqrt(u^2 + x^2 + R)), cancellation-free for x > 0"""
    s = np.sqrt(u ** 2 + x ** 2 + R)
    with np.errstate(invalid='ignore', divide='ignore'):
        ahead = u / (s * (s + x))
        behind = u / (u ** 2 + R) * (1 - x / s)
    return np.where(x > 0, ahead, behind)


def upwash(x, y, params: WakeParams) -> np.ndarray:
    """Vertical air velocity v = v_b + v_t induced at (x, y) by a bird at the origin"""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    _warn_outside_validity(x, params)
    a, Gamma = params.a, params.Gamma
    K0 = x ** 2 + params.r0 ** 2
    R = params.R(x)

    v_b = Gamma / (4 * math.pi) * x / K0 * (
        (y + a) / np.sqrt((y + a) ** 2 + K0) - (y - a) / np.sqrt((y - a) ** 2 + K0)
    )
    v_t = Gamma / (4 * math.pi) * (_tip_term(y - a, x, R) - _tip_term(y + a, x, R))
    return v_b + v_t


def _log_ratio(c, x, R):
    """ln[(s - x) / (s + x)] with s = sqrt(c + x^2 + R), cancellation-free"""
    s = np.sqrt(c + x ** 2 + R)
    with np.errstate(invalid='ignore', divide='ignore'):
        ahead = np.log(c + R) - 2 * np.log(s + x)
        behind = 2 * np.log(s - x) - np.log(c + R)
    return np.where(x >= 0, ahead, behind)


def bound_vortex_integral(x, y, params: WakeParams) -> np.ndarray:
    """(1/2b) * integral of v_b over the follower's span"""
    x = np.asarray(x, dtype=float)
    t = closed_form_terms(y, params)
    K0 = x ** 2 + params.r0 ** 2
    bracket = (
        np.sqrt(t.c3 + K0) - np.sqrt(t.c2 + K0) - np.sqrt(t.c1 + K0) + np.sqrt(t.c4 + K0)
    )
    return params.prefactor * x / K0 * bracket


def f_t1(x, y, params: WakeParams) -> np.ndarray:
    """(1/2) ln[(c1 + R)(c2 + R) / ((c3 + R)(c4 + R))]"""
    t = closed_form_terms(y, params)
    R = params.R(x)
    return 0.5 * (np.log(t.c1 + R) + np.log(t.c2 + R) - np.log(t.c3 + R) - np.log(t.c4 + R))


def f_t2(x, y, params: WakeParams) -> np.ndarray:
    """Sum of the four tip-vortex log ratios, odd under (x, y) -> (-x, -y)"""
    x = np.asarray(x, dtype=float)
    t = closed_form_terms(y, params)
    R = params.R(x)
    return (
        _log_ratio(t.c3, x, R) + _log_ratio(t.c4, x, R)
        - _log_ratio(t.c1, x, R) - _log_ratio(t.c2, x, R)
    )


def benefit_closed_form(x, y, params: WakeParams) -> np.ndarray:
    """Wake benefit f(x, y), closed form"""
    x = np.asarray(x, dtype=float)
    _warn_outside_validity(x, params)
    C = params.prefactor
    return bound_vortex_integral(x, y, params) + C * f_t1(x, y, params) + C / 2 * f_t2(x, y, params)


def paired_log_expression(x, y, params: WakeParams) -> np.ndarray:
    """(Gamma / 8 pi b) ln[(c1 + R)(c2 + R) / ((c3 + R)(c4 + R))], equal to f(x, y) + f(-x, -y)"""
    return 2 * params.prefactor * f_t1(x, y, params)


def _integrate_once(x: float, y: float, params: WakeParams, limit: int) -> float:
    lo, hi = y - params.b, y + params.b
    # Tip vortex cores sit at eta = +-a
    cores = [p for p in (-params.a, params.a) if lo < p < hi]
    value, abserr, info, *rest = integrate.quad(
        lambda eta: float(upwash(x, eta, params)),
        lo,
        hi,
        epsabs=1e-10,
        epsrel=1e-10,
        limit=limit,
        points=cores or None,
        full_output=1,
    )
    # quad appends a warning message when it stops short of the tolerance
    if rest:
        raise QuadratureError(f"quadrature at (x={x:.6g}, y={y:.6g}) with limit {limit}", abserr)
    return value


def benefit_quadrature(x: float, y: float, params: WakeParams, limit: int = 200) -> float:
    """Wake benefit f(x, y) by adaptive quadrature of the upwash; a test oracle for the closed form"""
    retrying = Retrying(
        stop=stop_after_attempt(3),
        retry=retry_if_exception_type(QuadratureError),
        reraise=True,
    )
    for attempt in retrying:
        with attempt:
            scaled_limit = limit * 2 ** (attempt.retry_state.attempt_number - 1)
            value = _integrate_once(float(x), float(y), params, scaled_limit)
    return value / (2 * params.b)


def _d_log_ratio(c, x, R, dR):
    """d/dx ln[(s - x) / (s + x)] = x R' / (s (c + R)) - 2 / s"""
    s = np.sqrt(c + x ** 2 + R)
    return x * dR / (s * (c + R)) - 2 / s


def benefit_deriv_x(x, y, params: WakeParams) -> np.ndarray:
    """
    Analytic df/dx of the closed form.

    Raises:
        DerivativeDomainError: at x = 0, where |x| in R(x) has a kink
    """
    x = np.asarray(x, dtype=float)
    if np.any(x == 0):
        raise DerivativeDomainError("wake benefit derivative is undefined at x = 0")
    return (
        _d_bound_vortex(x, y, params)
        + _d_tip_log(x, y, params)
        + _d_tip_ratio(x, y, params)
    )


def _d_bound_vortex(x, y, params: WakeParams) -> np.ndarray:
    t = closed_form_terms(y, params)
    r0sq = params.r0 ** 2
    K0 = x ** 2 + r0sq
    roots = [np.sqrt(c + K0) for c in (t.c3, t.c2, t.c1, t.c4)]
    signs = (1, -1, -1, 1)
    bracket = sum(s * r for s, r in zip(signs, roots))
    d_bracket = sum(s / r for s, r in zip(signs, roots))
    return params.prefactor * ((r0sq - x ** 2) / K0 ** 2 * bracket + x ** 2 / K0 * d_bracket)


def _d_tip_log(x, y, params: WakeParams) -> np.ndarray:
    t = closed_form_terms(y, params)
    R, dR = params.R(x), params.dR_dx(x)
    total = 1 / (t.c1 + R) + 1 / (t.c2 + R) - 1 / (t.c3 + R) - 1 / (t.c4 + R)
    return params.prefactor * 0.5 * dR * total


def _d_tip_ratio(x, y, params: WakeParams) -> np.ndarray:
    t = closed_form_terms(y, params)
    R, dR = params.R(x), params.dR_dx(x)
    total = (
        _d_log_ratio(t.c3, x, R, dR) + _d_log_ratio(t.c4, x, R, dR)
        - _d_log_ratio(t.c1, x, R, dR) - _d_log_ratio(t.c2, x, R, dR)
    )
    return params.prefactor / 2 * total


def g_of_R(R, y, params: WakeParams) -> np.ndarray:
    """8ab (R^2 + c6 R + c7); same sign as d/dx [f(x, y) + f(-x, -y)] for x > 0"""
    t = closed_form_terms(y, params)
    R = np.asarray(R, dtype=float)
    return 8 * params.a * params.b * (R ** 2 + t.c6 * R + t.c7)


def g_of_R_product(R, y, params: WakeParams) -> np.ndarray:
    """Unexpanded form (2R + c1 + c2)(c3 + R)(c4 + R) - (2R + c3 + c4)(c1 + R)(c2 + R)"""
    t = closed_form_terms(y, params)
    R = np.asarray(R, dtype=float)
    return (
        (2 * R + t.c1 + t.c2) * (t.c3 + R) * (t.c4 + R)
        - (2 * R + t.c3 + t.c4) * (t.c1 + R) * (t.c2 + R)
    )


def g_positive_root(y, params: WakeParams) -> np.ndarray:
    """Positive root of R^2 + c6 R + c7, valid for |y| >= sqrt(a^2 + b^2)"""
    y2 = np.asarray(y, dtype=float) ** 2
    a2, b2 = params.a ** 2, params.b ** 2
    return y2 - (a2 + b2) + 2 * np.sqrt((y2 - a2) * (y2 - b2))


class WakeBenefit(BenefitFunction):
    """The horseshoe-vortex wake benefit behind the BenefitFunction contract"""

    name = "wake"

    def __init__(self, params: WakeParams):
        self.params = params

    def value(self, x, y) -> np.ndarray:
        return benefit_closed_form(x, y, self.params)

    def derivative_valid(self, x) -> np.ndarray:
        return np.asarray(x, dtype=float) != 0

    def _deriv_x(self, x, y) -> np.ndarray:
        return benefit_deriv_x(x, y, self.params)


def find_benefit_peak(
    f: Union[BenefitFunction, WakeParams],
    beta: float,
    window: Optional[Tuple[float, float]] = None,
    step: Optional[float] = None,
) -> GridMaximum:
    """
    Maximum of f(., -beta) over a window of the negative axis.

    Args:
        f: benefit, or WakeParams for the wake benefit
        beta: lateral spacing
        window: (lo, hi) with hi < 0; defaults to [-VALIDITY_WINDOW * b, -0.01 b]
                for the wake model and [-100 beta, -0.01 beta] otherwise
        step: grid spacing; defaults to GRID_FRACTION * b (or * beta)

    Returns:
        GridMaximum; on_boundary flags an unreliable maximum
    """
    if isinstance(f, WakeParams):
        f = WakeBenefit(f)
    scale = f.params.b if isinstance(f, WakeBenefit) else beta
    if window is None:
        limit = settings.VALIDITY_WINDOW * scale if isinstance(f, WakeBenefit) else 100 * scale
        window = (-limit, -0.01 * scale)
    lo, hi = window
    if hi >= 0:
        raise ValueError("peak search window must lie in the negative axis")
    step = step or settings.GRID_FRACTION * scale

    peak = grid_maximize(lambda xs: f.value(xs, -beta), lo, hi, step)
    if peak.on_boundary:
        logger.warning(f"Benefit maximum on window boundary at x = {peak.x:.6g}; peak location unreliable")
    return peak
