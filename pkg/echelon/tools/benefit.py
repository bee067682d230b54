"""
Benefit core
Inter-agent benefit abstraction, echelon formation state, per-agent and
group benefit, and their longitudinal gradients.

Conventions:
- Leader (agent 0) sits at the origin; follower i sits at (x_i, -i*beta)
- p_ij = p_i - p_j, and agent i collects f(p_ij) from every j within 2 hops
"""
from abc import ABC, abstractmethod
from typing import Callable, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

# Interaction radius of the neighbor set N_i
NEIGHBOR_HOPS = 2


class DerivativeDomainError(ValueError):
    """Derivative requested where the benefit declares it invalid"""


class BenefitFunction(ABC):
    """
    Inter-agent benefit f(x, y).

    Implementations must:
    - accept scalars or numpy arrays (broadcasting) in value() and deriv_x()
    - be laterally symmetric, f(x, y) = f(x, -y)
    - declare where deriv_x is valid via derivative_valid()
    """

    name: str = "benefit"

    @abstractmethod
    def value(self, x, y) -> np.ndarray:
        pass

    @abstractmethod
    def _deriv_x(self, x, y) -> np.ndarray:
        pass

    def derivative_valid(self, x) -> np.ndarray:
        """Where deriv_x may be evaluated. Default: everywhere."""
        return np.ones_like(np.asarray(x, dtype=float), dtype=bool)

    def deriv_x(self, x, y) -> np.ndarray:
        """Partial derivative in x, guarded by derivative_valid()"""
        x = np.asarray(x, dtype=float)
        if not np.all(self.derivative_valid(x)):
            raise DerivativeDomainError(
                f"{self.name}: derivative is undefined at x = 0"
            )
        return self._deriv_x(x, np.asarray(y, dtype=float))

    def paired_value(self, x, y) -> np.ndarray:
        """f(x, y) + f(-x, -y), the benefit a pair of agents share"""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return self.value(x, y) + self.value(-x, -y)

    def paired_deriv_x(self, x, y) -> np.ndarray:
        """d/dx [f(x, y) + f(-x, -y)] = f_x(x, y) - f_x(-x, -y)"""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return self.deriv_x(x, y) - self.deriv_x(-x, -y)


class ConstantBenefit(BenefitFunction):
    """f = c everywhere"""

    name = "constant"

    def __init__(self, c: float = 1.0):
        self.c = float(c)

    def value(self, x, y) -> np.ndarray:
        return np.full(np.broadcast(np.asarray(x), np.asarray(y)).shape, self.c)

    def _deriv_x(self, x, y) -> np.ndarray:
        return np.zeros(np.broadcast(x, y).shape)


def _constant_h(y):
    return np.ones_like(np.asarray(y, dtype=float))


class SeparableTestBenefit(BenefitFunction):
    """
    f(x, y) = g(x) h(y) with h even and positive; g is even except for the
    shifted Gaussian.

    g families:
    - 'abs':            |x|
    - 'quadratic':      x^2
    - 'inverse_square': 1/x^2 (undefined at 0)
    - 'gaussian':       exp(-(|x| - offset)^2 / (2 width^2)); offset = 0 is
                        the standard bump, offset > 0 peaks at x = +-offset
    - 'shifted_gaussian': exp(-(x + offset)^2 / (2 width^2)), a single bump
                        behind the leader; not even in x

    h must be vectorized, even and strictly positive.
    """

    FAMILIES = ('abs', 'quadratic', 'inverse_square', 'gaussian', 'shifted_gaussian')

    def __init__(
        self,
        family: str = 'quadratic',
        h: Optional[Callable] = None,
        offset: float = 0.0,
        width: float = 1.0,
    ):
        if family not in self.FAMILIES:
            raise ValueError(f"Unknown g family: {family}")
        if width <= 0:
            raise ValueError("width must be positive")
        if offset < 0:
            raise ValueError("offset must be non-negative")

        self.family = family
        self.h = h or _constant_h
        self.offset = float(offset)
        self.width = float(width)
        self.name = f"separable_{family}"

    def g(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.family == 'abs':
            return np.abs(x)
        if self.family == 'quadratic':
            return x ** 2
        if self.family == 'inverse_square':
            with np.errstate(divide='ignore'):
                return 1.0 / x ** 2
        if self.family == 'shifted_gaussian':
            return np.exp(-(x + self.offset) ** 2 / (2 * self.width ** 2))
        return np.exp(-(np.abs(x) - self.offset) ** 2 / (2 * self.width ** 2))

    def g_prime(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.family == 'abs':
            return np.sign(x)
        if self.family == 'quadratic':
            return 2 * x
        if self.family == 'inverse_square':
            return -2.0 / x ** 3
        if self.family == 'shifted_gaussian':
            return -(x + self.offset) / self.width ** 2 * self.g(x)
        u = np.abs(x) - self.offset
        return -np.sign(x) * u / self.width ** 2 * self.g(x)

    def derivative_valid(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.family in ('quadratic', 'shifted_gaussian') or (self.family == 'gaussian' and self.offset == 0):
            return np.ones_like(x, dtype=bool)
        return x != 0

    def value(self, x, y) -> np.ndarray:
        return self.g(x) * self.h(np.asarray(y, dtype=float))

    def _deriv_x(self, x, y) -> np.ndarray:
        return self.g_prime(x) * self.h(y)


class FormationState(BaseModel):
    """Leader at the origin plus n followers on the echelon lines y_i = -i*beta"""
    model_config = ConfigDict(frozen=True)

    X: Tuple[float, ...] = Field(..., description="Follower longitudinal positions x_1..x_n (m)")
    beta: float = Field(..., gt=0, description="Lateral neighbor spacing (m)")

    @field_validator('X', mode='before')
    @classmethod
    def _coerce_positions(cls, value):
        positions = tuple(float(v) for v in np.ravel(np.asarray(value, dtype=float)))
        if len(positions) < 1:
            raise ValueError("at least one follower is required")
        if not all(np.isfinite(positions)):
            raise ValueError("positions must be finite")
        return positions

    @property
    def n(self) -> int:
        return len(self.X)

    def xs(self) -> np.ndarray:
        """x_0..x_n, leader included"""
        return np.concatenate(([0.0], np.asarray(self.X)))

    def ys(self) -> np.ndarray:
        """y_0..y_n, y_i = -i*beta"""
        return -self.beta * np.arange(self.n + 1, dtype=float)

    def gaps(self) -> np.ndarray:
        """Neighboring gaps x_{i(i-1)}, i = 1..n"""
        return np.diff(self.xs())

    def with_positions(self, X) -> 'FormationState':
        return FormationState(X=X, beta=self.beta)

    @classmethod
    def from_gaps(cls, gaps, beta: float) -> 'FormationState':
        return cls(X=np.cumsum(np.asarray(gaps, dtype=float)), beta=beta)


def neighbors(i: int, n: int) -> List[int]:
    """N_i: agents within NEIGHBOR_HOPS of i, leader included"""
    return [
        j for j in range(max(0, i - NEIGHBOR_HOPS), min(n, i + NEIGHBOR_HOPS) + 1)
        if j != i
    ]


def _relative(state: FormationState, i: int) -> Tuple[np.ndarray, np.ndarray]:
    """(x_ij, y_ij) for every j in N_i"""
    xs, ys = state.xs(), state.ys()
    js = neighbors(i, state.n)
    return xs[i] - xs[js], ys[i] - ys[js]


def _check_index(state: FormationState, i: int):
    if not 0 <= i <= state.n:
        raise IndexError(f"agent index {i} outside 0..{state.n}")


def per_agent_benefit(state: FormationState, f: BenefitFunction, i: int) -> float:
    """f^(i)(p) = sum over j in N_i of f(p_ij)"""
    _check_index(state, i)
    dx, dy = _relative(state, i)
    return float(np.sum(f.value(dx, dy)))


def total_benefit(state: FormationState, f: BenefitFunction) -> float:
    """J(p) = sum of f^(i) over the leader and all followers"""
    return float(sum(per_agent_benefit(state, f, i) for i in range(state.n + 1)))


def total_benefit_pairwise(state: FormationState, f: BenefitFunction) -> float:
    """J(p) summed over ordered pairs (i, j), |i - j| <= 2, i != j"""
    xs, ys = state.xs(), state.ys()
    idx = np.arange(state.n + 1)
    i, j = np.meshgrid(idx, idx, indexing='ij')
    mask = (i != j) & (np.abs(i - j) <= NEIGHBOR_HOPS)
    return float(np.sum(f.value(xs[i[mask]] - xs[j[mask]], ys[i[mask]] - ys[j[mask]])))


def ne_stationarity_residual(state: FormationState, f: BenefitFunction) -> np.ndarray:
    """Component i = sum over j in N_i of f_x(p_ij); zero at any NE"""
    residual = np.empty(state.n)
    for i in range(1, state.n + 1):
        dx, dy = _relative(state, i)
        residual[i - 1] = np.sum(f.deriv_x(dx, dy))
    return residual


def ce_gradient(state: FormationState, f: BenefitFunction) -> np.ndarray:
    """dJ/dx_i = sum over j in N_i of f_x(p_ij) - f_x(p_ji)"""
    gradient = np.empty(state.n)
    for i in range(1, state.n + 1):
        dx, dy = _relative(state, i)
        gradient[i - 1] = np.sum(f.deriv_x(dx, dy) - f.deriv_x(-dx, -dy))
    return gradient
