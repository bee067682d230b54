"""
Result schemas
Defines what flows between agents, the CLI and the report files
"""
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator


class Verdict(str, Enum):
    """Outcome of a strict-inequality check"""
    HOLDS = 'holds'
    FAILS = 'fails'
    INCONCLUSIVE = 'inconclusive'

    @property
    def exit_code(self) -> int:
        return {Verdict.HOLDS: 0, Verdict.FAILS: 1, Verdict.INCONCLUSIVE: 2}[self]


def classify_margin(margin: float, tolerance: float) -> Verdict:
    """margin > tol holds, margin < -tol fails, anything in between is inconclusive"""
    if margin > tolerance:
        return Verdict.HOLDS
    if margin < -tolerance:
        return Verdict.FAILS
    return Verdict.INCONCLUSIVE


class IntervalSpec(BaseModel):
    """Echelon interval P = [-alpha_l, -alpha_s]"""
    model_config = ConfigDict(frozen=True)

    alpha_s: float = Field(..., gt=0)
    alpha_l: float = Field(..., gt=0)

    @model_validator(mode='after')
    def _ordered(self):
        if self.alpha_s > self.alpha_l:
            raise ValueError(f"alpha_s ({self.alpha_s}) must not exceed alpha_l ({self.alpha_l})")
        return self

    @property
    def P(self) -> Tuple[float, float]:
        return (-self.alpha_l, -self.alpha_s)

    @property
    def minus_P(self) -> Tuple[float, float]:
        return (self.alpha_s, self.alpha_l)

    @property
    def two_P(self) -> Tuple[float, float]:
        return (-2 * self.alpha_l, -2 * self.alpha_s)

    def theorem3_interval(self, alpha: float) -> Tuple[float, float]:
        """[-2 alpha_l, -2 alpha] for the benefit peak at -alpha"""
        return (-2 * self.alpha_l, -2 * alpha)

    def contains(self, x: float) -> bool:
        return -self.alpha_l <= x <= -self.alpha_s


class AssumptionReport(BaseModel):
    """Numerical verification of one standing assumption on a declared window"""
    name: str
    holds: bool
    window: Optional[Tuple[float, float]] = None
    detail: str = ''
    worst_value: Optional[float] = None


class ConditionReport(BaseModel):
    """Verdict, margins and every intermediate quantity of one condition check"""
    check: str
    verdict: Verdict
    reason: str = ''
    margin: Optional[float] = None
    tolerance: float
    grid_resolution: float
    interval: Optional[Tuple[float, float]] = None
    beta: Optional[float] = None
    alpha: Optional[float] = None
    delta1: Optional[float] = None
    delta2: Optional[float] = None
    delta3: Optional[float] = None
    epsilon_I: Optional[float] = None
    epsilon_interval: Optional[Tuple[float, float]] = None
    q_interval: List[Tuple[float, float]] = Field(default_factory=list)
    assumptions: List[AssumptionReport] = Field(default_factory=list)
    details: Dict[str, Any] = Field(default_factory=dict)


class EquilibriumKind(str, Enum):
    NE = 'NE'
    CE = 'CE'


class SearchResult(BaseModel):
    """One equilibrium search trajectory and its classification against P"""
    kind: EquilibriumKind
    converged: bool
    X_final: List[float]
    residual: float
    neighbor_gaps: List[float]
    in_P: List[bool]
    iterations: int
    diagnosis: str = ''
    objective: Optional[float] = None
    second_order_ok: Optional[bool] = None
    trajectory: Optional[List[List[float]]] = None

    @property
    def all_in_P(self) -> bool:
        return bool(self.in_P) and all(self.in_P)

    @property
    def of_interest(self) -> bool:
        """Converged with every neighboring gap inside P"""
        return self.converged and self.all_in_P


class ScanResult(BaseModel):
    """Minimum of a first-order residual over a gap grid P x P"""
    kind: str
    minimum: float
    location: Tuple[float, float]
    grid_step: float
    interval: Tuple[float, float]
    points: int
    n: Optional[int] = None


class RestartSummary(BaseModel):
    """Outcome of a seeded restart batch"""
    kind: EquilibriumKind
    n: int
    restarts: int
    seed: int
    interval: Tuple[float, float]
    converged: int = 0
    of_interest: int = 0
    drift: int = 0
    results: List[SearchResult] = Field(default_factory=list)

    @classmethod
    def from_results(cls, kind: EquilibriumKind, n: int, seed: int,
                     interval: Tuple[float, float], results: List[SearchResult]) -> 'RestartSummary':
        return cls(
            kind=kind,
            n=n,
            restarts=len(results),
            seed=seed,
            interval=interval,
            converged=sum(r.converged for r in results),
            of_interest=sum(r.of_interest for r in results),
            drift=sum('drift' in r.diagnosis for r in results),
            results=results,
        )
