"""
Per-run configuration
Flat YAML file with named keys in SI units; defaults reproduce the goose case.
"""
from pathlib import Path
from typing import Literal, Optional, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, model_validator

from echelon.agents.state_schema import IntervalSpec
from echelon.tools.benefit import BenefitFunction, SeparableTestBenefit
from echelon.tools.wake import WakeBenefit, WakeParams

from .settings import settings

BenefitName = Literal[
    'wake',
    'separable_quadratic',
    'separable_abs',
    'separable_inverse_square',
    'separable_gaussian',
    'separable_shifted_gaussian',
]


class RunConfig(BaseModel):
    """Everything a CLI run depends on"""
    model_config = ConfigDict(extra='forbid')

    # Wake model (goose at 1 km)
    weight: float = Field(36.75, gt=0, description="W (N)")
    wingspan: float = Field(1.5, gt=0, description="2b (m)")
    airspeed: float = Field(18.0, gt=0, description="U (m/s)")
    rho: float = Field(1.112, gt=0, description="Air density (kg/m^3)")
    df_coeff: float = Field(1.05e-4, gt=0)
    r0_coeff: float = Field(0.04, gt=0)

    # Formation
    beta: Optional[float] = Field(None, gt=0, description="Lateral spacing; None = a + b")
    alpha_s: float = Field(0.5, gt=0)
    alpha_l: float = Field(3.5, gt=0)
    n: int = Field(2, ge=1)

    # Numerics
    grid_step: Optional[float] = Field(None, gt=0, description="None = GRID_FRACTION * b")
    scan_step: float = Field(1e-3, gt=0)
    tolerance: float = Field(default_factory=lambda: settings.TOLERANCE, gt=0)

    # Search
    restarts: int = Field(100, ge=0)
    seed: int = 0
    max_iters: int = Field(200, ge=1)
    mode: Literal['cyclic', 'simultaneous'] = 'cyclic'

    # Cooperative condition
    beta_lower: Optional[float] = Field(None, gt=0, description="None = midpoint of (sqrt(a^2+b^2), a+b)")
    y_max_factor: float = Field(10.0, gt=1)

    # Benefit
    benefit: BenefitName = 'wake'
    gaussian_offset: float = Field(0.0, ge=0)
    gaussian_width: float = Field(1.0, gt=0)

    # Output
    output_dir: str = Field(default_factory=lambda: settings.OUTPUT_DIR)
    svg: bool = False

    @model_validator(mode='after')
    def _consistent(self):
        if self.alpha_s > self.alpha_l:
            raise ValueError(f"alpha_s ({self.alpha_s}) must not exceed alpha_l ({self.alpha_l})")
        if self.beta_lower is not None and self.beta_lower > self.resolved_beta:
            raise ValueError("beta_lower must not exceed beta")
        return self

    def wake_params(self) -> WakeParams:
        return WakeParams(
            W=self.weight,
            b=self.wingspan / 2,
            U=self.airspeed,
            rho=self.rho,
            df_coeff=self.df_coeff,
            r0_coeff=self.r0_coeff,
        )

    @property
    def resolved_beta(self) -> float:
        return self.beta if self.beta is not None else self.wake_params().beta

    @property
    def resolved_grid_step(self) -> float:
        return self.grid_step or settings.GRID_FRACTION * self.wake_params().b

    @property
    def resolved_beta_lower(self) -> float:
        if self.beta_lower is not None:
            return self.beta_lower
        params = self.wake_params()
        if self.benefit == 'wake':
            return 0.5 * (float(np.hypot(params.a, params.b)) + params.a + params.b)
        return self.resolved_beta

    def interval(self) -> IntervalSpec:
        return IntervalSpec(alpha_s=self.alpha_s, alpha_l=self.alpha_l)

    def build_benefit(self) -> BenefitFunction:
        if self.benefit == 'wake':
            return WakeBenefit(self.wake_params())
        return SeparableTestBenefit(
            family=self.benefit[len('separable_'):],
            offset=self.gaussian_offset,
            width=self.gaussian_width,
        )

    def to_yaml(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open('w') as handle:
            yaml.safe_dump(self.model_dump(), handle, sort_keys=False)
        return path

    @classmethod
    def from_yaml(cls, path: Union[str, Path]) -> 'RunConfig':
        with Path(path).open() as handle:
            data = yaml.safe_load(handle) or {}
        if not isinstance(data, dict):
            raise ValueError(f"{path}: expected a mapping of named keys")
        return cls(**data)


def load_config(path: Optional[Union[str, Path]] = None, **overrides) -> RunConfig:
    """RunConfig from an optional YAML file, then non-None overrides on top"""
    base = RunConfig.from_yaml(path) if path else RunConfig()
    updates = {key: value for key, value in overrides.items() if value is not None}
    if not updates:
        return base
    return RunConfig(**{**base.model_dump(), **updates})
