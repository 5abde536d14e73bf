"""Data models using Pydantic"""

import math
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator


class SweepOrder(str, Enum):
    """Coordinate order of one Gibbs sweep"""

    IDENTITY = "id"  # 1, ..., d
    FIXED = "fixed"  # caller-supplied permutation
    RANDOM = "random"  # fresh uniform permutation each sweep


class SplitKind(str, Enum):
    """How the potential gradient is divided between drift and jumps"""

    FULL_DRIFT = "full-drift"  # no jump fields
    PAIRWISE = "pairwise"  # one field per ordered pair
    PER_PARTICLE = "per-particle"  # one field per particle


class OUMode(str, Enum):
    """Noise and drift convention of the Ornstein-Uhlenbeck half kick"""

    EXACT = "exact"
    PAPER_LITERAL = "paper-literal"


class JumpMode(str, Enum):
    """Realization of the jump segment"""

    NAIVE = "naive"  # competing clocks over all fields
    THINNED = "thinned"  # Poisson proposals against C_R


class Subcommand(str, Enum):
    """CLI subcommands"""

    ESCAPE = "escape"
    ZZD = "zzd"
    VALIDATE_INVARIANCE = "validate-invariance"
    SCALING = "scaling"
    HYBRID = "hybrid"
    VALIDATE = "validate"


class Walk1D(BaseModel):
    """State of the Zig-Zag walk on the integers"""

    x: int
    v: int
    step_count: int = 0

    @field_validator("v")
    @classmethod
    def _unit_velocity(cls, v: int) -> int:
        if v not in (-1, 1):
            raise ValueError("velocity must be +1 or -1")
        return v

    def parity(self) -> int:
        """(-1)^x * v * (-1)^step_count, constant along a trajectory"""
        sign_x = 1 - 2 * (self.x % 2)
        sign_k = 1 - 2 * (self.step_count % 2)
        return sign_x * self.v * sign_k


class LatticeStateD(BaseModel):
    """State of the Zig-Zag walk on Z^d"""

    x: np.ndarray
    v: np.ndarray
    sweep_order: SweepOrder = SweepOrder.IDENTITY
    permutation: Optional[Tuple[int, ...]] = None
    step_count: int = 0

    class Config:
        arbitrary_types_allowed = True

    @field_validator("x", "v", mode="before")
    @classmethod
    def _as_int_array(cls, value):
        return np.asarray(value, dtype=np.int64)

    @model_validator(mode="after")
    def _check_shapes(self):
        if self.x.ndim != 1 or self.x.shape != self.v.shape:
            raise ValueError("x and v must be d-vectors of equal length")
        if not np.all(np.abs(self.v) == 1):
            raise ValueError("velocity components must be +1 or -1")
        if self.sweep_order == SweepOrder.FIXED:
            if self.permutation is None or sorted(self.permutation) != list(range(len(self.x))):
                raise ValueError("fixed sweep order needs a permutation of 0..d-1")
        return self

    @property
    def dim(self) -> int:
        return int(self.x.shape[0])


class EscapeConfig(BaseModel):
    """Well window and temperature of the metastable escape experiment"""

    potential: Any
    a: int
    b: int
    alpha: int = 0
    beta: int = 0
    eps: float = 1.0

    class Config:
        arbitrary_types_allowed = True
        json_schema_extra = {"example": {"potential": "doublewell:1.5,1.5,2", "a": -2, "b": 2, "eps": 0.25}}

    @model_validator(mode="after")
    def _check_order(self):
        if not (self.a < self.alpha <= 0 <= self.beta < self.b):
            raise ValueError("need a < alpha <= 0 <= beta < b")
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        return self

    def energy(self, k: int) -> float:
        """Base potential U(k) (not divided by eps)"""
        return float(self.potential.evaluate(np.array([k])))

    @property
    def barrier_left(self) -> float:
        return self.energy(self.a)

    @property
    def barrier_right(self) -> float:
        return self.energy(self.b)

    @property
    def e1(self) -> float:
        return min(self.barrier_left, self.barrier_right)

    @property
    def e2(self) -> float:
        return min(self.energy(self.alpha - 1), self.energy(self.beta + 1))

    @property
    def e3(self) -> float:
        return abs(self.barrier_left - self.barrier_right)

    def window_issues(self) -> List[str]:
        """Scan the window for the shape assumptions of the escape formula"""
        issues = []
        values = {k: self.energy(k) for k in range(self.a, self.b + 1)}
        if values[0] != 0.0:
            issues.append(f"U(0) = {values[0]} instead of 0")
        for k in range(self.a, 0):
            if values[k] < values[k + 1]:
                issues.append(f"U not decreasing on [a, 0] at {k}")
        for k in range(0, self.b):
            if values[k + 1] < values[k]:
                issues.append(f"U not increasing on [0, b] at {k}")
        zeros = [k for k, value in values.items() if value == 0.0]
        if zeros != list(range(self.alpha, self.beta + 1)):
            issues.append(f"zero set {zeros} differs from [alpha, beta]")
        return issues


class LyapunovParams(BaseModel):
    """Parameters of the drift function V(x, v) = sum exp(a|x_i| + b 1{x_i v_i > 0})"""

    a: float = Field(gt=0)
    b: float = Field(gt=0)
    R: float = 0.0
    h: float = Field(gt=0)

    @classmethod
    def from_h(cls, h: float, R: float = 0.0) -> "LyapunovParams":
        """Default choice a = h/2 and exp(-b) = exp(-h/4) - exp(-h/2)"""
        b = -math.log(math.exp(-h / 4) - math.exp(-h / 2))
        return cls(a=h / 2, b=b, R=R, h=h)

    @property
    def gamma(self) -> float:
        return max(
            math.exp(-self.h + self.a) + (1 - math.exp(-self.h)) * math.exp(-self.b),
            math.exp(-self.a),
        )

    def constant(self, dim: int) -> float:
        return dim * math.exp(self.a * (self.R + 1) + self.b)


class LyapunovReport(BaseModel):
    """Outcome of the exhaustive drift check on a box"""

    gamma: float
    constant: float
    states_checked: int
    max_violation: float  # max of (QV - gamma V - C) / V, should be <= 0
    drift_margin: float  # min of (gamma V + C - QV) / V
    empirical_gamma: Optional[float] = None  # sup QV/V where every |x_i| > R + 1
    assumption_violations: int = 0

    @property
    def holds(self) -> bool:
        return self.max_violation <= 1e-9 and self.assumption_violations == 0


class PDMPState(BaseModel):
    """State of the continuous-time Zig-Zag process"""

    y: np.ndarray
    w: np.ndarray
    t: float = 0.0

    class Config:
        arbitrary_types_allowed = True

    @field_validator("y", "w", mode="before")
    @classmethod
    def _as_float_array(cls, value):
        return np.asarray(value, dtype=float)

    @model_validator(mode="after")
    def _check(self):
        if self.y.shape != self.w.shape:
            raise ValueError("y and w must have equal shape")
        if not np.all(np.abs(self.w) == 1.0):
            raise ValueError("velocity components must be +1 or -1")
        if self.t < 0:
            raise ValueError("time must be non-negative")
        return self


class PhaseState(BaseModel):
    """Position and velocity of a kinetic sampler, optionally in a periodic box"""

    x: np.ndarray
    v: np.ndarray
    box: Optional[float] = None

    class Config:
        arbitrary_types_allowed = True

    @field_validator("x", "v", mode="before")
    @classmethod
    def _as_float_array(cls, value):
        return np.asarray(value, dtype=float)

    @model_validator(mode="after")
    def _check(self):
        if self.x.shape != self.v.shape:
            raise ValueError("x and v must have equal shape")
        return self

    def wrapped(self, x: np.ndarray) -> np.ndarray:
        if self.box is None:
            return x
        return np.mod(x, self.box)


class HybridConfig(BaseModel):
    """Time step, friction, refreshment and splitting of the hybrid sampler"""

    delta: float = Field(gt=0)
    gamma: float = Field(default=1.0, ge=0)
    lam: float = Field(default=0.0, ge=0, alias="lambda")
    split: SplitKind = SplitKind.PAIRWISE
    ou_variance_mode: OUMode = OUMode.EXACT
    jump_mode: JumpMode = JumpMode.THINNED
    threads: int = Field(default=1, ge=1)

    class Config:
        populate_by_name = True
        json_schema_extra = {"example": {"delta": 0.002, "gamma": 1.0, "lambda": 0.0, "split": "pairwise"}}


class CostCounters(BaseModel):
    """Evaluation and event tallies of a hybrid run"""

    f0_evals: int = 0
    gij_evals: int = 0
    jump_proposals: int = 0
    jumps_accepted: int = 0
    refreshments: int = 0
    proposal_intensity: float = 0.0  # sum of Poisson parameters drawn
    speed_sum: float = 0.0  # sum of |W_i| entering jump segments
    speed_count: int = 0

    def merge(self, other: "CostCounters") -> None:
        """Add the tallies of another counter set"""
        for name in type(self).model_fields:
            setattr(self, name, getattr(self, name) + getattr(other, name))

    def snapshot(self) -> Dict[str, float]:
        return self.model_dump()

    @property
    def mean_speed(self) -> float:
        return self.speed_sum / self.speed_count if self.speed_count else 0.0


class SeriesSummary(BaseModel):
    """Mean, batch-means variance and MSD curve of a scalar or vector series"""

    n: int
    mean: float
    batch_means_variance: float = Field(ge=0)
    batches: int
    msd_curve: Dict[int, float] = Field(default_factory=dict)
    provenance: Dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _msd_origin(self):
        if 0 in self.msd_curve and self.msd_curve[0] != 0.0:
            raise ValueError("msd at lag 0 must be 0")
        return self

    @classmethod
    def from_series(
        cls,
        series: np.ndarray,
        batches: Optional[int] = None,
        lags: Tuple[int, ...] = (),
        provenance: Optional[Dict[str, Any]] = None,
    ) -> "SeriesSummary":
        """Summarize a series; batch means run on the per-step coordinate sum, the MSD on the full vector"""
        from ..validation.stats import batch_means, msd

        values = np.asarray(series, dtype=float)
        scalar = values if values.ndim == 1 else values.reshape(len(values), -1).sum(axis=1)
        n = len(scalar)
        b = batches if batches is not None else max(2, int(np.floor(n ** (1.0 / 3.0))))
        mean, sigma2 = batch_means(scalar, b)
        return cls(
            n=n,
            mean=mean,
            batch_means_variance=sigma2,
            batches=b,
            msd_curve=msd(values, lags) if lags else {},
            provenance=provenance or {},
        )


class OracleResult(BaseModel):
    """Outcome of one validation oracle"""

    name: str
    passed: bool
    residual: float
    threshold: float
    seconds: float = 0.0
    details: Dict[str, Any] = Field(default_factory=dict)
