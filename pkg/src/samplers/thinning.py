"""Lazy Bernoulli sampling through nested upper bounds

A Bernoulli(q) event is drawn by walking a chain of bounds q_1 >= q_2 >= ... >= q_n = q,
cheapest first. Level k is only evaluated if every previous level accepted, and it accepts with
probability q_k / q_{k-1} using its own uniform. The composite law is exactly Bernoulli(q_n).
"""

import math
from typing import Any, Callable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, model_validator

from ..core.exceptions import ContractViolation, DomainError, DominanceViolation, StepCapExceeded

DOMINANCE_TOLERANCE = 1e-12

BoundFunction = Callable[[Any], float]


class BoundSpec(BaseModel):
    """Ordered bound functions, cheapest first; the last level is the exact probability"""

    levels: List[BoundFunction]
    labels: List[str] = []

    class Config:
        arbitrary_types_allowed = True

    @model_validator(mode="after")
    def _check_levels(self):
        if not self.levels:
            raise ValueError("need at least one level")
        if not self.labels:
            self.labels = [f"l{k + 1}" for k in range(len(self.levels))]
        if len(self.labels) != len(self.levels):
            raise ValueError("one label per level")
        return self

    @property
    def depth(self) -> int:
        return len(self.levels)


class ThinningOutcome(NamedTuple):
    accepted: bool
    levels_evaluated: int


def _level_value(spec: BoundSpec, k: int, state: Any, previous: float) -> float:
    value = float(spec.levels[k](state))
    if not 0.0 <= value <= 1.0:
        raise ContractViolation(f"level {spec.labels[k]} returned {value} outside [0, 1]")
    if value > previous + DOMINANCE_TOLERANCE:
        raise DominanceViolation(f"level {spec.labels[k]} = {value} exceeds previous bound {previous}")
    return value


def thinned_bernoulli(state: Any, spec: BoundSpec, rng: np.random.Generator) -> ThinningOutcome:
    """Bernoulli(q(state)) with one uniform per level, stopping at the first rejection"""
    previous = 1.0
    for k in range(spec.depth):
        value = _level_value(spec, k, state, previous)
        ratio = min(1.0, value / previous) if previous > 0.0 else 0.0
        if rng.random() >= ratio:
            return ThinningOutcome(False, k + 1)
        previous = value
    return ThinningOutcome(True, spec.depth)


def level_reach_probabilities(state: Any, spec: BoundSpec) -> Tuple[float, List[float]]:
    """Exact acceptance probability and the probability of evaluating each level"""
    reach = []
    previous = 1.0
    accepted = 1.0
    for k in range(spec.depth):
        reach.append(accepted)
        value = _level_value(spec, k, state, previous)
        ratio = min(1.0, value / previous) if previous > 0.0 else 0.0
        accepted *= ratio
        previous = value
    return accepted, reach


def acceptance_probability(state: Any, spec: BoundSpec) -> float:
    """Measure of the accepting region of the product of per-level uniforms"""
    return level_reach_probabilities(state, spec)[0]


def geometric_skip(q: float, u: float) -> int:
    """Index of the first firing of a constant bound q, from a single uniform u.

    Returns floor(ln u / ln(1 - q)), so P(K = k) = (1 - q)^k q.
    """
    if not 0.0 < q < 1.0:
        raise DomainError(f"bound must lie in (0, 1), got {q}")
    if not 0.0 < u < 1.0:
        raise DomainError(f"uniform must lie in (0, 1), got {u}")
    return int(math.floor(math.log(u) / math.log1p(-q)))


def flow_skip(
    phi: Callable[[Any], Any],
    q: Callable[[Any], float],
    state: Any,
    rng: np.random.Generator,
    cap: int,
) -> Tuple[int, Any]:
    """First k where a uniform falls below q(phi^k(state)), following the deterministic flow"""
    if cap < 1:
        raise DomainError("cap must be at least 1")
    current = state
    for k in range(cap):
        value = float(q(current))
        if not 0.0 <= value <= 1.0:
            raise ContractViolation(f"bound returned {value} outside [0, 1]")
        if rng.random() < value:
            return k, current
        current = phi(current)
    raise StepCapExceeded(f"no firing within {cap} flow steps", partial_count=cap, partial_state=current)


def bernoulli_from_bounds(
    state: Any,
    spec: Optional[BoundSpec],
    exact: Callable[[Any], float],
    rng: np.random.Generator,
    counts: Optional[Sequence[int]] = None,
) -> bool:
    """Draw Bernoulli(exact(state)), through ``spec`` when given, tallying level evaluations"""
    if spec is None:
        return bool(rng.random() < exact(state))
    outcome = thinned_bernoulli(state, spec, rng)
    if counts is not None:
        for k in range(outcome.levels_evaluated):
            counts[k] += 1
    return outcome.accepted
