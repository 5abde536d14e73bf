"""Kinetic walks: position update from the mean of old and new velocity

Positions have shape ``(..., dim)`` and velocities the same shape. ``grad`` maps positions to
the gradient of the potential.
"""

import math
from typing import Callable, Optional, Tuple

import numpy as np

from ..core.exceptions import DomainError
from ..core.models import OUMode

GradFunc = Callable[[np.ndarray], np.ndarray]
EnergyFunc = Callable[[np.ndarray], float]


def kinetic_walk_step(
    x: np.ndarray, v: np.ndarray, new_velocity: np.ndarray, delta: float
) -> Tuple[np.ndarray, np.ndarray]:
    """(x + delta (v + v') / 2, v')"""
    return x + 0.5 * delta * (v + new_velocity), new_velocity


def shifted_verlet_step(x: np.ndarray, v: np.ndarray, grad: GradFunc, delta: float) -> Tuple[np.ndarray, np.ndarray]:
    """Kick with the gradient at the half-drifted point, then move with the mean velocity"""
    new_velocity = v - delta * grad(x + 0.5 * delta * v)
    return kinetic_walk_step(x, v, new_velocity, delta)


def ricci_ciccotti_step(
    x: np.ndarray,
    v: np.ndarray,
    grad: GradFunc,
    delta: float,
    gamma: float,
    rng: np.random.Generator,
    ou_mode: OUMode = OUMode.EXACT,
) -> Tuple[np.ndarray, np.ndarray]:
    """Langevin variant of the shifted Verlet step.

    In exact mode the velocity update is the Ornstein-Uhlenbeck flow over delta with the
    half-drifted gradient frozen. In paper-literal mode drift factor and noise variance are both
    1 - exp(-gamma delta).
    """
    if delta <= 0:
        raise DomainError("delta must be positive")
    if gamma < 0:
        raise DomainError("gamma must be non-negative")
    force = grad(x + 0.5 * delta * v)
    if gamma == 0.0:
        return kinetic_walk_step(x, v, v - delta * force, delta)
    decay = math.exp(-gamma * delta)
    noise = rng.standard_normal(np.shape(v))
    if ou_mode == OUMode.PAPER_LITERAL:
        new_velocity = decay * v - (1.0 - decay) * force + math.sqrt(1.0 - decay) * noise
    else:
        new_velocity = decay * v - (1.0 - decay) / gamma * force + math.sqrt(-math.expm1(-2.0 * gamma * delta)) * noise
    return kinetic_walk_step(x, v, new_velocity, delta)


def energy_drift(
    x0: np.ndarray,
    v0: np.ndarray,
    energy: EnergyFunc,
    grad: GradFunc,
    delta: float,
    n_steps: int,
    box: Optional[float] = None,
) -> float:
    """max_n |H(X_n, V_n) - H(X_0, V_0)| along shifted Verlet, with H = U + |v|^2 / 2"""
    x = np.array(x0, dtype=float)
    v = np.array(v0, dtype=float)

    def hamiltonian(x, v) -> float:
        return float(energy(x)) + 0.5 * float(np.sum(v * v))

    start = hamiltonian(x, v)
    worst = 0.0
    for _ in range(n_steps):
        x, v = shifted_verlet_step(x, v, grad, delta)
        if box is not None:
            x = np.mod(x, box)
        worst = max(worst, abs(hamiltonian(x, v) - start))
    return worst
