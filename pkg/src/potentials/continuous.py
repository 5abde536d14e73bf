"""Smooth potentials H on R^d"""

from typing import Callable, Dict, Optional

import numpy as np

from ..core.exceptions import ConfigurationError


class ContinuousPotential:
    """Value and gradient of a smooth potential.

    Both callables accept arrays of shape ``(..., d)``; ``value`` returns shape ``(...)`` and
    ``gradient`` returns shape ``(..., d)``. ``lipschitz`` optionally gives a Lipschitz constant of
    the gradient on the ball of the given radius around a point.
    """

    def __init__(
        self,
        value: Callable[[np.ndarray], np.ndarray],
        gradient: Callable[[np.ndarray], np.ndarray],
        dim: int,
        lipschitz: Optional[Callable[[np.ndarray, float], float]] = None,
        name: str = "custom",
    ):
        if dim < 1:
            raise ConfigurationError("dimension must be positive")
        self._value = value
        self._gradient = gradient
        self.dim = dim
        self.lipschitz = lipschitz
        self.name = name

    def __repr__(self) -> str:
        return f"ContinuousPotential({self.name!r}, dim={self.dim})"

    def value(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(self._value(np.asarray(x, dtype=float)), dtype=float)

    def gradient(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(self._gradient(np.asarray(x, dtype=float)), dtype=float)

    def check_gradient(self, points: np.ndarray, step: float = 1e-5) -> float:
        """Largest relative error between the gradient and centered finite differences"""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        worst = 0.0
        for point in points:
            analytic = self.gradient(point)
            numeric = np.empty(self.dim)
            for i in range(self.dim):
                e = np.zeros(self.dim)
                e[i] = step
                numeric[i] = (float(self.value(point + e)) - float(self.value(point - e))) / (2 * step)
            scale = max(1.0, float(np.max(np.abs(analytic))))
            worst = max(worst, float(np.max(np.abs(analytic - numeric))) / scale)
        return worst


def _quadratic(dim: int) -> ContinuousPotential:
    return ContinuousPotential(
        value=lambda x: 0.5 * np.sum(x**2, axis=-1),
        gradient=lambda x: np.array(x, dtype=float),
        dim=dim,
        lipschitz=lambda y, radius: 1.0,
        name="quadratic",
    )


def _quartic(dim: int) -> ContinuousPotential:
    def lipschitz(y: np.ndarray, radius: float) -> float:
        reach = float(np.linalg.norm(y)) + radius
        return 3.0 * reach**2

    return ContinuousPotential(
        value=lambda x: 0.25 * np.sum(x**2, axis=-1) ** 2,
        gradient=lambda x: np.sum(x**2, axis=-1, keepdims=True) * x,
        dim=dim,
        lipschitz=lipschitz,
        name="quartic",
    )


def _doublewell(dim: int) -> ContinuousPotential:
    def lipschitz(y: np.ndarray, radius: float) -> float:
        reach = float(np.max(np.abs(y))) + radius
        return abs(12.0 * reach**2 - 4.0) + 4.0

    return ContinuousPotential(
        value=lambda x: np.sum((x**2 - 1.0) ** 2, axis=-1),
        gradient=lambda x: 4.0 * x * (x**2 - 1.0),
        dim=dim,
        lipschitz=lipschitz,
        name="doublewell",
    )


def _flat(dim: int) -> ContinuousPotential:
    return ContinuousPotential(
        value=lambda x: np.zeros(np.shape(x)[:-1]),
        gradient=lambda x: np.zeros(np.shape(x)),
        dim=dim,
        lipschitz=lambda y, radius: 0.0,
        name="flat",
    )


REGISTRY: Dict[str, Callable[[int], ContinuousPotential]] = {
    "flat": _flat,
    "quadratic": _quadratic,
    "quartic": _quartic,
    "doublewell": _doublewell,
}


def from_name(name: str, dim: int = 1) -> ContinuousPotential:
    """Build a registered smooth potential"""
    factory = REGISTRY.get(name.strip())
    if factory is None:
        raise ConfigurationError(f"unknown continuous potential {name!r}; known: {sorted(REGISTRY)}")
    return factory(dim)
