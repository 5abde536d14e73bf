"""Discrete energy landscapes on Z^d and on finite tori"""

import itertools
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from ..core.exceptions import ConfigurationError, ContractViolation

# f(x, direction) -> energy change contributed by one factor
FactorTerm = Callable[[np.ndarray, np.ndarray], np.ndarray]


class DiscretePotential:
    """Energy U on Z^d, or on the torus (Z/NZ)^d when ``torus_side`` is given.

    ``func`` receives integer arrays of shape ``(..., d)`` and returns energies of shape ``(...)``.
    On a torus, points are mapped to the centered representative in ``[-N/2, N/2)`` before
    ``func`` is called, so the potential is N-periodic per coordinate.

    For sampling on Z^d the caller is responsible for ``sum exp(-U)`` being finite.
    """

    def __init__(
        self,
        func: Callable[[np.ndarray], np.ndarray],
        dim: int,
        torus_side: Optional[int] = None,
        factor_terms: Optional[Sequence[FactorTerm]] = None,
        name: str = "custom",
    ):
        if dim < 1:
            raise ConfigurationError("dimension must be positive")
        if torus_side is not None and torus_side < 1:
            raise ConfigurationError("torus side must be positive")
        self._func = func
        self.dim = dim
        self.torus_side = torus_side
        self.factor_terms = list(factor_terms) if factor_terms is not None else None
        self.name = name

    def __repr__(self) -> str:
        domain = f"torus {self.torus_side}" if self.torus_side else "Z"
        return f"DiscretePotential({self.name!r}, dim={self.dim}, {domain})"

    @property
    def is_torus(self) -> bool:
        return self.torus_side is not None

    def wrap(self, x: np.ndarray) -> np.ndarray:
        """Centered representative of x on the torus (identity on Z^d)"""
        x = np.asarray(x, dtype=np.int64)
        if self.torus_side is None:
            return x
        n = self.torus_side
        return np.mod(x + n // 2, n) - n // 2

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        x = self.wrap(x)
        if x.shape[-1] != self.dim:
            raise ContractViolation(f"expected points of dimension {self.dim}, got {x.shape[-1]}")
        return np.asarray(self._func(x), dtype=float)

    __call__ = evaluate

    def increment(self, x: np.ndarray, axis: int, s: int) -> float:
        return increment(self, x, axis, s)

    def factor_increments(self, x: np.ndarray, direction: np.ndarray) -> np.ndarray:
        """Values f_j(x, direction) of every factor term"""
        if not self.factor_terms:
            raise ConfigurationError(f"potential {self.name!r} has no factor terms")
        x = self.wrap(x)
        return np.array([float(term(x, direction)) for term in self.factor_terms])

    def verify_factorization(self, box: int) -> float:
        """Max |sum_j f_j(x, s e_i) - (U(x + s e_i) - U(x))| over the box [-box, box]^d"""
        if not self.factor_terms:
            raise ConfigurationError(f"potential {self.name!r} has no factor terms")
        points = np.array(list(itertools.product(range(-box, box + 1), repeat=self.dim)), dtype=np.int64)
        worst = 0.0
        for axis in range(self.dim):
            for s in (-1, 1):
                direction = np.zeros_like(points)
                direction[:, axis] = s
                wrapped = self.wrap(points)
                total = sum(np.asarray(term(wrapped, direction), dtype=float) for term in self.factor_terms)
                exact = self.evaluate(points + direction) - self.evaluate(points)
                worst = max(worst, float(np.max(np.abs(total - exact))))
        return worst

    def verify_periodicity(self) -> float:
        """Max |U(x + N e_i) - U(x)| over one period cell; 0.0 on Z^d"""
        if self.torus_side is None:
            return 0.0
        n = self.torus_side
        cell = np.arange(n) - n // 2
        points = np.array(list(itertools.product(cell, repeat=self.dim)), dtype=np.int64)
        base = np.asarray(self._func(points), dtype=float)
        worst = 0.0
        for axis in range(self.dim):
            shifted = points.copy()
            shifted[:, axis] += n
            worst = max(worst, float(np.max(np.abs(self.evaluate(shifted) - base))))
        return worst


def increment(U: DiscretePotential, x: np.ndarray, axis: int, s: int) -> float:
    """U(x + s e_axis) - U(x), with torus wrapping if applicable"""
    if not 0 <= axis < U.dim:
        raise ContractViolation(f"axis {axis} out of range for dimension {U.dim}")
    if s not in (-1, 1):
        raise ContractViolation(f"step sign must be +1 or -1, got {s}")
    x = np.asarray(x, dtype=np.int64)
    moved = x.copy()
    moved[axis] += s
    return float(U.evaluate(moved) - U.evaluate(x))


def coordinate_sum(
    profile: Callable[[np.ndarray], np.ndarray],
    dim: int,
    torus_side: Optional[int] = None,
    name: str = "custom",
) -> DiscretePotential:
    """U(x) = sum_i profile(x_i), with one factor term per coordinate"""
    wrap = _wrapper(torus_side)

    def func(x: np.ndarray) -> np.ndarray:
        return np.sum(profile(x), axis=-1)

    def make_term(axis: int) -> FactorTerm:
        def term(x: np.ndarray, direction: np.ndarray) -> np.ndarray:
            x = np.asarray(x)
            start = x[..., axis]
            end = wrap(start + np.asarray(direction)[..., axis])
            return profile(end) - profile(start)

        return term

    return DiscretePotential(
        func, dim, torus_side=torus_side, factor_terms=[make_term(i) for i in range(dim)], name=name
    )


def additive(components: Sequence[DiscretePotential], name: str = "sum") -> DiscretePotential:
    """U = U_1 + ... + U_m with the increment of each U_j as factor term j"""
    if not components:
        raise ConfigurationError("need at least one component")
    dim = components[0].dim
    side = components[0].torus_side
    if any(c.dim != dim or c.torus_side != side for c in components):
        raise ConfigurationError("components must share dimension and domain")

    def func(x: np.ndarray) -> np.ndarray:
        return sum(c.evaluate(x) for c in components)

    def make_term(component: DiscretePotential) -> FactorTerm:
        def term(x: np.ndarray, direction: np.ndarray) -> np.ndarray:
            return component.evaluate(np.asarray(x) + direction) - component.evaluate(x)

        return term

    return DiscretePotential(func, dim, torus_side=side, factor_terms=[make_term(c) for c in components], name=name)


def _wrapper(torus_side: Optional[int]) -> Callable[[np.ndarray], np.ndarray]:
    if torus_side is None:
        return lambda k: k
    return lambda k: np.mod(k + torus_side // 2, torus_side) - torus_side // 2


def doublewell_profile(h1: float, h2: float, w: int) -> Callable[[np.ndarray], np.ndarray]:
    """Piecewise-linear landscape of period 4w: well at 0, barriers h1 at -w and h2 at +w"""
    if w < 1:
        raise ConfigurationError("doublewell width must be at least 1")

    def profile(k: np.ndarray) -> np.ndarray:
        r = np.mod(np.asarray(k) + 2 * w, 4 * w) - 2 * w
        left_up = h1 * (-r) / w
        left_down = h1 * (2 * w + r) / w
        right_up = h2 * r / w
        right_down = h2 * (2 * w - r) / w
        return np.where(
            r < -w, left_down, np.where(r <= 0, left_up, np.where(r <= w, right_up, right_down))
        ).astype(float)

    return profile


def _parse_params(text: str) -> List[float]:
    if not text:
        return []
    return [float(part) for part in text.split(",")]


def _quadratic(params, dim, side):
    (k,) = params or [1.0]
    return coordinate_sum(lambda x: k * np.asarray(x, dtype=float) ** 2, dim, side, name="quadratic")


def _abs(params, dim, side):
    (k,) = params or [1.0]
    return coordinate_sum(lambda x: k * np.abs(np.asarray(x, dtype=float)), dim, side, name="abs")


def _flat(params, dim, side):
    return coordinate_sum(lambda x: np.zeros(np.shape(x)), dim, side, name="flat")


def _doublewell(params, dim, side):
    if len(params) != 3:
        raise ConfigurationError("doublewell needs h1,h2,w")
    h1, h2, w = params
    if w != int(w):
        raise ConfigurationError("doublewell width must be an integer")
    return coordinate_sum(doublewell_profile(h1, h2, int(w)), dim, side, name="doublewell")


def _tilted(params, dim, side):
    k, c = params or [1.0, 0.5]
    if abs(c) >= k:
        raise ConfigurationError("tilted needs |c| < k to stay confining")
    slope = _abs([k], dim, side)
    tilt = coordinate_sum(lambda x: c * np.asarray(x, dtype=float), dim, side, name="tilt")
    return additive([slope, tilt], name="tilted")


REGISTRY: Dict[str, Callable] = {
    "flat": _flat,
    "quadratic": _quadratic,
    "abs": _abs,
    "doublewell": _doublewell,
    "tilted": _tilted,
}


def from_name(spec: str, dim: int = 1, torus_side: Optional[int] = None) -> DiscretePotential:
    """Build a registered potential from ``name[:p1,p2,...]``"""
    name, _, params = spec.partition(":")
    factory = REGISTRY.get(name.strip())
    if factory is None:
        raise ConfigurationError(f"unknown discrete potential {name!r}; known: {sorted(REGISTRY)}")
    try:
        values = _parse_params(params)
    except ValueError as e:
        raise ConfigurationError(f"bad parameters for {name!r}: {params!r}") from e
    potential = factory(values, dim, torus_side)
    potential.name = spec
    return potential
