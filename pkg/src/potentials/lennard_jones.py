"""Periodic Lennard-Jones system and its short/long-range force split

The energy is U(x) = U0 * sum_i sum_{j != i} W(|x_i - x_j|) with minimum-image distances in the
cube of side a, W(h) = [(r/h)^12 - (r/h)^6] * chi(h/a). Both ordered pairs are counted, so the
gradient with respect to x_i is 2 * U0 * sum_j W'(h_ij) (x_i - x_j) / h_ij.
"""

import copy
import math
from pathlib import Path
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

from ..core.exceptions import ConfigurationError, SingularityError

SAFETY_FACTOR = 1.01
VERLET_SKIN = 0.3


def cutoff(s: np.ndarray) -> np.ndarray:
    """Quintic smoothstep profile: 1 on [0, 1/2], 0 on [1, inf), C^2 in between"""
    t = np.clip(2.0 * np.asarray(s, dtype=float) - 1.0, 0.0, 1.0)
    return 1.0 - t**3 * (10.0 - 15.0 * t + 6.0 * t**2)


def cutoff_derivative(s: np.ndarray) -> np.ndarray:
    t = np.clip(2.0 * np.asarray(s, dtype=float) - 1.0, 0.0, 1.0)
    return -60.0 * t**2 * (1.0 - t) ** 2


def pair_energy(h: np.ndarray, r: float, a: float) -> np.ndarray:
    """W(h)"""
    h = np.asarray(h, dtype=float)
    ratio6 = (r / h) ** 6
    return (ratio6**2 - ratio6) * cutoff(h / a)


def pair_derivative(h: np.ndarray, r: float, a: float) -> np.ndarray:
    """W'(h)"""
    h = np.asarray(h, dtype=float)
    ratio6 = (r / h) ** 6
    core = ratio6**2 - ratio6
    core_prime = (-12.0 * ratio6**2 + 6.0 * ratio6) / h
    return core_prime * cutoff(h / a) + core * cutoff_derivative(h / a) / a


class LJSystem(BaseModel):
    """M particles in the periodic cube [0, a)^3"""

    box_side: float = Field(gt=0)
    r: float = Field(gt=0)
    U0: float = Field(ge=0)
    R: float = Field(gt=0)
    positions: np.ndarray

    class Config:
        arbitrary_types_allowed = True
        json_schema_extra = {"example": {"box_side": 8.0, "r": 1.0, "U0": 1.0, "R": 3.0}}

    @field_validator("positions", mode="before")
    @classmethod
    def _as_matrix(cls, value):
        return np.asarray(value, dtype=float).reshape(-1, 3)

    @model_validator(mode="after")
    def _wrap(self):
        self.positions = np.mod(self.positions, self.box_side)
        return self

    @property
    def M(self) -> int:
        return int(self.positions.shape[0])

    @property
    def degenerate_split(self) -> bool:
        """R >= a puts every interaction in the short-range part"""
        return self.R >= self.box_side

    def with_positions(self, positions: np.ndarray) -> "LJSystem":
        return self.model_copy(update={"positions": np.mod(np.asarray(positions, dtype=float), self.box_side)})


def minimum_image(positions: np.ndarray, box_side: float) -> Tuple[np.ndarray, np.ndarray]:
    """Displacements x_i - x_j (M, M, 3) and distances (M, M) under periodic wrapping"""
    diff = positions[:, None, :] - positions[None, :, :]
    diff -= box_side * np.round(diff / box_side)
    return diff, np.linalg.norm(diff, axis=-1)


def _off_diagonal_distances(distances: np.ndarray) -> np.ndarray:
    """Distances with the diagonal set to +inf; raises on coincident particles"""
    distances = distances.copy()
    np.fill_diagonal(distances, np.inf)
    if np.any(distances == 0.0):
        i, j = np.argwhere(distances == 0.0)[0]
        raise SingularityError(f"particles {i} and {j} coincide")
    return distances


def lj_energy(sys: LJSystem) -> float:
    """Total energy with both ordered pairs counted; coincident particles raise even at U0 = 0"""
    if sys.M < 2:
        return 0.0
    _, distances = minimum_image(sys.positions, sys.box_side)
    h = _off_diagonal_distances(distances)
    if sys.U0 == 0.0:
        return 0.0
    return float(sys.U0 * np.sum(pair_energy(h, sys.r, sys.box_side)))


def _pair_coefficients(sys: LJSystem, h: np.ndarray) -> np.ndarray:
    """2 U0 W'(h) / h, zero on the diagonal"""
    coefficient = 2.0 * sys.U0 * pair_derivative(h, sys.r, sys.box_side) / h
    coefficient[~np.isfinite(h)] = 0.0
    return coefficient


def lj_gradient(sys: LJSystem) -> np.ndarray:
    """Full gradient of the energy, shape (M, 3)"""
    if sys.M < 2:
        return np.zeros_like(sys.positions)
    diff, distances = minimum_image(sys.positions, sys.box_side)
    h = _off_diagonal_distances(distances)
    if sys.U0 == 0.0:
        return np.zeros_like(sys.positions)
    return np.einsum("ij,ijk->ik", _pair_coefficients(sys, h), diff)


def rate_bound_constant(r: float, box_side: float, R: float, U0: float) -> float:
    """C_R: safety factor times 2 U0 sup |W'| on [R/2, a], from a grid of step at most r/1000"""
    if U0 == 0.0 or R >= box_side:
        return 0.0
    lower = R / 2.0
    count = int(math.ceil((box_side - lower) / (r / 1000.0))) + 1
    grid = np.linspace(lower, box_side, max(count, 2))
    return SAFETY_FACTOR * 2.0 * U0 * float(np.max(np.abs(pair_derivative(grid, r, box_side))))


def neighbor_count(positions: np.ndarray, box_side: float, R: float) -> float:
    """Average number of other particles within distance R"""
    if len(positions) < 2:
        return 0.0
    _, distances = minimum_image(positions, box_side)
    np.fill_diagonal(distances, np.inf)
    return float(np.mean(np.sum(distances < R, axis=1)))


class VerletList:
    """Pairs within R + skin of a reference configuration; never modified, ``advanced`` returns a new list"""

    def __init__(self, R: float, box_side: float, rebuild_every: int = 10, skin: Optional[float] = None):
        self.R = R
        self.box_side = box_side
        self.rebuild_every = max(1, rebuild_every)
        self.skin = VERLET_SKIN * R if skin is None else skin
        self.pairs_i = np.empty(0, dtype=np.int64)
        self.pairs_j = np.empty(0, dtype=np.int64)
        self.reference: Optional[np.ndarray] = None
        self.age = 0
        self.builds = 0

    def _replace(self, **changes) -> "VerletList":
        new = copy.copy(self)
        new.__dict__.update(changes)
        return new

    def built(self, positions: np.ndarray) -> "VerletList":
        _, distances = minimum_image(positions, self.box_side)
        i, j = np.nonzero(np.triu(distances < self.R + self.skin, k=1))
        return self._replace(pairs_i=i, pairs_j=j, reference=positions.copy(), age=0, builds=self.builds + 1)

    def needs_rebuild(self, positions: np.ndarray) -> bool:
        if self.reference is None or self.age >= self.rebuild_every:
            return True
        moved = positions - self.reference
        moved -= self.box_side * np.round(moved / self.box_side)
        return float(np.max(np.linalg.norm(moved, axis=1))) > self.skin / 2.0

    def advanced(self, positions: np.ndarray) -> "VerletList":
        """The list to use at ``positions``: rebuilt if stale, then aged by one use"""
        current = self.built(positions) if self.needs_rebuild(positions) else self
        return current._replace(age=current.age + 1)


class ForceSplit:
    """Gradient split grad U = F0 + sum_{i != j} lift(G_ij, i) with |G_ij| <= C_R

    Field evaluations only read the system. With a Verlet list, F0 replaces the cached list, which
    changes which pairs are summed but not the value returned.
    """

    def __init__(self, sys: LJSystem, verlet_every: int = 0):
        self.sys = sys
        self.C_R = rate_bound_constant(sys.r, sys.box_side, sys.R, sys.U0)
        self.nR_estimate = neighbor_count(sys.positions, sys.box_side, sys.R)
        self.verlet = VerletList(sys.R, sys.box_side, verlet_every) if verlet_every > 0 else None

    @property
    def degenerate(self) -> bool:
        return self.sys.degenerate_split

    def F0(self, positions: np.ndarray) -> np.ndarray:
        """Short-range gradient part, shape (M, 3)"""
        sys = self.sys
        if len(positions) < 2 or sys.U0 == 0.0:
            return np.zeros_like(positions)
        if self.degenerate:
            return lj_gradient(sys.with_positions(positions))
        if self.verlet is not None:
            return self._F0_from_list(positions)
        diff, distances = minimum_image(positions, sys.box_side)
        h = _off_diagonal_distances(distances)
        coefficient = _pair_coefficients(sys, h) * cutoff(h / sys.R)
        return np.einsum("ij,ijk->ik", coefficient, diff)

    def _F0_from_list(self, positions: np.ndarray) -> np.ndarray:
        sys = self.sys
        verlet = self.verlet.advanced(positions)
        # the cached list is replaced, never modified
        self.verlet = verlet
        i, j = verlet.pairs_i, verlet.pairs_j
        diff = positions[i] - positions[j]
        diff -= sys.box_side * np.round(diff / sys.box_side)
        h = np.linalg.norm(diff, axis=1)
        if np.any(h == 0.0):
            raise SingularityError("coincident particles in neighbor list")
        coefficient = 2.0 * sys.U0 * pair_derivative(h, sys.r, sys.box_side) / h * cutoff(h / sys.R)
        contribution = coefficient[:, None] * diff
        force = np.zeros_like(positions)
        np.add.at(force, i, contribution)
        np.add.at(force, j, -contribution)
        return force

    def G(self, positions: np.ndarray, i: int, j: int) -> np.ndarray:
        """Long-range field of the ordered pair (i, j) acting on particle i"""
        sys = self.sys
        if i == j or self.degenerate or sys.U0 == 0.0:
            return np.zeros(3)
        diff = positions[i] - positions[j]
        diff -= sys.box_side * np.round(diff / sys.box_side)
        h = float(np.linalg.norm(diff))
        if h == 0.0:
            raise SingularityError(f"particles {i} and {j} coincide")
        weight = 1.0 - float(cutoff(h / sys.R))
        if weight == 0.0:
            return np.zeros(3)
        return 2.0 * sys.U0 * float(pair_derivative(h, sys.r, sys.box_side)) * weight / h * diff

    def all_pair_fields(self, positions: np.ndarray) -> np.ndarray:
        """G_ij for every ordered pair, shape (M, M, 3), zero on the diagonal"""
        sys = self.sys
        M = len(positions)
        if M < 2 or self.degenerate or sys.U0 == 0.0:
            return np.zeros((M, M, 3))
        diff, distances = minimum_image(positions, sys.box_side)
        h = _off_diagonal_distances(distances)
        coefficient = _pair_coefficients(sys, h) * (1.0 - cutoff(h / sys.R))
        return coefficient[:, :, None] * diff

    def particle_field(self, positions: np.ndarray, i: int) -> np.ndarray:
        """F_i = sum_j G_ij, the per-particle long-range field"""
        return sum((self.G(positions, i, j) for j in range(len(positions)) if j != i), np.zeros(3))


def lj_force_split(sys: LJSystem, verlet_every: int = 0) -> ForceSplit:
    """Split the gradient at radius R; R in [a/2, a) is rejected, R >= a degenerates"""
    if sys.box_side / 2.0 <= sys.R < sys.box_side:
        raise ConfigurationError(f"split radius R={sys.R} must be below a/2={sys.box_side / 2}")
    return ForceSplit(sys, verlet_every=verlet_every)


def lattice_configuration(M: int, box_side: float) -> np.ndarray:
    """First M sites of the smallest simple cubic lattice holding M particles"""
    per_side = max(1, int(math.ceil(M ** (1.0 / 3.0) - 1e-12)))
    spacing = box_side / per_side
    grid = np.array(
        [(ix, iy, iz) for ix in range(per_side) for iy in range(per_side) for iz in range(per_side)], dtype=float
    )
    return (grid[:M] + 0.5) * spacing


def read_xyz(path: Path) -> Tuple[int, float, np.ndarray]:
    """Read ``M``, box side ``a`` and an M x 3 position block"""
    lines = [line.strip() for line in Path(path).read_text(encoding="utf-8").splitlines() if line.strip()]
    if len(lines) < 2:
        raise ConfigurationError(f"{path}: expected particle count and box side")
    try:
        M = int(lines[0])
        box_side = float(lines[1])
        rows = [[float(value) for value in line.split()] for line in lines[2 : 2 + M]]
    except ValueError as e:
        raise ConfigurationError(f"{path}: {e}") from e
    if len(rows) != M or any(len(row) != 3 for row in rows):
        raise ConfigurationError(f"{path}: expected {M} lines of 'x y z'")
    return M, box_side, np.array(rows, dtype=float).reshape(M, 3)


def format_xyz(positions: np.ndarray, box_side: float) -> str:
    """Inverse of read_xyz, with 17 significant digits"""
    lines = [str(len(positions)), repr(float(box_side))]
    lines += [" ".join(f"{value:.17g}" for value in row) for row in positions]
    return "\n".join(lines) + "\n"