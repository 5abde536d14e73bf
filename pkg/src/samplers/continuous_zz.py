"""Continuous-time Zig-Zag process by thinning, and the lattice embedding used for scaling checks"""

import math
from abc import ABC, abstractmethod
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..core.exceptions import BoundViolation, ConfigurationError, DomainError, StepCapExceeded
from ..core.models import PDMPState
from ..potentials.continuous import ContinuousPotential
from ..potentials.discrete import DiscretePotential
from ..utils.logger import logger
from ..validation.stats import wasserstein1
from .zigzagd import run_chains_d

RATIO_TOLERANCE = 1e-9
MAX_EVENTS = 10**7


def _positive_rates(H: ContinuousPotential, y: np.ndarray, w: np.ndarray) -> np.ndarray:
    return np.maximum(w * H.gradient(y), 0.0)


class RateBound(ABC):
    """Affine-in-time majorants c_i + m_i t of the flip rates on a horizon"""

    @abstractmethod
    def bounds(self, H: ContinuousPotential, state: PDMPState) -> Tuple[np.ndarray, np.ndarray, float]:
        """(c, m, horizon) valid from ``state`` for times in [0, horizon]"""

    def verify(self, H: ContinuousPotential, state: PDMPState, n_grid: int = 100) -> float:
        """Largest excess of the true rate over the majorant on the grid; <= 0 when valid"""
        c, m, horizon = self.bounds(H, state)
        worst = -math.inf
        for t in np.linspace(0.0, horizon, n_grid):
            rates = _positive_rates(H, state.y + t * state.w, state.w)
            worst = max(worst, float(np.max(rates - (c + m * t))))
        return worst


class LipschitzRateBound(RateBound):
    """c_i = (w_i d_iH(y))_+ and m_i = L sqrt(d), with L a Lipschitz constant of grad H.

    When ``lipschitz`` is not given, the potential's own local constant on the ball of radius
    ``horizon * sqrt(d)`` around y is used.
    """

    def __init__(self, lipschitz: Optional[float] = None, horizon: float = 1.0):
        if horizon <= 0:
            raise DomainError("horizon must be positive")
        self.lipschitz = lipschitz
        self.horizon = horizon

    def bounds(self, H: ContinuousPotential, state: PDMPState) -> Tuple[np.ndarray, np.ndarray, float]:
        reach = self.horizon * math.sqrt(H.dim)
        if self.lipschitz is not None:
            L = self.lipschitz
        elif H.lipschitz is not None:
            L = float(H.lipschitz(state.y, reach))
        else:
            raise ConfigurationError(f"potential {H.name!r} has no Lipschitz constant; pass one explicitly")
        c = _positive_rates(H, state.y, state.w)
        m = np.full(H.dim, L * math.sqrt(H.dim))
        return c, m, self.horizon


def invert_affine(c: float, m: float, e: float) -> float:
    """Smallest t >= 0 with c t + m t^2 / 2 = e, or inf"""
    if m > 0.0:
        return (math.sqrt(c * c + 2.0 * m * e) - c) / m
    if c > 0.0:
        return e / c
    return math.inf


class ZigZagPath:
    """Piecewise-linear trajectory from its initial state and flip events"""

    def __init__(self, init: PDMPState, events: List[Tuple[float, int]], final: PDMPState, proposals: int = 0):
        self.init = init
        self.events = events
        self.final = final
        self.proposals = proposals

    def __len__(self) -> int:
        return len(self.events)

    def position_at(self, t: float) -> np.ndarray:
        if not self.init.t <= t <= self.final.t:
            raise DomainError(f"time {t} outside [{self.init.t}, {self.final.t}]")
        y = self.init.y.copy()
        w = self.init.w.copy()
        last = self.init.t
        for time, coordinate in self.events:
            if time > t:
                break
            y += (time - last) * w
            w[coordinate] = -w[coordinate]
            last = time
        return y + (t - last) * w


def simulate_zz(
    H: ContinuousPotential,
    bound: RateBound,
    t_end: float,
    init: PDMPState,
    rng: np.random.Generator,
    max_events: int = MAX_EVENTS,
    until_all_flipped: bool = False,
) -> ZigZagPath:
    """Zig-Zag path on [init.t, t_end] by superposition of one thinned clock per coordinate.

    With ``until_all_flipped`` the path stops early once every coordinate has flipped at least once.
    """
    if init.y.shape[0] != H.dim:
        raise ConfigurationError(f"state dimension {init.y.shape[0]} does not match potential dimension {H.dim}")
    y = init.y.copy()
    w = init.w.copy()
    t = init.t
    events: List[Tuple[float, int]] = []
    proposals = 0
    flipped = set()
    while t < t_end:
        c, m, horizon = bound.bounds(H, PDMPState(y=y, w=w, t=t))
        exponentials = rng.exponential(size=H.dim)
        times = np.array([invert_affine(c[i], m[i], exponentials[i]) for i in range(H.dim)])
        i = int(np.argmin(times))
        tau = float(times[i])
        if tau > horizon or t + tau > t_end:
            step = min(horizon, t_end - t)
            y += step * w
            t += step
            continue
        y += tau * w
        t += tau
        proposals += 1
        majorant = c[i] + m[i] * tau
        ratio = max(w[i] * float(H.gradient(y)[i]), 0.0) / majorant
        if ratio > 1.0 + RATIO_TOLERANCE:
            raise BoundViolation(f"flip rate exceeds its majorant on coordinate {i} at t={t}", ratio=ratio)
        if rng.random() < ratio:
            w[i] = -w[i]
            events.append((t, i))
            flipped.add(i)
            if until_all_flipped and len(flipped) == H.dim:
                break
            if len(events) >= max_events:
                raise StepCapExceeded(f"more than {max_events} flips before t={t_end}", len(events), (y, w, t))
    return ZigZagPath(init, events, PDMPState(y=y, w=w, t=t), proposals)


def first_event_times(
    H: ContinuousPotential,
    bound: RateBound,
    init: PDMPState,
    n: int,
    rng: np.random.Generator,
    t_max: float = 1e6,
) -> np.ndarray:
    """Time until the first flip of each coordinate, for ``n`` independent runs from ``init``.

    Returns an array of shape (n, d); coordinates that did not flip before ``t_max`` hold inf.
    """
    out = np.full((n, H.dim), math.inf)
    for k in range(n):
        path = simulate_zz(H, bound, init.t + t_max, init, rng, until_all_flipped=True)
        for time, coordinate in path.events:
            if math.isinf(out[k, coordinate]):
                out[k, coordinate] = time - init.t
            if not np.any(np.isinf(out[k])):
                break
    return out


def embed_discrete(H: ContinuousPotential, eps: float, torus_side: Optional[int] = None) -> DiscretePotential:
    """U_eps(k) = H(eps k)"""
    if eps <= 0:
        raise DomainError(f"eps must be positive, got {eps}")
    return DiscretePotential(
        lambda k: H.value(eps * np.asarray(k, dtype=float)),
        dim=H.dim,
        torus_side=torus_side,
        name=f"{H.name}@{eps:g}",
    )


def discrete_marginal(
    H: ContinuousPotential, eps: float, t_probe: float, n_samples: int, rng: np.random.Generator, y0=None, w0=None
) -> np.ndarray:
    """Samples of eps X_{floor(t/eps)} for the walk under U_eps, shape (n_samples, d)"""
    y0 = np.zeros(H.dim) if y0 is None else np.asarray(y0, dtype=float)
    w0 = np.ones(H.dim, dtype=np.int64) if w0 is None else np.asarray(w0, dtype=np.int64)
    x0 = np.tile(np.rint(y0 / eps).astype(np.int64), (n_samples, 1))
    v0 = np.tile(w0, (n_samples, 1))
    x, _ = run_chains_d(embed_discrete(H, eps), x0, v0, int(math.floor(t_probe / eps)), rng)
    return eps * x


def continuous_marginal(
    H: ContinuousPotential,
    t_probe: float,
    n_samples: int,
    rng: np.random.Generator,
    bound: Optional[RateBound] = None,
    y0=None,
    w0=None,
) -> np.ndarray:
    """Samples of Y_t, shape (n_samples, d)"""
    bound = bound or LipschitzRateBound()
    init = PDMPState(
        y=np.zeros(H.dim) if y0 is None else y0,
        w=np.ones(H.dim) if w0 is None else w0,
    )
    return np.array([simulate_zz(H, bound, t_probe, init, rng).final.y for _ in range(n_samples)])


def coordinate_w1(a: np.ndarray, b: np.ndarray) -> float:
    """Sum of per-coordinate W1 distances between two (n, d) sample sets"""
    return float(sum(wasserstein1(a[:, i], b[:, i]) for i in range(a.shape[1])))


def scaling_gap(
    H: ContinuousPotential,
    eps_list: Sequence[float],
    t_probe: float,
    n_samples: int,
    rng: np.random.Generator,
    bound: Optional[RateBound] = None,
) -> List[Tuple[float, float]]:
    """W1 distance between the rescaled walk and the Zig-Zag process at time t_probe, per eps"""
    reference = continuous_marginal(H, t_probe, n_samples, rng, bound)
    gaps = []
    for eps in eps_list:
        walk = discrete_marginal(H, eps, t_probe, n_samples, rng)
        gap = coordinate_w1(walk, reference)
        logger.debug(f"scaling gap at eps={eps}: {gap:.4g}")
        gaps.append((float(eps), gap))
    return gaps


def scaling_noise_floor(
    H: ContinuousPotential, eps: float, t_probe: float, n_samples: int, rng: np.random.Generator
) -> float:
    """W1 between two independent sample sets of the same rescaled walk"""
    first = discrete_marginal(H, eps, t_probe, n_samples, rng)
    second = discrete_marginal(H, eps, t_probe, n_samples, rng)
    return coordinate_w1(first, second)
