"""Zig-Zag walk on the integers: transition, renewal quantities and escape experiment"""

import math
from typing import Callable, Dict, NamedTuple, Optional, Tuple

import numpy as np

from ..core.config import Config
from ..core.exceptions import ContractViolation, PreconditionError, StepCapExceeded
from ..core.models import EscapeConfig, Walk1D
from ..potentials.discrete import DiscretePotential
from ..utils.logger import logger

TAIL_TOLERANCE = 1e-14
TRUNCATION_CAP = 10**6
MEAN_TOLERANCE = 1e-10

# f(x, v) on integer arrays, vectorized
TestFunction = Callable[[np.ndarray, np.ndarray], np.ndarray]


def _energy(U: DiscretePotential, x) -> np.ndarray:
    return U.evaluate(np.asarray(x, dtype=np.int64)[..., None])


def move_probability(U: DiscretePotential, x, v) -> np.ndarray:
    """exp(-(U(x+v) - U(x))_+), vectorized over x and v"""
    x = np.asarray(x, dtype=np.int64)
    rise = _energy(U, x + v) - _energy(U, x)
    return np.exp(-np.maximum(rise, 0.0))


def step1d(s: Walk1D, U: DiscretePotential, u: float) -> Walk1D:
    """Move with probability exp(-(U(x+v)-U(x))_+), otherwise flip the velocity"""
    if U.dim != 1:
        raise ContractViolation(f"step1d needs a one-dimensional potential, got dimension {U.dim}")
    if u <= float(move_probability(U, s.x, s.v)):
        return Walk1D(x=s.x + s.v, v=s.v, step_count=s.step_count + 1)
    return Walk1D(x=s.x, v=-s.v, step_count=s.step_count + 1)


def scaled(U: DiscretePotential, eps: float) -> DiscretePotential:
    """U / eps on the same domain"""
    return DiscretePotential(lambda x: U.evaluate(x) / eps, U.dim, torus_side=U.torus_side, name=f"{U.name}/{eps}")


def run_chains(
    U: DiscretePotential,
    x0: np.ndarray,
    v0: np.ndarray,
    n_steps: int,
    rng: np.random.Generator,
    record: bool = False,
) -> Tuple[np.ndarray, np.ndarray]:
    """Advance independent chains in lockstep.

    Returns final (x, v), or full (n_steps + 1, chains) trajectories when ``record`` is set.
    """
    x = np.array(x0, dtype=np.int64, ndmin=1)
    v = np.array(v0, dtype=np.int64, ndmin=1)
    x, v = np.broadcast_arrays(x, v)
    x, v = x.copy(), v.copy()
    if record:
        xs = np.empty((n_steps + 1, x.size), dtype=np.int64)
        vs = np.empty_like(xs)
        xs[0], vs[0] = x, v
    for k in range(n_steps):
        move = rng.random(x.size) <= move_probability(U, x, v)
        x = np.where(move, x + v, x)
        v = np.where(move, v, -v)
        if record:
            xs[k + 1], vs[k + 1] = x, v
    if record:
        return xs, vs
    return x, v


def walk_path(
    U: DiscretePotential, x0: int, v0: int, n_steps: int, rng: np.random.Generator
) -> Tuple[np.ndarray, np.ndarray]:
    """Single long trajectory with cached move probabilities"""
    cache: Dict[Tuple[int, int], float] = {}
    xs = np.empty(n_steps + 1, dtype=np.int64)
    vs = np.empty(n_steps + 1, dtype=np.int64)
    x, v = int(x0), int(v0)
    xs[0], vs[0] = x, v
    uniforms = rng.random(n_steps)
    for k in range(n_steps):
        key = (x, v)
        q = cache.get(key)
        if q is None:
            q = float(move_probability(U, x, v))
            cache[key] = q
        if uniforms[k] <= q:
            x += v
        else:
            v = -v
        xs[k + 1], vs[k + 1] = x, v
    return xs, vs


def parity_invariant(xs: np.ndarray, vs: np.ndarray) -> np.ndarray:
    """(-1)^x v (-1)^k along a trajectory"""
    k = np.arange(len(xs))
    return (1 - 2 * np.mod(xs, 2)) * vs * (1 - 2 * np.mod(k, 2))


def auto_truncation(U: DiscretePotential) -> int:
    """Smallest doubling radius T with both tails exp(U(0) - U(+-T)) below the tolerance"""
    u0 = float(_energy(U, 0))
    radius = 16
    while radius < TRUNCATION_CAP:
        tails = np.exp(u0 - _energy(U, np.array([-radius, radius])))
        if np.all(tails < TAIL_TOLERANCE):
            return radius
        radius *= 2
    logger.warning(f"Truncation reached the cap of {TRUNCATION_CAP} terms for {U.name}")
    return TRUNCATION_CAP


class TruncatedLaw(NamedTuple):
    xs: np.ndarray
    pi: np.ndarray
    Z: float
    tail: float


def truncated_law(U: DiscretePotential, truncation: Optional[int] = None) -> TruncatedLaw:
    """pi(x) = exp(-U(x)) / Z on |x| <= truncation"""
    radius = truncation or auto_truncation(U)
    xs = np.arange(-radius, radius + 1, dtype=np.int64)
    energies = _energy(U, xs)
    u0 = float(_energy(U, 0))
    weights = np.exp(-(energies - u0))
    Z = float(np.sum(weights)) * math.exp(-u0)
    tail = float(max(math.exp(u0 - energies[0]), math.exp(u0 - energies[-1])))
    return TruncatedLaw(xs, weights / np.sum(weights), Z, tail)


def partition_sum(U: DiscretePotential, truncation: Optional[int] = None) -> float:
    return truncated_law(U, truncation).Z


def _g(f: TestFunction, xs: np.ndarray) -> np.ndarray:
    ones = np.ones_like(xs)
    return np.asarray(f(xs, ones), dtype=float) + np.asarray(f(xs, -ones), dtype=float)


def stationary_mean(U: DiscretePotential, f: TestFunction, truncation: Optional[int] = None) -> float:
    """mu(f) = sum_x pi(x) (f(x, 1) + f(x, -1)) / 2"""
    law = truncated_law(U, truncation)
    return float(np.sum(law.pi * _g(f, law.xs)) / 2.0)


def _check_centered(U: DiscretePotential, f: TestFunction, truncation: Optional[int]) -> None:
    mean = stationary_mean(U, f, truncation)
    if abs(mean) > MEAN_TOLERANCE:
        raise PreconditionError(f"test function is not centered: mu(f) = {mean:.3e}")


def clt_variance_bound(
    U: DiscretePotential, f: TestFunction, truncation: Optional[int] = None
) -> Tuple[float, float]:
    """M_f = sum_x g(x) F(x) pi(x) and the truncation tail estimate.

    g(x) = f(x, 1) + f(x, -1); F(x) = g(x)/2 plus the sum of g strictly between 0 and x.
    The asymptotic variance of the ergodic average of f is at most 3 M_f.
    """
    _check_centered(U, f, truncation)
    law = truncated_law(U, truncation)
    g = _g(f, law.xs)
    center = len(law.xs) // 2
    F = g / 2.0
    right = g[center + 1 :]
    F[center + 1 :] += np.concatenate(([0.0], np.cumsum(right)[:-1]))
    left = g[:center][::-1]
    F[:center] += np.concatenate(([0.0], np.cumsum(left)[:-1]))[::-1]
    return float(np.sum(g * F * law.pi)), law.tail


class RenewalMoments(NamedTuple):
    mean: float
    second_moment: float
    lam: float


def renewal_moments(U: DiscretePotential, f: TestFunction, truncation: Optional[int] = None) -> RenewalMoments:
    """Exact E(A_0), E(A_0^2) and mean block length for blocks started at (0, +1).

    Assumes U non-decreasing away from 0 on both sides, so P(T_1 >= k) = exp(U(0) - U(k)).
    """
    radius = truncation or auto_truncation(U)
    u0 = float(_energy(U, 0))
    steps = np.arange(1, radius + 1, dtype=np.int64)
    g0 = float(_g(f, np.array([0]))[0])

    def side(points: np.ndarray) -> Tuple[float, float, float]:
        survival = np.exp(u0 - _energy(U, points))
        g = _g(f, points)
        before = np.concatenate(([0.0], np.cumsum(g)[:-1]))
        return float(np.sum(g * survival)), float(np.sum(g * survival * (g + 2.0 * before))), float(np.sum(survival))

    mean_r, second_r, length_r = side(steps)
    mean_l, second_l, length_l = side(-steps)
    mean = g0 + mean_r + mean_l
    second = g0**2 + second_r + second_l + 2.0 * g0 * (mean_r + mean_l) + 2.0 * mean_r * mean_l
    lam = 2.0 * (1.0 + length_r + length_l)
    return RenewalMoments(mean, second, lam)


def clt_variance_exact(U: DiscretePotential, f: TestFunction, truncation: Optional[int] = None) -> float:
    """sigma_f^2 = E(A_0^2) / lambda for a centered f"""
    _check_centered(U, f, truncation)
    moments = renewal_moments(U, f, truncation)
    return moments.second_moment / moments.lam


def renewal_blocks(
    U: DiscretePotential, f: TestFunction, n_blocks: int, rng: np.random.Generator, chunk: int = 100_000
) -> Tuple[np.ndarray, np.ndarray]:
    """Block sums A_n and lengths S_{n+1} - S_n between visits of (0, +1)"""
    sums, lengths = [], []
    x, v = 0, 1
    carry_sum, carry_len = 0.0, 0
    while len(sums) < n_blocks:
        xs, vs = walk_path(U, x, v, chunk, rng)
        values = np.asarray(f(xs[:-1], vs[:-1]), dtype=float)
        starts = np.flatnonzero((xs[:-1] == 0) & (vs[:-1] == 1))
        previous = 0
        for end in starts:
            if end == 0 and carry_len == 0:
                continue
            sums.append(carry_sum + float(np.sum(values[previous:end])))
            lengths.append(carry_len + end - previous)
            carry_sum, carry_len = 0.0, 0
            previous = end
        carry_sum += float(np.sum(values[previous:]))
        carry_len += chunk - previous
        x, v = int(xs[-1]), int(vs[-1])
    return np.array(sums[:n_blocks]), np.array(lengths[:n_blocks], dtype=np.int64)


def renewal_block_variance(U: DiscretePotential, f: TestFunction, n_blocks: int, rng: np.random.Generator) -> float:
    """Monte Carlo estimate of E(A_0^2) / lambda"""
    sums, lengths = renewal_blocks(U, f, n_blocks, rng)
    return float(np.mean(sums**2) / np.mean(lengths))


def escape_time_sample(cfg: EscapeConfig, rng: np.random.Generator, step_cap: Optional[int] = None) -> Tuple[int, bool]:
    """Steps until the walk under U/eps started at (0, +1) leaves ]a, b[, and whether it left at a"""
    cap = step_cap or Config.STEP_CAP
    U = scaled(cfg.potential, cfg.eps)
    state = Walk1D(x=0, v=1)
    while cfg.a < state.x < cfg.b:
        if state.step_count >= cap:
            raise StepCapExceeded(f"escape not reached after {cap} steps", state.step_count, state)
        state = step1d(state, U, float(rng.random()))
    return state.step_count, state.x == cfg.a


def escape_time_samples(
    cfg: EscapeConfig, n: int, rng: np.random.Generator, step_cap: Optional[int] = None
) -> Tuple[np.ndarray, np.ndarray]:
    """Many independent escapes run in lockstep"""
    cap = step_cap or Config.STEP_CAP
    U = scaled(cfg.potential, cfg.eps)
    x = np.zeros(n, dtype=np.int64)
    v = np.ones(n, dtype=np.int64)
    taus = np.zeros(n, dtype=np.int64)
    active = np.ones(n, dtype=bool)
    steps = 0
    while np.any(active):
        if steps >= cap:
            raise StepCapExceeded(f"{int(active.sum())} escapes not reached after {cap} steps", steps, x[active])
        idx = np.flatnonzero(active)
        move = rng.random(idx.size) <= move_probability(U, x[idx], v[idx])
        x[idx] = np.where(move, x[idx] + v[idx], x[idx])
        v[idx] = np.where(move, v[idx], -v[idx])
        steps += 1
        left = (x[idx] <= cfg.a) | (x[idx] >= cfg.b)
        taus[idx[left]] = steps
        active[idx[left]] = False
    return taus, x == cfg.a


def eyring_kramers_prediction(cfg: EscapeConfig) -> Tuple[float, float]:
    """Leading-order mean escape time and exit-left probability"""
    issues = cfg.window_issues()
    if issues:
        logger.warning(f"Escape window assumptions not met: {'; '.join(issues)}")
    ua, ub = cfg.barrier_left, cfg.barrier_right
    equal = 1.0 if ua == ub else 0.0
    mean_tau = math.exp(cfg.e1 / cfg.eps) * 2.0 * (cfg.beta - cfg.alpha + 1) / (1.0 + equal)
    p_left = (1.0 + float(ua <= ub) - float(ub <= ua)) / 2.0
    return mean_tau, p_left


def escape_geometric_parameter(cfg: EscapeConfig) -> float:
    """Probability that one renewal cycle from (0, +1) ends with an escape"""
    right = math.exp(-cfg.barrier_right / cfg.eps)
    left = math.exp(-cfg.barrier_left / cfg.eps)
    return right + left - right * left


def exact_exit_right_probability(cfg: EscapeConfig) -> float:
    return math.exp(-cfg.barrier_right / cfg.eps) / escape_geometric_parameter(cfg)


def exact_mean_escape_time(cfg: EscapeConfig) -> Tuple[float, float]:
    """Mean escape time and exit-left probability from the first-exit linear equations"""
    U = scaled(cfg.potential, cfg.eps)
    sites = list(range(cfg.a + 1, cfg.b))
    index = {(k, v): 2 * n + (v > 0) for n, k in enumerate(sites) for v in (-1, 1)}
    size = len(index)
    A = np.eye(size)
    rhs_time = np.ones(size)
    rhs_left = np.zeros(size)
    for (k, v), row in index.items():
        q = float(move_probability(U, k, v))
        target = k + v
        if (target, v) in index:
            A[row, index[(target, v)]] -= q
        elif target == cfg.a:
            rhs_left[row] += q
        A[row, index[(k, -v)]] -= 1.0 - q
    mean = np.linalg.solve(A, rhs_time)
    left = np.linalg.solve(A, rhs_left)
    start = index[(0, 1)]
    return float(mean[start]), float(left[start])


def _geometric_cdf_below(t: np.ndarray, p: float) -> np.ndarray:
    """P(G < t) for G geometric on {1, 2, ...} with success probability p"""
    below = np.ceil(t) - 1.0
    return np.where(below >= 1.0, 1.0 - (1.0 - p) ** np.maximum(below, 0.0), 0.0)


def sandwich_violation(taus: np.ndarray, cfg: EscapeConfig) -> float:
    """Largest excursion of the empirical CDF of tau outside the geometric stochastic bounds"""
    taus = np.sort(np.asarray(taus, dtype=float))
    p = escape_geometric_parameter(cfg)
    short = 2.0 * (cfg.beta - cfg.alpha + 1)
    long = 2.0 * (cfg.b - cfg.a + 1)
    grid = np.unique(np.concatenate((taus, taus + 1.0)))
    empirical = np.searchsorted(taus, grid, side="left") / len(taus)
    lower_cdf = _geometric_cdf_below(grid / short + 1.0, p)  # P(short (G - 1) < t)
    upper_cdf = _geometric_cdf_below(grid / long, p)  # P(long G < t)
    return float(max(np.max(empirical - lower_cdf), np.max(upper_cdf - empirical), 0.0))
