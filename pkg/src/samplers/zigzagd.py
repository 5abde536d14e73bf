"""Zig-Zag walk on Z^d: Gibbs-sweep kernels, signature classes, drift checks and exact kernels"""

import itertools
import math
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from ..core.exceptions import ConfigurationError, ContractViolation, StateSpaceTooLarge
from ..core.models import LatticeStateD, LyapunovParams, LyapunovReport, SweepOrder
from ..potentials.discrete import DiscretePotential, increment
from ..utils.logger import logger
from .thinning import BoundSpec, acceptance_probability, bernoulli_from_bounds

MAX_STATES = 10**6

# move probability of coordinate ``axis`` with sign ``s`` from the intermediate position y
MoveProbability = Callable[[np.ndarray, int, int], float]


class SweepCounters(BaseModel):
    """Evaluation tallies of sweep kernels"""

    increment_evals: int = 0
    factor_evals: int = 0
    bound_evals: List[int] = Field(default_factory=list)

    def ensure_levels(self, depth: int) -> None:
        if len(self.bound_evals) < depth:
            self.bound_evals.extend([0] * (depth - len(self.bound_evals)))


def signature(x: np.ndarray, v: np.ndarray) -> np.ndarray:
    """((-1)^{x_i} v_i)_i"""
    x = np.asarray(x, dtype=np.int64)
    return (1 - 2 * np.mod(x, 2)) * np.asarray(v, dtype=np.int64)


def _sweep_axes(s: LatticeStateD, rng: np.random.Generator) -> Sequence[int]:
    if s.sweep_order == SweepOrder.RANDOM:
        return [int(k) for k in rng.permutation(s.dim)]
    if s.sweep_order == SweepOrder.FIXED:
        return s.permutation
    return range(s.dim)


def _check_dimension(s: LatticeStateD, U: DiscretePotential) -> None:
    if s.dim != U.dim:
        raise ContractViolation(f"state dimension {s.dim} does not match potential dimension {U.dim}")


def flip_probability(U: DiscretePotential, y: np.ndarray, axis: int, s: int) -> float:
    """1 - exp(-(U(y + s e_axis) - U(y))_+)"""
    return -math.expm1(-max(increment(U, y, axis, s), 0.0))


def sweep_transition(
    s: LatticeStateD,
    U: DiscretePotential,
    rng: np.random.Generator,
    thin: Optional[BoundSpec] = None,
    counters: Optional[SweepCounters] = None,
) -> LatticeStateD:
    """One Gibbs sweep: coordinate k is updated at the intermediate position Y_{k-1}.

    Without ``thin`` one uniform is drawn per coordinate and the move is taken when it is at
    most exp(-(U(Y + v_k e_k) - U(Y))_+). With ``thin`` the flip event is drawn through the
    bound chain, whose states are ``(y, axis, v_axis)``.
    """
    _check_dimension(s, U)
    counters = counters if counters is not None else SweepCounters()
    if thin is not None:
        counters.ensure_levels(thin.depth)
    y = s.x.copy()
    v = s.v.copy()
    for axis in _sweep_axes(s, rng):
        sign = int(v[axis])
        if thin is None:
            counters.increment_evals += 1
            move = rng.random() <= math.exp(-max(increment(U, y, axis, sign), 0.0))
        else:
            before = counters.bound_evals[-1]
            flip = bernoulli_from_bounds((y, axis, sign), thin, None, rng, counters.bound_evals)
            counters.increment_evals += counters.bound_evals[-1] - before
            move = not flip
        if move:
            y[axis] += sign
        else:
            v[axis] = -sign
    return s.model_copy(update={"x": U.wrap(y), "v": v, "step_count": s.step_count + 1})


def sweep_transition_factorized(
    s: LatticeStateD,
    U: DiscretePotential,
    rng: np.random.Generator,
    thin: Optional[BoundSpec] = None,
) -> Tuple[LatticeStateD, SweepCounters]:
    """Sweep whose coordinate acceptance is the product of per-factor acceptances.

    Factors are tried in order with one uniform each; the first rejecting factor flips the
    velocity and the remaining factors are never evaluated. With ``thin`` the rejection of
    factor j is drawn through the bound chain, whose states are ``(y, direction, j)``.
    """
    _check_dimension(s, U)
    if not U.factor_terms:
        raise ConfigurationError(f"potential {U.name!r} has no factor terms")
    counters = SweepCounters()
    if thin is not None:
        counters.ensure_levels(thin.depth)
    y = s.x.copy()
    v = s.v.copy()
    for axis in _sweep_axes(s, rng):
        sign = int(v[axis])
        direction = np.zeros_like(y)
        direction[axis] = sign
        accepted = True
        for j, term in enumerate(U.factor_terms):
            if thin is None:
                counters.factor_evals += 1
                rise = float(term(U.wrap(y), direction))
                rejected = rng.random() > math.exp(-max(rise, 0.0))
            else:
                before = counters.bound_evals[-1]
                rejected = bernoulli_from_bounds((y, direction, j), thin, None, rng, counters.bound_evals)
                counters.factor_evals += counters.bound_evals[-1] - before
            if rejected:
                accepted = False
                break
        if accepted:
            y[axis] += sign
        else:
            v[axis] = -sign
    return s.model_copy(update={"x": U.wrap(y), "v": v, "step_count": s.step_count + 1}), counters


def flip_bound_spec(U: DiscretePotential, increment_bound: Callable[[np.ndarray, int, int], float]) -> BoundSpec:
    """Thinning chain for the flip event: cheap 1 - exp(-B) first, exact flip probability last.

    ``increment_bound(y, axis, s)`` must dominate (U(y + s e_axis) - U(y))_+.
    """
    return BoundSpec(
        levels=[
            lambda state: -math.expm1(-max(increment_bound(*state), 0.0)),
            lambda state: flip_probability(U, *state),
        ],
        labels=["bound", "exact"],
    )


def factor_bound_spec(
    U: DiscretePotential, factor_bounds: Sequence[Callable[[np.ndarray, np.ndarray], float]]
) -> BoundSpec:
    """Thinning chain for the rejection of factor j, with cheap bounds b_j >= (f_j)_+"""
    if not U.factor_terms or len(factor_bounds) != len(U.factor_terms):
        raise ConfigurationError("need one bound per factor term")

    def cheap(state) -> float:
        y, direction, j = state
        return -math.expm1(-max(factor_bounds[j](y, direction), 0.0))

    def exact(state) -> float:
        y, direction, j = state
        return -math.expm1(-max(float(U.factor_terms[j](U.wrap(y), direction)), 0.0))

    return BoundSpec(levels=[cheap, exact], labels=["bound", "exact"])


def run_chains_d(
    U: DiscretePotential,
    x0: np.ndarray,
    v0: np.ndarray,
    n_steps: int,
    rng: np.random.Generator,
    order: SweepOrder = SweepOrder.IDENTITY,
    permutation: Optional[Sequence[int]] = None,
    record: bool = False,
) -> Tuple[np.ndarray, np.ndarray]:
    """Plain sweep kernel for many chains at once; x0 and v0 have shape (chains, d)"""
    x = np.array(x0, dtype=np.int64, ndmin=2)
    v = np.array(v0, dtype=np.int64, ndmin=2)
    x, v = (a.copy() for a in np.broadcast_arrays(x, v))
    chains, dim = x.shape
    if dim != U.dim:
        raise ContractViolation(f"chains of dimension {dim} do not match potential dimension {U.dim}")
    rows = np.arange(chains)
    if record:
        xs = np.empty((n_steps + 1, chains, dim), dtype=np.int64)
        vs = np.empty_like(xs)
        xs[0], vs[0] = x, v
    fixed = list(permutation) if order == SweepOrder.FIXED else list(range(dim))
    for n in range(n_steps):
        if order == SweepOrder.RANDOM:
            axes = np.argsort(rng.random((chains, dim)), axis=1)
        else:
            axes = np.tile(fixed, (chains, 1))
        for k in range(dim):
            axis = axes[:, k]
            sign = v[rows, axis]
            moved = x.copy()
            moved[rows, axis] += sign
            rise = U.evaluate(moved) - U.evaluate(x)
            move = rng.random(chains) <= np.exp(-np.maximum(rise, 0.0))
            x = np.where(move[:, None], moved, x)
            v[rows, axis] = np.where(move, sign, -sign)
        x = U.wrap(x)
        if record:
            xs[n + 1], vs[n + 1] = x, v
    if record:
        return xs, vs
    return x, v


def sweep_outcomes(
    x: np.ndarray, v: np.ndarray, move_probability: MoveProbability, order: Sequence[int]
) -> List[Tuple[float, np.ndarray, np.ndarray]]:
    """All 2^d outcomes of one sweep with their probabilities"""
    paths = [(1.0, np.array(x, dtype=np.int64), np.array(v, dtype=np.int64))]
    for axis in order:
        branched = []
        for prob, y, w in paths:
            sign = int(v[axis])
            q = move_probability(y, axis, sign)
            if q > 0.0:
                moved = y.copy()
                moved[axis] += sign
                branched.append((prob * q, moved, w))
            if q < 1.0:
                flipped = w.copy()
                flipped[axis] = -sign
                branched.append((prob * (1.0 - q), y, flipped))
        paths = branched
    return paths


def kernel_move_probability(
    U: DiscretePotential, thin: Optional[BoundSpec] = None, factorized: bool = False
) -> MoveProbability:
    """Exact move probability of the plain, factorized or thinned sweep kernels"""
    if factorized:
        if not U.factor_terms:
            raise ConfigurationError(f"potential {U.name!r} has no factor terms")

        def factorized_move(y, axis, s):
            direction = np.zeros_like(y)
            direction[axis] = s
            total = 1.0
            for j, term in enumerate(U.factor_terms):
                if thin is None:
                    total *= math.exp(-max(float(term(U.wrap(y), direction)), 0.0))
                else:
                    total *= 1.0 - acceptance_probability((y, direction, j), thin)
            return total

        return factorized_move
    if thin is not None:
        return lambda y, axis, s: 1.0 - acceptance_probability((y, axis, s), thin)
    return lambda y, axis, s: math.exp(-max(increment(U, y, axis, s), 0.0))


class TransitionMatrix:
    """Sparse row-stochastic sweep kernel over (Z/NZ)^d x {-1, 1}^d"""

    def __init__(self, matrix: sparse.csr_matrix, states: np.ndarray, side: int, dim: int):
        self.matrix = matrix
        self.states = states  # rows (x_1..x_d, v_1..v_d), x centered
        self.side = side
        self.dim = dim

    @property
    def size(self) -> int:
        return self.states.shape[0]

    def index(self, x: np.ndarray, v: np.ndarray) -> int:
        return _state_index(np.asarray(x), np.asarray(v), self.side)

    def signatures(self) -> np.ndarray:
        return signature(self.states[:, : self.dim], self.states[:, self.dim :])


def _state_index(x: np.ndarray, v: np.ndarray, side: int) -> int:
    index = 0
    for xi in x:
        index = index * side + int((xi + side // 2) % side)
    for vi in v:
        index = index * 2 + (1 if vi > 0 else 0)
    return index


def _enumerate_states(side: int, dim: int) -> np.ndarray:
    coordinates = [k - side // 2 for k in range(side)]
    rows = [
        list(x) + list(v)
        for x in itertools.product(coordinates, repeat=dim)
        for v in itertools.product((-1, 1), repeat=dim)
    ]
    return np.array(rows, dtype=np.int64)


def build_transition_matrix(
    U: DiscretePotential,
    thin: Optional[BoundSpec] = None,
    factorized: bool = False,
    permutation: Optional[Sequence[int]] = None,
) -> TransitionMatrix:
    """Exact sweep kernel on a torus by enumerating the 2^d sweep paths of every state"""
    if not U.is_torus:
        raise ConfigurationError("exact kernels need a torus potential")
    side, dim = U.torus_side, U.dim
    count = side**dim * 2**dim
    if count > MAX_STATES:
        raise StateSpaceTooLarge(f"{count} states exceed the limit of {MAX_STATES}")
    order = list(permutation) if permutation is not None else list(range(dim))
    move = kernel_move_probability(U, thin=thin, factorized=factorized)
    states = _enumerate_states(side, dim)
    rows, cols, values = [], [], []
    for row, state in enumerate(states):
        for prob, y, w in sweep_outcomes(state[:dim], state[dim:], move, order):
            rows.append(row)
            cols.append(_state_index(U.wrap(y), w, side))
            values.append(prob)
    matrix = sparse.csr_matrix((values, (rows, cols)), shape=(count, count))
    matrix.sum_duplicates()
    logger.debug(f"Built {count}-state sweep kernel for {U.name}")
    return TransitionMatrix(matrix, states, side, dim)


def target_distribution(U: DiscretePotential, tm: TransitionMatrix) -> np.ndarray:
    """mu(x, v) proportional to exp(-U(x)) / 2^d over the enumerated states"""
    energies = U.evaluate(tm.states[:, : tm.dim])
    weights = np.exp(-(energies - np.min(energies)))
    return weights / np.sum(weights)


def invariance_residual(U: DiscretePotential, tm: TransitionMatrix) -> float:
    """||mu Q - mu||_1"""
    mu = target_distribution(U, tm)
    return float(np.sum(np.abs(tm.matrix.T @ mu - mu)))


def signature_classes(tm: TransitionMatrix) -> Dict[Tuple[int, ...], np.ndarray]:
    """State indices grouped by signature"""
    keys = tm.signatures()
    classes: Dict[Tuple[int, ...], List[int]] = {}
    for index, key in enumerate(map(tuple, keys)):
        classes.setdefault(key, []).append(index)
    return {key: np.array(indices, dtype=np.int64) for key, indices in sorted(classes.items())}


def class_target(U: DiscretePotential, tm: TransitionMatrix, key: Tuple[int, ...]) -> np.ndarray:
    """mu_s: mu conditioned on the signature class s, as a full-length vector"""
    mu = target_distribution(U, tm)
    mask = np.all(tm.signatures() == np.array(key), axis=1)
    restricted = np.where(mask, mu, 0.0)
    return restricted / np.sum(restricted)


def reversal_stationary(U: DiscretePotential, tm: TransitionMatrix) -> Dict[Tuple[int, ...], np.ndarray]:
    """mu_s for every signature class; the two-step kernel leaves each of them invariant"""
    return {key: class_target(U, tm, key) for key in signature_classes(tm)}


def class_is_strongly_connected(tm: TransitionMatrix, key: Tuple[int, ...]) -> bool:
    """Strong connectivity of the kernel graph on the union of classes s and -s"""
    signatures = tm.signatures()
    key = np.array(key)
    members = np.flatnonzero(np.all(signatures == key, axis=1) | np.all(signatures == -key, axis=1))
    sub = tm.matrix[members][:, members]
    count, _ = connected_components(sub > 0, directed=True, connection="strong")
    return count == 1


def tv_decay(tm: TransitionMatrix, start: int, target: np.ndarray, n_max: int) -> np.ndarray:
    """||delta_start Q^{2n} - target||_TV for n = 1..n_max"""
    two_step = (tm.matrix @ tm.matrix).T.tocsr()
    law = np.zeros(tm.size)
    law[start] = 1.0
    distances = np.empty(n_max)
    for n in range(n_max):
        law = two_step @ law
        distances[n] = 0.5 * float(np.sum(np.abs(law - target)))
    return distances


def lyapunov_function(params: LyapunovParams, x: np.ndarray, v: np.ndarray) -> float:
    """V(x, v) = sum_i exp(a |x_i| + b 1{x_i v_i > 0})"""
    x = np.asarray(x)
    return float(np.sum(np.exp(params.a * np.abs(x) + params.b * (x * np.asarray(v) > 0))))


def lyapunov_drift(U: DiscretePotential, params: LyapunovParams, x: np.ndarray, v: np.ndarray) -> Tuple[float, float]:
    """Exact (QV(x, v), V(x, v)) from the 2^d sweep outcomes"""
    move = kernel_move_probability(U)
    outcomes = sweep_outcomes(np.asarray(x), np.asarray(v), move, range(U.dim))
    qv = sum(prob * lyapunov_function(params, y, w) for prob, y, w in outcomes)
    return qv, lyapunov_function(params, x, v)


def lyapunov_report(U: DiscretePotential, params: LyapunovParams, sample_box: int) -> LyapunovReport:
    """Exhaustive check of QV <= gamma V + C on the box [-sample_box, sample_box]^d"""
    gamma = params.gamma
    constant = params.constant(U.dim)
    worst = -math.inf
    margin = math.inf
    empirical = None
    violations = 0
    states = 0
    box = range(-sample_box, sample_box + 1)
    for x in itertools.product(box, repeat=U.dim):
        x = np.array(x, dtype=np.int64)
        for axis in range(U.dim):
            for sign in (-1, 1):
                if x[axis] * sign > params.R and max(increment(U, x, axis, sign), 0.0) < params.h:
                    violations += 1
        for v in itertools.product((-1, 1), repeat=U.dim):
            v = np.array(v, dtype=np.int64)
            qv, value = lyapunov_drift(U, params, x, v)
            states += 1
            worst = max(worst, (qv - gamma * value - constant) / value)
            margin = min(margin, (gamma * value + constant - qv) / value)
            if np.all(np.abs(x) > params.R + 1):
                ratio = qv / value
                empirical = ratio if empirical is None else max(empirical, ratio)
    if violations:
        logger.warning(f"Drift condition fails at {violations} (x, axis, sign) triples on the box")
    return LyapunovReport(
        gamma=gamma,
        constant=constant,
        states_checked=states,
        max_violation=worst,
        drift_margin=margin,
        empirical_gamma=empirical,
        assumption_violations=violations,
    )


def max_positive_increment(U: DiscretePotential) -> float:
    """max over the torus of (U(x + s e_axis) - U(x))_+, a constant dominating bound for flip thinning"""
    if not U.is_torus:
        raise ConfigurationError("a global increment bound needs a torus potential")
    side = U.torus_side
    points = np.array(np.meshgrid(*[np.arange(side) - side // 2] * U.dim, indexing="ij")).reshape(U.dim, -1).T
    base = U.evaluate(points)
    worst = 0.0
    for axis in range(U.dim):
        for s in (-1, 1):
            moved = points.copy()
            moved[:, axis] += s
            worst = max(worst, float(np.max(U.evaluate(moved) - base)))
    return worst
