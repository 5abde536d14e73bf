"""Strang-split hybrid sampler: half drift, OU half kick, jump segment, OU half kick, half drift

The jump segment keeps positions frozen and reflects velocities at the points of a Poisson
process with rate sum_k (v . F_k(x))_+, with an optional Gaussian refreshment at rate lambda.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import solve_discrete_lyapunov
from tqdm import tqdm

from ..core.config import Config
from ..core.exceptions import BoundViolation, ConfigurationError, DomainError, RunawayError
from ..core.models import CostCounters, HybridConfig, JumpMode, OUMode, PhaseState, SplitKind
from ..core.rng import StepStreams
from ..potentials.lennard_jones import ForceSplit, lj_energy, lj_gradient
from ..utils.logger import logger

MAX_JUMP_EVENTS = 10**6
RATIO_TOLERANCE = 1e-9

FieldFunc = Callable[[np.ndarray], np.ndarray]
ParticleRng = Callable[[int], np.random.Generator]


def reflect(v: np.ndarray, F: np.ndarray) -> np.ndarray:
    """v - 2 (F . v / |F|^2) F along the last axis, or v where F = 0; leading axes are a batch"""
    v = np.asarray(v, dtype=float)
    F = np.asarray(F, dtype=float)
    norm2 = np.sum(F * F, axis=-1, keepdims=True)
    scale = np.divide(2.0 * np.sum(F * v, axis=-1, keepdims=True), norm2, out=np.zeros_like(norm2), where=norm2 > 0.0)
    return v - scale * F


def ou_half_kick(v: np.ndarray, F0: np.ndarray, cfg: HybridConfig, rng: np.random.Generator) -> np.ndarray:
    """Friction, drift and noise over half a step with F0 frozen

    The exact mode is the OU flow dV = -gamma V dt - F0 dt + sqrt(2 gamma) dW over delta/2: mean
    e^{-gamma delta/2} v - (1 - e^{-gamma delta/2}) F0 / gamma and variance 1 - e^{-gamma delta}. The
    drift coefficient carries the 1/gamma that the literal mode omits, so the two differ unless gamma = 1.
    """
    half = 0.5 * cfg.delta
    if cfg.gamma == 0.0:
        return v - half * F0
    decay = math.exp(-cfg.gamma * half)
    noise = rng.standard_normal(np.shape(v))
    if cfg.ou_variance_mode == OUMode.PAPER_LITERAL:
        return decay * v - (1.0 - decay) * F0 + math.sqrt(1.0 - decay) * noise
    return decay * v - (1.0 - decay) / cfg.gamma * F0 + math.sqrt(-math.expm1(-cfg.gamma * cfg.delta)) * noise


def refresh_velocity(
    v: np.ndarray, lam: float, delta: float, rng: np.random.Generator, counters: CostCounters
) -> Tuple[np.ndarray, float]:
    """Apply the last refreshment of a rate-lambda Poisson process on [0, delta].

    Returns the velocity at the last refreshment time T0 (or the input when there is none) and
    the remaining horizon delta - T0.
    """
    if lam <= 0.0:
        return v, delta
    gap = rng.exponential(1.0 / lam)
    if gap >= delta:
        return v, delta
    counters.refreshments += 1
    return rng.standard_normal(np.shape(v)), gap


def _competing_clocks(
    fields: np.ndarray,
    v: np.ndarray,
    horizon: float,
    rng: np.random.Generator,
    counters: CostCounters,
    max_events: int,
) -> np.ndarray:
    """Reflect v at the first points of the clocks with rates (v . F_k)_+ until the horizon"""
    flat_fields = fields.reshape(len(fields), -1)
    w = v.reshape(-1).copy()
    t = 0.0
    events = 0
    while True:
        rates = np.maximum(flat_fields @ w, 0.0)
        total = float(np.sum(rates))
        if total <= 0.0:
            break
        t += rng.exponential(1.0 / total)
        if t > horizon:
            break
        k = int(rng.choice(len(rates), p=rates / total))
        w = reflect(w, flat_fields[k])
        events += 1
        if events > max_events:
            raise RunawayError(f"more than {max_events} bounces in one jump segment")
    counters.jump_proposals += events
    counters.jumps_accepted += events
    return w.reshape(v.shape)


def jump_segment_naive(
    x: np.ndarray,
    v: np.ndarray,
    fields: Sequence[FieldFunc],
    delta: float,
    lam: float,
    rng: np.random.Generator,
    counters: Optional[CostCounters] = None,
    max_events: int = MAX_JUMP_EVENTS,
) -> Tuple[np.ndarray, CostCounters]:
    """Exact jump segment with every field evaluated once at the frozen position"""
    counters = counters if counters is not None else CostCounters()
    v = np.asarray(v, dtype=float)
    v, horizon = refresh_velocity(v, lam, delta, rng, counters)
    if not fields:
        return v, counters
    evaluated = np.array([np.asarray(f(x), dtype=float).reshape(v.shape) for f in fields])
    counters.gij_evals += len(fields)
    return _competing_clocks(evaluated, v, horizon, rng, counters, max_events), counters


def _thinned_particle(
    split: ForceSplit,
    x: np.ndarray,
    w: np.ndarray,
    i: int,
    horizon: float,
    per_particle: bool,
    rng: np.random.Generator,
) -> Tuple[np.ndarray, CostCounters]:
    counters = CostCounters()
    M = len(x)
    speed = float(np.linalg.norm(w))
    bound = split.C_R * M if per_particle else split.C_R
    intensity = speed * split.C_R * M * horizon
    counters.speed_sum += speed
    counters.speed_count += 1
    counters.proposal_intensity += intensity
    k = int(rng.poisson(intensity)) if intensity > 0.0 else 0
    counters.jump_proposals += k
    for _ in range(k):
        j = int(rng.integers(M))
        u = rng.random()
        if per_particle:
            field = split.particle_field(x, i)
            counters.gij_evals += M - 1
        else:
            if j == i:
                continue
            field = split.G(x, i, j)
            counters.gij_evals += 1
        ratio = max(float(np.dot(w, field)), 0.0) / (speed * bound)
        if ratio > 1.0 + RATIO_TOLERANCE:
            raise BoundViolation(f"rate bound exceeded for particle {i} (ratio {ratio:.6g})", ratio=ratio)
        if u <= ratio:
            w = reflect(w, field)
            counters.jumps_accepted += 1
    return w, counters


def jump_segment_thinned_lj(
    split: ForceSplit,
    x: np.ndarray,
    v: np.ndarray,
    cfg: HybridConfig,
    rng: np.random.Generator,
    counters: Optional[CostCounters] = None,
    particle_rng: Optional[ParticleRng] = None,
    executor: Optional[ThreadPoolExecutor] = None,
) -> Tuple[np.ndarray, CostCounters]:
    """Jump segment of the Lennard-Jones split by Poisson proposals against the bound C_R.

    Particle i draws K_i ~ Poisson(|W_i| C_R M h) proposals, each picking j uniformly in 0..M-1
    and accepting the reflection along G_ij with probability (W_i . G_ij)_+ / (|W_i| C_R).
    Under the per-particle split the field is F_i = sum_j G_ij with bound M C_R. Particles only
    share the frozen positions, so they run independently, each on ``particle_rng(i)``.
    """
    counters = counters if counters is not None else CostCounters()
    if cfg.split == SplitKind.FULL_DRIFT:
        raise ConfigurationError("the full-drift split has no jump fields")
    v = np.asarray(v, dtype=float)
    v, horizon = refresh_velocity(v, cfg.lam, cfg.delta, rng, counters)
    per_particle = cfg.split == SplitKind.PER_PARTICLE
    M = len(x)
    if particle_rng is None:
        generators = [rng] * M
    else:
        generators = [particle_rng(i) for i in range(M)]

    def work(i: int):
        return _thinned_particle(split, x, v[i].copy(), i, horizon, per_particle, generators[i])

    if executor is not None and particle_rng is not None:
        results = list(executor.map(work, range(M)))
    else:
        results = [work(i) for i in range(M)]
    out = np.empty_like(v)
    for i, (w, local) in enumerate(results):
        out[i] = w
        counters.merge(local)
    return out, counters


class FieldModel:
    """Generic drift F0 plus jump fields on a flat or periodic space"""

    def __init__(
        self,
        F0: FieldFunc,
        fields: Sequence[FieldFunc] = (),
        energy: Optional[Callable[[np.ndarray], float]] = None,
        box: Optional[float] = None,
        name: str = "fields",
    ):
        self.F0 = F0
        self.fields = list(fields)
        self.energy = energy
        self.box = box
        self.name = name

    def wrap(self, x: np.ndarray) -> np.ndarray:
        return x if self.box is None else np.mod(x, self.box)

    def drift(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(self.F0(x), dtype=float)

    def potential_energy(self, x: np.ndarray) -> float:
        return float(self.energy(x)) if self.energy is not None else math.nan

    def jump(
        self,
        x: np.ndarray,
        v: np.ndarray,
        cfg: HybridConfig,
        rng: np.random.Generator,
        counters: CostCounters,
        particle_rng: Optional[ParticleRng] = None,
        executor: Optional[ThreadPoolExecutor] = None,
    ) -> np.ndarray:
        if cfg.jump_mode == JumpMode.THINNED and self.fields:
            raise ConfigurationError("thinned jumps need the Lennard-Jones model")
        v, _ = jump_segment_naive(x, v, self.fields, cfg.delta, cfg.lam, rng, counters)
        return v


class LJModel(FieldModel):
    """Lennard-Jones particles in a periodic box with the short/long-range gradient split"""

    def __init__(self, split: ForceSplit, kind: SplitKind):
        self.split = split
        self.kind = kind
        super().__init__(F0=self._drift, box=split.sys.box_side, name="lennard-jones")

    def _drift(self, x: np.ndarray) -> np.ndarray:
        if self.kind == SplitKind.FULL_DRIFT:
            return lj_gradient(self.split.sys.with_positions(x))
        return self.split.F0(x)

    def potential_energy(self, x: np.ndarray) -> float:
        return lj_energy(self.split.sys.with_positions(x))

    def lifted_fields(self, x: np.ndarray) -> np.ndarray:
        """Jump fields as full (M, 3) vectors: one per ordered pair, or one per particle"""
        M = len(x)
        pairs = self.split.all_pair_fields(x)
        if self.kind == SplitKind.PER_PARTICLE:
            lifted = np.zeros((M, M, 3))
            lifted[np.arange(M), np.arange(M)] = pairs.sum(axis=1)
            return lifted
        index = [(i, j) for i in range(M) for j in range(M) if i != j]
        lifted = np.zeros((len(index), M, 3))
        for k, (i, j) in enumerate(index):
            lifted[k, i] = pairs[i, j]
        return lifted

    def jump(self, x, v, cfg, rng, counters, particle_rng=None, executor=None):
        if self.kind == SplitKind.FULL_DRIFT:
            v, _ = refresh_velocity(np.asarray(v, dtype=float), cfg.lam, cfg.delta, rng, counters)
            return v
        if cfg.jump_mode == JumpMode.THINNED:
            v, _ = jump_segment_thinned_lj(self.split, x, v, cfg, rng, counters, particle_rng, executor)
            return v
        v, horizon = refresh_velocity(np.asarray(v, dtype=float), cfg.lam, cfg.delta, rng, counters)
        M = len(x)
        counters.gij_evals += M * (M - 1)
        return _competing_clocks(self.lifted_fields(x), v, horizon, rng, counters, MAX_JUMP_EVENTS)


def strang_step(
    model: FieldModel,
    state: PhaseState,
    cfg: HybridConfig,
    rng: np.random.Generator,
    counters: Optional[CostCounters] = None,
    particle_rng: Optional[ParticleRng] = None,
    executor: Optional[ThreadPoolExecutor] = None,
) -> PhaseState:
    """One step of the composition; F0 is evaluated once at the half-drifted position"""
    counters = counters if counters is not None else CostCounters()
    half = 0.5 * cfg.delta
    x_mid = model.wrap(state.x + half * state.v)
    F0 = model.drift(x_mid)
    counters.f0_evals += 1
    v = ou_half_kick(state.v, F0, cfg, rng)
    v = model.jump(x_mid, v, cfg, rng, counters, particle_rng, executor)
    v = ou_half_kick(v, F0, cfg, rng)
    return state.model_copy(update={"x": model.wrap(x_mid + half * v), "v": v})


class HybridRun:
    """Subsampled trajectory, per-block summaries and cost rows of a sampler run"""

    def __init__(self):
        self.trajectory: List[Tuple[int, np.ndarray, np.ndarray]] = []
        self.blocks: List[Dict[str, Any]] = []
        self.cost: List[Dict[str, float]] = []
        self.final: Optional[PhaseState] = None


class HybridSampler:
    """Runs the Strang-split sampler with per-step random streams derived from one seed"""

    def __init__(self, model: FieldModel, cfg: HybridConfig, seed: int):
        self.model = model
        self.cfg = cfg
        self.seed = seed
        self.counters = CostCounters()

    def run(
        self,
        state: PhaseState,
        n_steps: int,
        block: int = 100,
        subsample: int = 10,
        start_step: int = 0,
        progress: Optional[bool] = None,
    ) -> HybridRun:
        if block < 1 or subsample < 1:
            raise DomainError("block and subsample must be positive")
        progress = Config.SHOW_PROGRESS if progress is None else progress
        out = HybridRun()
        out.trajectory.append((start_step, state.x.copy(), state.v.copy()))
        kinetic: List[float] = []
        executor = ThreadPoolExecutor(max_workers=self.cfg.threads) if self.cfg.threads > 1 else None
        logger.info(
            f"Hybrid run: {n_steps} steps, delta={self.cfg.delta}, split={self.cfg.split.value}, "
            f"jumps={self.cfg.jump_mode.value}, threads={self.cfg.threads}"
        )
        try:
            for n in tqdm(range(start_step, start_step + n_steps), desc="hybrid", disable=not progress):
                streams = StepStreams(self.seed, n)
                state = strang_step(
                    self.model, state, self.cfg, streams.step(), self.counters, streams.particle, executor
                )
                kinetic.append(0.5 * float(np.sum(state.v * state.v)))
                step = n + 1
                if (step - start_step) % subsample == 0:
                    out.trajectory.append((step, state.x.copy(), state.v.copy()))
                if (step - start_step) % block == 0 or step == start_step + n_steps:
                    out.blocks.append(self._block_summary(len(out.blocks), step, state, kinetic))
                    out.cost.append(self._cost_row(step))
                    kinetic = []
        finally:
            if executor is not None:
                executor.shutdown()
        out.final = state
        logger.info(
            f"Hybrid run done: {self.counters.jumps_accepted}/{self.counters.jump_proposals} jumps accepted, "
            f"{self.counters.gij_evals} field evaluations"
        )
        return out

    def _block_summary(self, index: int, step: int, state: PhaseState, kinetic: List[float]) -> Dict[str, Any]:
        return {
            "block": index,
            "step": step,
            "kinetic_energy": float(np.mean(kinetic)),
            "potential_energy": self.model.potential_energy(state.x),
            "counters": self.counters.snapshot(),
        }

    def _cost_row(self, step: int) -> Dict[str, float]:
        return {
            "step": step,
            "f0_evals": self.counters.f0_evals,
            "gij_evals": self.counters.gij_evals,
            "proposals": self.counters.jump_proposals,
            "accepts": self.counters.jumps_accepted,
        }


def harmonic_step_matrices(delta: float, gamma: float, ou_mode: OUMode = OUMode.EXACT) -> Tuple[np.ndarray, np.ndarray]:
    """One jump-free step on U(x) = x^2 / 2 as (X, V) -> A (X, V) + B (xi_1, xi_2), with xi the half-kick noises"""
    half = 0.5 * delta
    decay = math.exp(-gamma * half)
    if ou_mode == OUMode.PAPER_LITERAL:
        drift, noise = 1.0 - decay, math.sqrt(1.0 - decay)
    else:
        drift, noise = (1.0 - decay) / gamma, math.sqrt(-math.expm1(-gamma * delta))
    # rows act on (x, v); noise columns are the two half-kick Gaussians
    x_mid = np.array([1.0, half])
    v1 = np.array([-drift, decay - drift * half])
    v2 = decay * v1 - drift * x_mid
    x_new = x_mid + half * v2
    A = np.vstack([x_new, v2])
    B = np.array([[half * decay * noise, half * noise], [decay * noise, noise]])
    return A, B


def harmonic_stationary_covariance(delta: float, gamma: float, ou_mode: OUMode = OUMode.EXACT) -> np.ndarray:
    """Exact stationary covariance of (X, V) for the scheme on U(x) = x^2 / 2 without jumps"""
    if delta <= 0:
        raise DomainError("delta must be positive")
    if gamma <= 0:
        raise DomainError("a stationary law needs gamma > 0")
    A, B = harmonic_step_matrices(delta, gamma, ou_mode)
    if np.max(np.abs(np.linalg.eigvals(A))) >= 1.0:
        raise DomainError(f"scheme is unstable at delta={delta}")
    return solve_discrete_lyapunov(A, B @ B.T)
