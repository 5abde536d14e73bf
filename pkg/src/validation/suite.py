"""Validation oracles, one per acceptance property, with quick and full sample sizes"""

import math
import time
from typing import Callable, Dict, List

import numpy as np

from ..core.exceptions import KineticError
from ..core.models import CostCounters, EscapeConfig, HybridConfig, JumpMode, OUMode, OracleResult, PhaseState, SplitKind
from ..core.rng import Stream, substream
from ..potentials import continuous, discrete
from ..potentials.lennard_jones import LJSystem, lattice_configuration, lj_force_split
from ..samplers import continuous_zz, hybrid, thinning, zigzag1d, zigzagd
from ..utils.logger import logger
from . import stats

PROFILES: Dict[str, Dict[str, int]] = {
    "quick": {
        "escape_samples": 2000,
        "clt_steps": 500_000,
        "scaling_samples": 2000,
        "segments": 20_000,
        "reflections": 100_000,
        "cost_steps": 2000,
        "msd_chains": 500,
    },
    "full": {
        "escape_samples": 10_000,
        "clt_steps": 1_000_000,
        "scaling_samples": 10_000,
        "segments": 100_000,
        "reflections": 1_000_000,
        "cost_steps": 20_000,
        "msd_chains": 2000,
    },
}

INVARIANCE_POTENTIALS = ["flat", "quadratic", "abs", "doublewell:1.5,1.5,2", "tilted:1,0.5"]


def oracle_invariance(sizes: Dict[str, int], seed: int) -> OracleResult:
    """Exact mu Q = mu for plain, factorized and thinned kernels on small tori"""
    worst = 0.0
    details = {}
    for dim, side in ((1, 16), (2, 6)):
        for name in INVARIANCE_POTENTIALS:
            U = discrete.from_name(name, dim=dim, torus_side=side)
            plain = zigzagd.build_transition_matrix(U)
            cap = zigzagd.max_positive_increment(U) + 0.5
            spec = zigzagd.flip_bound_spec(U, lambda y, axis, s, cap=cap: cap)
            thinned = zigzagd.build_transition_matrix(U, thin=spec)
            factorized = zigzagd.build_transition_matrix(U, factorized=True)
            residuals = {
                "plain": zigzagd.invariance_residual(U, plain),
                "factorized": zigzagd.invariance_residual(U, factorized),
                "thinned": zigzagd.invariance_residual(U, thinned),
                "thinned_vs_plain": float(abs(thinned.matrix - plain.matrix).max()),
            }
            details[f"d{dim}/{name}"] = residuals
            worst = max(worst, *residuals.values())
    return OracleResult(name="invariance", passed=worst < 1e-12, residual=worst, threshold=1e-12, details=details)


def binomial_z(observed: float, expected: float, n: int) -> float:
    """|observed - expected| in standard errors of a Bernoulli(expected) mean over n draws

    A prediction of 0 or 1 has no spread: an exact match scores 0 and anything else is infinite.
    """
    spread = expected * (1.0 - expected)
    if spread <= 0.0:
        return 0.0 if observed == expected else math.inf
    return abs(observed - expected) / math.sqrt(spread / n)


def oracle_escape(sizes: Dict[str, int], seed: int) -> OracleResult:
    """Mean escape time against the low-temperature prediction"""
    potential = discrete.from_name("doublewell:1.5,1.5,2")
    rows = []
    for k, eps in enumerate((0.5, 0.35, 0.25)):
        cfg = EscapeConfig(potential=potential, a=-2, b=2, eps=eps)
        rng = substream(seed, Stream.VALIDATE, 2, k)
        taus, left = zigzag1d.escape_time_samples(cfg, sizes["escape_samples"], rng)
        prediction, p_left = zigzag1d.eyring_kramers_prediction(cfg)
        mean = float(np.mean(taus))
        n = len(taus)
        rows.append(
            {
                "eps": eps,
                "ratio": mean / prediction,
                "left_z": binomial_z(float(np.mean(left)), p_left, n),
                "ks": stats.ks_statistic(taus / mean, lambda t: 1.0 - np.exp(-t)),
            }
        )
    errors = [abs(row["ratio"] - 1.0) for row in rows]
    monotone = all(b < a for a, b in zip(errors, errors[1:]))
    sides = all(row["left_z"] <= 3.0 for row in rows)
    ks_down = rows[-1]["ks"] < rows[0]["ks"]
    passed = monotone and sides and ks_down and errors[-1] < 0.15
    return OracleResult(name="escape", passed=passed, residual=errors[-1], threshold=0.15, details={"rows": rows})


def oracle_clt(sizes: Dict[str, int], seed: int) -> OracleResult:
    """Batch-means variance below 3 M_f and stable when the run length quadruples"""
    U = discrete.from_name("abs")
    at_zero = zigzag1d.stationary_mean(U, lambda x, v: (x == 0).astype(float))
    near_zero = zigzag1d.stationary_mean(U, lambda x, v: (np.abs(x) <= 1).astype(float))
    functions = {
        "at_zero": lambda x, v: (x == 0).astype(float) - at_zero,
        "near_zero": lambda x, v: (np.abs(x) <= 1).astype(float) - near_zero,
    }
    n = sizes["clt_steps"]
    xs, vs = zigzag1d.walk_path(U, 0, 1, 4 * n, substream(seed, Stream.VALIDATE, 3))
    details = {}
    worst_drift = 0.0
    bound_ok = True
    for name, f in functions.items():
        values = f(xs[:-1], vs[:-1])
        bound, _ = zigzag1d.clt_variance_bound(U, f)
        _, short = stats.batch_means(values[:n], 2000)
        _, long = stats.batch_means(values, 2000)
        drift = abs(short - long) / long
        worst_drift = max(worst_drift, drift)
        bound_ok = bound_ok and long <= 3.0 * bound and short <= 3.0 * bound
        details[name] = {"bound_3Mf": 3.0 * bound, "sigma2_n": short, "sigma2_4n": long}
    passed = bound_ok and worst_drift <= 0.2
    return OracleResult(name="clt", passed=passed, residual=worst_drift, threshold=0.2, details=details)


def oracle_scaling(sizes: Dict[str, int], seed: int) -> OracleResult:
    """W1 gap between rescaled walk and Zig-Zag process shrinks with eps"""
    H = continuous.from_name("quadratic")
    eps_list = [1 / 8, 1 / 16, 1 / 32, 1 / 64]
    n = sizes["scaling_samples"]
    gaps = continuous_zz.scaling_gap(H, eps_list, 2.0, n, substream(seed, Stream.VALIDATE, 4, 0))
    noise = continuous_zz.scaling_noise_floor(H, eps_list[-1], 2.0, n, substream(seed, Stream.VALIDATE, 4, 1))
    values = [gap for _, gap in gaps]
    rises = max(b - a for a, b in zip(values, values[1:]))
    passed = rises < 0.0 and values[0] - values[-1] > 2.0 * noise
    return OracleResult(
        name="scaling",
        passed=passed,
        residual=rises,
        threshold=0.0,
        details={"gaps": gaps, "noise_floor": noise},
    )


def _three_particle_split():
    positions = np.array([[1.0, 1.0, 1.0], [2.6, 1.0, 1.0], [1.0, 2.8, 1.5]])
    system = LJSystem(box_side=6.0, r=1.0, U0=1.0, R=2.0, positions=positions)
    return lj_force_split(system)


def oracle_thinning(sizes: Dict[str, int], seed: int) -> OracleResult:
    """Exact region measure of nested bounds, and thinned against naive jump segments"""
    rng = substream(seed, Stream.VALIDATE, 5, 0)
    region_error = 0.0
    for _ in range(1000):
        chain = np.sort(rng.random(rng.integers(1, 6)))[::-1]
        spec = thinning.BoundSpec(levels=[lambda s, q=q: q for q in chain])
        region_error = max(region_error, abs(thinning.acceptance_probability(None, spec) - chain[-1]))

    split = _three_particle_split()
    x = split.sys.positions
    v0 = np.array([[1.0, 0.5, 0.0], [-0.8, 0.2, 0.3], [0.1, -1.2, 0.4]])
    cfg = HybridConfig(delta=0.5, gamma=0.0, split=SplitKind.PAIRWISE, jump_mode=JumpMode.THINNED)
    model = hybrid.LJModel(split, SplitKind.PAIRWISE)
    naive_cfg = cfg.model_copy(update={"jump_mode": JumpMode.NAIVE})
    segments = sizes["segments"]
    outputs = {"thinned": [], "naive": []}
    counts = {"thinned": [], "naive": []}
    for label, run_cfg, stream in (("thinned", cfg, 1), ("naive", naive_cfg, 2)):
        gen = substream(seed, Stream.VALIDATE, 5, stream)
        for _ in range(segments):
            counters = CostCounters()
            outputs[label].append(model.jump(x, v0, run_cfg, gen, counters)[0])
            counts[label].append(counters.jumps_accepted)
    thinned_v = np.array(outputs["thinned"])
    naive_v = np.array(outputs["naive"])
    pvalues = [stats.ks_two_sample(thinned_v[:, k], naive_v[:, k])[1] for k in range(3)]
    pvalues.append(stats.ks_two_sample(counts["thinned"], counts["naive"])[1])
    threshold = 0.01 / len(pvalues)
    passed = region_error < 1e-12 and min(pvalues) > threshold
    return OracleResult(
        name="thinning",
        passed=passed,
        residual=min(pvalues),
        threshold=threshold,
        details={"region_error": region_error, "pvalues": pvalues},
    )


def oracle_strang_order(sizes: Dict[str, int], seed: int) -> OracleResult:
    """Richardson ratio of the stationary E|V|^2 bias on the harmonic oscillator"""
    deltas = (0.2, 0.1, 0.05)
    ratios = {}
    for mode in (OUMode.EXACT, OUMode.PAPER_LITERAL):
        values = [float(hybrid.harmonic_stationary_covariance(d, 1.0, mode)[1, 1]) for d in deltas]
        ratios[mode.value] = {"v2": values, "ratio": stats.richardson_ratio(*values)}
    ratio = ratios[OUMode.EXACT.value]["ratio"]
    logger.info(f"Strang order: exact ratio {ratio:.3f}, paper-literal ratio {ratios['paper-literal']['ratio']:.3f}")
    return OracleResult(
        name="strang_order",
        passed=3.0 <= ratio <= 5.0,
        residual=abs(ratio - 4.0),
        threshold=1.0,
        details=ratios,
    )


def oracle_conservation(sizes: Dict[str, int], seed: int) -> OracleResult:
    """Reflection isometry and the kinetic-walk identity along hybrid steps"""
    rng = substream(seed, Stream.VALIDATE, 7, 0)
    n = sizes["reflections"]
    v = rng.standard_normal((n, 3))
    F = rng.standard_normal((n, 3))
    reflected = hybrid.reflect(v, F)
    norm_error = float(np.max(np.abs(np.linalg.norm(reflected, axis=1) - np.linalg.norm(v, axis=1))))

    system = LJSystem(box_side=6.0, r=1.0, U0=1.0, R=2.0, positions=lattice_configuration(8, 6.0))
    model = hybrid.LJModel(lj_force_split(system), SplitKind.PAIRWISE)
    cfg = HybridConfig(delta=0.01, gamma=1.0, lam=0.5)
    state = PhaseState(x=system.positions, v=rng.standard_normal(system.positions.shape), box=system.box_side)
    walk_error = 0.0
    for _ in range(200):
        nxt = hybrid.strang_step(model, state, cfg, rng)
        gap = nxt.x - state.x - 0.5 * cfg.delta * (state.v + nxt.v)
        gap -= system.box_side * np.round(gap / system.box_side)
        walk_error = max(walk_error, float(np.max(np.abs(gap))))
        state = nxt
    residual = max(norm_error, walk_error)
    return OracleResult(
        name="conservation",
        passed=norm_error < 1e-12 and walk_error < 1e-10,
        residual=residual,
        threshold=1e-12,
        details={"norm_error": norm_error, "kinetic_walk_error": walk_error},
    )


def oracle_cost(sizes: Dict[str, int], seed: int) -> OracleResult:
    """Field evaluations per unit time against C_R M^2 H"""
    M, side = 32, 8.0
    system = LJSystem(box_side=side, r=1.0, U0=1.0, R=3.0, positions=lattice_configuration(M, side))
    split = lj_force_split(system)
    cfg = HybridConfig(delta=0.002, gamma=1.0)
    sampler = hybrid.HybridSampler(hybrid.LJModel(split, SplitKind.PAIRWISE), cfg, seed)
    start = PhaseState(x=system.positions, v=substream(seed, Stream.VALIDATE, 8).standard_normal((M, 3)), box=side)
    steps = sizes["cost_steps"]
    sampler.run(start, steps, block=max(1, steps // 10), progress=False)
    counters = sampler.counters
    horizon = steps * cfg.delta
    predicted = split.C_R * M * M * counters.mean_speed
    measured = counters.gij_evals / horizon
    error = abs(measured / predicted - 1.0)
    passed = error <= 0.1 and counters.f0_evals == steps
    return OracleResult(
        name="cost_model",
        passed=passed,
        residual=error,
        threshold=0.1,
        details={"measured": measured, "predicted": predicted, "C_R": split.C_R, "f0_evals": counters.f0_evals},
    )


def oracle_msd(sizes: Dict[str, int], seed: int) -> OracleResult:
    """Ballistic persistent walk against the diffusive i.i.d.-velocity walk"""
    lags = [16, 32, 64, 128, 256, 512, 1024]
    chains = sizes["msd_chains"]
    steps = lags[-1] + 1
    rng = substream(seed, Stream.VALIDATE, 9)
    free = discrete.from_name("flat")
    xs, _ = zigzag1d.run_chains(free, np.zeros(chains), np.ones(chains), steps, rng, record=True)
    ballistic = stats.msd(xs[:, :, None], lags)
    velocities = rng.choice([-1.0, 1.0], size=(steps + 1, chains))
    positions = np.concatenate([np.zeros((1, chains)), np.cumsum(0.5 * (velocities[:-1] + velocities[1:]), axis=0)])
    diffusive = stats.msd(positions[:, :, None], lags)
    slopes = {
        "ballistic": stats.loglog_slope(lags, [ballistic[k] for k in lags]),
        "diffusive": stats.loglog_slope(lags, [diffusive[k] for k in lags]),
    }
    residual = max(abs(slopes["ballistic"] - 2.0), abs(slopes["diffusive"] - 1.0))
    return OracleResult(name="msd", passed=residual <= 0.1, residual=residual, threshold=0.1, details=slopes)


ORACLES: Dict[str, Callable[[Dict[str, int], int], OracleResult]] = {
    "invariance": oracle_invariance,
    "escape": oracle_escape,
    "clt": oracle_clt,
    "scaling": oracle_scaling,
    "thinning": oracle_thinning,
    "strang_order": oracle_strang_order,
    "conservation": oracle_conservation,
    "cost_model": oracle_cost,
    "msd": oracle_msd,
}


def run_suite(profile: str = "quick", seed: int = 0, names: List[str] = None) -> List[OracleResult]:
    """Run the selected oracles; an oracle that raises is reported as failed"""
    if profile not in PROFILES:
        raise ValueError(f"unknown profile {profile!r}")
    sizes = PROFILES[profile]
    results = []
    for name in names or list(ORACLES):
        started = time.perf_counter()
        try:
            result = ORACLES[name](sizes, seed)
        except KineticError as e:
            logger.error(f"Oracle {name} raised: {e}")
            result = OracleResult(
                name=name, passed=False, residual=math.inf, threshold=0.0, details={"error": f"{type(e).__name__}: {e}"}
            )
        result.seconds = time.perf_counter() - started
        status = "passed" if result.passed else "FAILED"
        logger.info(f"Oracle {name} {status} (residual {result.residual:.4g}, {result.seconds:.1f}s)")
        results.append(result)
    return results
