"""Experiment orchestrator: dispatches a run configuration and writes its artifacts"""

import math
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import numpy as np
import pandas as pd
from pydantic import ValidationError
from tqdm import tqdm

from ..core.config import Config
from ..core.exceptions import ConfigurationError
from ..core.models import (
    EscapeConfig,
    HybridConfig,
    JumpMode,
    LatticeStateD,
    OUMode,
    PhaseState,
    SplitKind,
    Subcommand,
    SweepOrder,
)
from ..core.rng import Stream, chain_streams, substream
from ..core.run_config import RunConfig
from ..potentials import continuous, discrete
from ..potentials.lennard_jones import LJSystem, format_xyz, lattice_configuration, lj_force_split, read_xyz
from ..samplers import continuous_zz, zigzag1d, zigzagd
from ..samplers.hybrid import HybridSampler, LJModel
from ..utils import output
from ..utils.logger import logger, run_logger
from ..utils.templates import render_junit, render_summary
from ..validation import stats
from ..validation.suite import run_suite

INVARIANCE_TOLERANCE = 1e-12
ESCAPE_COLUMNS = [
    "eps",
    "mean_tau",
    "predicted_tau",
    "p_left",
    "predicted_p_left",
    "ks_exp",
    "exact_mean_tau",
    "exact_p_left",
    "sandwich_violation",
]


class ExperimentOrchestrator:
    """Run one subcommand from a parsed configuration"""

    def __init__(self, show_progress: Optional[bool] = None):
        self.show_progress = Config.SHOW_PROGRESS if show_progress is None else show_progress
        self.log = logger
        self.handlers: Dict[Subcommand, Callable[[RunConfig], int]] = {
            Subcommand.ESCAPE: self.run_escape,
            Subcommand.ZZD: self.run_zzd,
            Subcommand.VALIDATE_INVARIANCE: self.run_validate_invariance,
            Subcommand.SCALING: self.run_scaling,
            Subcommand.HYBRID: self.run_hybrid,
            Subcommand.VALIDATE: self.run_validate,
        }

    def run(self, cfg: RunConfig) -> int:
        """
        Execute the run described by ``cfg``

        Returns:
            0 on success, 1 when a validation check fails. Errors propagate as exceptions.
        """
        self.log = run_logger(cfg.subcommand.value, cfg.config_hash())
        self.log.info(f"Running with seed={cfg.seed}, threads={cfg.threads}")
        return self.handlers[cfg.subcommand](cfg)

    # Artifact helpers

    @staticmethod
    def _path(cfg: RunConfig, suffix: str) -> Path:
        return Path(f"{cfg.out_prefix}{suffix}")

    @staticmethod
    def _meta(cfg: RunConfig) -> Dict[str, Any]:
        return output.provenance(cfg.config_hash(), cfg.seed)

    def _map(self, cfg: RunConfig, work: Callable[[int], Any], count: int, desc: str) -> List[Any]:
        """Apply ``work`` to 0..count-1, in a thread pool when configured; results keep index order"""
        if cfg.threads <= 1 or count <= 1:
            return [work(k) for k in tqdm(range(count), desc=desc, disable=not self.show_progress)]
        with ThreadPoolExecutor(max_workers=cfg.threads) as executor:
            futures = [executor.submit(work, k) for k in range(count)]
            return [future.result() for future in tqdm(futures, desc=desc, disable=not self.show_progress)]

    # Subcommands

    def run_escape(self, cfg: RunConfig) -> int:
        """Escape times from the well for every eps of the sweep"""
        potential = discrete.from_name(cfg["potential"])
        try:
            configs = [
                EscapeConfig(
                    potential=potential, a=cfg["a"], b=cfg["b"], alpha=cfg["alpha"], beta=cfg["beta"], eps=eps
                )
                for eps in cfg["eps"]
            ]
        except ValidationError as e:
            raise ConfigurationError(f"invalid escape window: {e.errors()[0]['msg']}") from e

        def work(k: int) -> Dict[str, float]:
            escape = configs[k]
            rng = substream(cfg.seed, Stream.ESCAPE, k)
            taus, left = zigzag1d.escape_time_samples(escape, cfg["samples"], rng, step_cap=cfg["step_cap"])
            predicted_tau, predicted_left = zigzag1d.eyring_kramers_prediction(escape)
            exact_tau, exact_left = zigzag1d.exact_mean_escape_time(escape)
            mean_tau = float(np.mean(taus))
            return {
                "eps": escape.eps,
                "mean_tau": mean_tau,
                "predicted_tau": predicted_tau,
                "p_left": float(np.mean(left)),
                "predicted_p_left": predicted_left,
                "ks_exp": stats.ks_statistic(taus / mean_tau, lambda t: -np.expm1(-t)),
                "exact_mean_tau": exact_tau,
                "exact_p_left": exact_left,
                "sandwich_violation": zigzag1d.sandwich_violation(taus, escape),
            }

        rows = self._map(cfg, work, len(configs), "escape")
        for row in rows:
            self.log.info(
                f"eps={row['eps']:g}: mean tau {row['mean_tau']:.6g}, prediction {row['predicted_tau']:.6g} "
                f"(ratio {row['mean_tau'] / row['predicted_tau']:.4f}), exit left {row['p_left']:.4f}"
            )
        path = output.write_csv(self._path(cfg, ".csv"), rows, ESCAPE_COLUMNS, self._meta(cfg))
        self.log.info(f"Wrote {path}")
        return 0

    def _zzd_potential(self, cfg: RunConfig) -> discrete.DiscretePotential:
        return discrete.from_name(cfg["potential"], dim=cfg["dim"], torus_side=cfg["torus"] or None)

    def run_zzd(self, cfg: RunConfig) -> int:
        """Trajectories of the d-dimensional walk, one block of rows per chain"""
        U = self._zzd_potential(cfg)
        dim, chains, steps = cfg["dim"], cfg["chains"], cfg["steps"]
        order = SweepOrder(cfg["order"])
        columns = ["step"] + [f"x{i + 1}" for i in range(dim)] + [f"v{i + 1}" for i in range(dim)] + ["chain"]

        if cfg["factorized"]:
            xs, vs, counter_rows = self._zzd_factorized(cfg, U, order)
        else:
            x0 = np.zeros((chains, dim), dtype=np.int64)
            v0 = np.ones((chains, dim), dtype=np.int64)
            xs, vs = zigzagd.run_chains_d(U, x0, v0, steps, substream(cfg.seed, Stream.ZZD), order=order, record=True)
            counter_rows = None

        # (steps + 1, chains, d) -> chain-major rows
        step_index = np.broadcast_to(np.arange(steps + 1)[:, None], (steps + 1, chains))
        chain_index = np.broadcast_to(np.arange(chains)[None, :], (steps + 1, chains))
        table = np.concatenate(
            [step_index[..., None], xs, vs, chain_index[..., None]], axis=2
        ).transpose(1, 0, 2).reshape(-1, 2 * dim + 2)
        frame = pd.DataFrame(table.astype(np.int64), columns=columns)
        path = output.write_csv(self._path(cfg, ".csv"), frame, columns, self._meta(cfg))
        self.log.info(f"Wrote {path}")
        if counter_rows is not None:
            counter_path = output.write_csv(
                self._path(cfg, "_counters.csv"), counter_rows, ["chain", "steps", "factor_evals"], self._meta(cfg)
            )
            self.log.info(f"Wrote {counter_path}")
        return 0

    def _zzd_factorized(self, cfg: RunConfig, U: discrete.DiscretePotential, order: SweepOrder):
        dim, chains, steps = cfg["dim"], cfg["chains"], cfg["steps"]
        streams = chain_streams(cfg.seed, Stream.ZZD, chains)

        def work(c: int):
            state = LatticeStateD(x=np.zeros(dim), v=np.ones(dim), sweep_order=order)
            xs = np.empty((steps + 1, dim), dtype=np.int64)
            vs = np.empty_like(xs)
            xs[0], vs[0] = state.x, state.v
            evals = 0
            for n in range(steps):
                state, counters = zigzagd.sweep_transition_factorized(state, U, streams[c])
                evals += counters.factor_evals
                xs[n + 1], vs[n + 1] = state.x, state.v
            return xs, vs, {"chain": c, "steps": steps, "factor_evals": evals}

        results = self._map(cfg, work, chains, "zzd")
        xs = np.stack([r[0] for r in results], axis=1)
        vs = np.stack([r[1] for r in results], axis=1)
        return xs, vs, [r[2] for r in results]

    def run_validate_invariance(self, cfg: RunConfig) -> int:
        """Exact ||mu Q - mu||_1 of the selected sweep kernel on a torus"""
        U = self._zzd_potential(cfg)
        thin = None
        if cfg["thinned"]:
            # registered potentials are coordinate sums, so one factor never rises more than U
            cap = zigzagd.max_positive_increment(U) + 0.5
            if cfg["factorized"]:
                thin = zigzagd.factor_bound_spec(U, [lambda y, direction: cap] * len(U.factor_terms or []))
            else:
                thin = zigzagd.flip_bound_spec(U, lambda y, axis, s: cap)
        tm = zigzagd.build_transition_matrix(U, thin=thin, factorized=cfg["factorized"])
        residual = zigzagd.invariance_residual(U, tm)
        classes = zigzagd.signature_classes(tm)
        print(f"{residual:.17g}")
        report = {
            "provenance": self._meta(cfg),
            "potential": U.name,
            "dim": U.dim,
            "torus": U.torus_side,
            "kernel": "factorized" if cfg["factorized"] else "plain",
            "thinned": cfg["thinned"],
            "states": tm.size,
            "signature_classes": len(classes),
            "residual": residual,
            "tolerance": INVARIANCE_TOLERANCE,
        }
        path = output.write_json(self._path(cfg, "_invariance.json"), report)
        self.log.info(f"Invariance residual {residual:.3e} over {tm.size} states; wrote {path}")
        if residual >= INVARIANCE_TOLERANCE:
            self.log.error(f"Invariance residual {residual:.3e} exceeds {INVARIANCE_TOLERANCE:g}")
            return 1
        return 0

    def run_scaling(self, cfg: RunConfig) -> int:
        """W1 between the rescaled walk and the continuous process at time t, per eps"""
        H = continuous.from_name(cfg["H"])
        t_probe, samples = cfg["t"], cfg["samples"]
        reference = continuous_zz.continuous_marginal(
            H, t_probe, samples, substream(cfg.seed, Stream.SCALING_CONTINUOUS)
        )

        def work(k: int) -> Dict[str, float]:
            eps = cfg["eps"][k]
            walk = continuous_zz.discrete_marginal(H, eps, t_probe, samples, substream(cfg.seed, Stream.SCALING_DISCRETE, k))
            return {"eps": eps, "w1": continuous_zz.coordinate_w1(walk, reference)}

        rows = self._map(cfg, work, len(cfg["eps"]), "scaling")
        for row in rows:
            self.log.info(f"eps={row['eps']:g}: W1 {row['w1']:.6g}")
        path = output.write_csv(self._path(cfg, ".csv"), rows, ["eps", "w1"], self._meta(cfg))
        self.log.info(f"Wrote {path}")
        return 0

    def _lj_system(self, cfg: RunConfig) -> LJSystem:
        M, box_side = cfg["M"], cfg["a"]
        if cfg["xyz_in"]:
            M, box_side, positions = read_xyz(Path(cfg["xyz_in"]))
            if (M, box_side) != (cfg["M"], cfg["a"]):
                self.log.warning(f"{cfg['xyz_in']} sets M={M}, a={box_side}; overriding the configured values")
        else:
            positions = lattice_configuration(M, box_side)
        try:
            return LJSystem(box_side=box_side, r=cfg["r"], U0=cfg["U0"], R=cfg["R"], positions=positions)
        except ValidationError as e:
            raise ConfigurationError(f"invalid Lennard-Jones system: {e.errors()[0]['msg']}") from e

    def run_hybrid(self, cfg: RunConfig) -> int:
        """Strang-split hybrid sampler on a Lennard-Jones system"""
        system = self._lj_system(cfg)
        split = lj_force_split(system, verlet_every=cfg["verlet_every"])
        try:
            hybrid_cfg = HybridConfig(
                delta=cfg["delta"],
                gamma=cfg["gamma"],
                lam=cfg["lambda"],
                split=SplitKind(cfg["split"]),
                ou_variance_mode=OUMode(cfg["ou_mode"]),
                jump_mode=JumpMode(cfg["jump_mode"]),
                threads=cfg.threads,
            )
        except ValidationError as e:
            raise ConfigurationError(f"invalid hybrid parameters: {e.errors()[0]['msg']}") from e
        model = LJModel(split, hybrid_cfg.split)
        velocities = substream(cfg.seed, Stream.HYBRID_INIT).standard_normal(system.positions.shape)
        state = PhaseState(x=system.positions, v=velocities, box=system.box_side)

        sampler = HybridSampler(model, hybrid_cfg, cfg.seed)
        result = sampler.run(
            state, cfg["steps"], block=cfg["block"], subsample=cfg["subsample"], progress=self.show_progress
        )

        meta = self._meta(cfg)
        traj_columns = ["step", "particle", "x", "y", "z", "vx", "vy", "vz"]
        frames = [
            pd.DataFrame(
                np.column_stack([np.full(len(x), step), np.arange(len(x)), x, v]),
                columns=traj_columns,
            ).astype({"step": np.int64, "particle": np.int64})
            for step, x, v in result.trajectory
        ]
        paths = [
            output.write_csv(self._path(cfg, "_traj.csv"), pd.concat(frames, ignore_index=True), traj_columns, meta),
            output.write_jsonl(self._path(cfg, "_stats.jsonl"), result.blocks, meta),
            output.write_csv(
                self._path(cfg, "_cost.csv"), result.cost, ["step", "f0_evals", "gij_evals", "proposals", "accepts"], meta
            ),
            output.write_text(self._path(cfg, "_final.xyz"), format_xyz(result.final.x, system.box_side)),
        ]
        counters = sampler.counters
        if counters.speed_count and split.C_R > 0:
            T = cfg["steps"] * hybrid_cfg.delta
            predicted = split.C_R * system.M**2 * counters.mean_speed * T
            self.log.info(f"gij evaluations {counters.gij_evals} vs C_R M^2 H T = {predicted:.6g}")
        for path in paths:
            self.log.info(f"Wrote {path}")
        return 0

    def run_validate(self, cfg: RunConfig) -> int:
        """Run the oracle suite; exit status 1 when any oracle fails"""
        results = run_suite(cfg["profile"], cfg.seed)
        suite_name = f"kinetic-{cfg['profile']}"
        output.write_text(self._path(cfg, "_junit.xml"), render_junit(suite_name, results))
        report = {
            "provenance": self._meta(cfg),
            "profile": cfg["profile"],
            "oracles": {
                r.name: {
                    "passed": r.passed,
                    "residual": r.residual if math.isfinite(r.residual) else None,
                    "threshold": r.threshold,
                    "seconds": r.seconds,
                    "details": r.details,
                }
                for r in results
            },
        }
        output.write_json(self._path(cfg, "_report.json"), report)
        print(render_summary(suite_name, results))
        failed = [r.name for r in results if not r.passed]
        if failed:
            self.log.error(f"Failed oracles: {', '.join(failed)}")
            return 1
        self.log.info("All oracles passed")
        return 0
