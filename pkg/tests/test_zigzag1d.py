"""Tests for the Zig-Zag walk on the integers"""

import math

import numpy as np
import pytest
from pydantic import ValidationError

from src.core.exceptions import ContractViolation, PreconditionError, StepCapExceeded
from src.core.models import EscapeConfig, Walk1D
from src.potentials import discrete
from src.samplers import zigzag1d


@pytest.fixture
def rng():
    """Seeded generator"""
    return np.random.default_rng(11)


@pytest.fixture
def well():
    """Symmetric double well between -2 and 2"""
    return discrete.from_name("doublewell:1.5,1.5,2")


def indicator_at_zero(U):
    mean = zigzag1d.stationary_mean(U, lambda x, v: (x == 0).astype(float))
    return lambda x, v: (x == 0).astype(float) - mean


def test_flat_potential_always_moves():
    """Test that the walk never flips on a flat landscape"""
    U = discrete.from_name("flat")
    state = Walk1D(x=0, v=1)
    for _ in range(5):
        state = zigzag1d.step1d(state, U, 0.999)
    assert (state.x, state.v, state.step_count) == (5, 1, 5)


def test_uphill_step_depends_on_uniform():
    """Test the move/flip decision against exp(-1) on U(x) = x^2"""
    U = discrete.from_name("quadratic")
    assert zigzag1d.step1d(Walk1D(x=0, v=1), U, 0.2) == Walk1D(x=1, v=1, step_count=1)
    assert zigzag1d.step1d(Walk1D(x=0, v=1), U, 0.5) == Walk1D(x=0, v=-1, step_count=1)


def test_downhill_step_always_moves():
    """Test that decreasing energy is always accepted"""
    U = discrete.from_name("quadratic")
    assert zigzag1d.step1d(Walk1D(x=2, v=-1), U, 0.999999).x == 1


def test_step_needs_one_dimension():
    """Test the dimension contract"""
    with pytest.raises(ContractViolation):
        zigzag1d.step1d(Walk1D(x=0, v=1), discrete.from_name("abs", dim=2), 0.5)


def test_velocity_must_be_unit():
    """Test the state validator"""
    with pytest.raises(ValidationError):
        Walk1D(x=0, v=0)


def test_parity_is_conserved(rng):
    """Test (-1)^x v (-1)^k along a long trajectory"""
    U = discrete.from_name("doublewell:1.5,2,2")
    xs, vs = zigzag1d.walk_path(U, 3, -1, 5000, rng)
    parity = zigzag1d.parity_invariant(xs, vs)
    assert np.all(parity == parity[0])
    assert Walk1D(x=3, v=-1).parity() == parity[0]


def test_run_chains_matches_flat_motion(rng):
    """Test lockstep chains on a flat landscape"""
    U = discrete.from_name("flat")
    x, v = zigzag1d.run_chains(U, np.array([0, 5, -3]), np.array([1, -1, 1]), 10, rng)
    assert x.tolist() == [10, -5, 7]
    assert v.tolist() == [1, -1, 1]


def test_run_chains_records_trajectories(rng):
    """Test the recorded shape and start"""
    U = discrete.from_name("abs")
    xs, vs = zigzag1d.run_chains(U, 0, 1, 20, rng, record=True)
    assert xs.shape == (21, 1)
    assert xs[0, 0] == 0 and vs[0, 0] == 1
    assert np.all(np.abs(np.diff(xs[:, 0])) <= 1)


def test_partition_sum_abs():
    """Test Z = coth(1/2) for U(x) = |x|"""
    assert zigzag1d.partition_sum(discrete.from_name("abs")) == pytest.approx(1.0 / math.tanh(0.5), rel=1e-12)


def test_stationary_mean_is_symmetric():
    """Test that the mean of x vanishes for a symmetric potential"""
    U = discrete.from_name("abs")
    assert abs(zigzag1d.stationary_mean(U, lambda x, v: x.astype(float))) < 1e-14


def test_clt_bound_requires_centered_function():
    """Test the precondition on mu(f)"""
    U = discrete.from_name("abs")
    with pytest.raises(PreconditionError):
        zigzag1d.clt_variance_bound(U, lambda x, v: (x == 0).astype(float))
    with pytest.raises(PreconditionError):
        zigzag1d.clt_variance_exact(U, lambda x, v: (x == 0).astype(float))


def test_renewal_block_length_is_return_time():
    """Test that the mean block length equals 1 / mu(0, +1) = 2 Z"""
    U = discrete.from_name("abs")
    moments = zigzag1d.renewal_moments(U, indicator_at_zero(U))
    assert moments.lam == pytest.approx(2.0 / math.tanh(0.5), rel=1e-12)
    assert abs(moments.mean) < 1e-10


def test_exact_variance_below_bound():
    """Test sigma^2 <= 3 M_f for centered indicators"""
    U = discrete.from_name("abs")
    for f in (indicator_at_zero(U), lambda x, v: x.astype(float)):
        bound, tail = zigzag1d.clt_variance_bound(U, f)
        exact = zigzag1d.clt_variance_exact(U, f)
        assert 0.0 < exact <= 3.0 * bound
        assert tail < 1e-13


def test_renewal_blocks_estimate_variance(rng):
    """Test the Monte Carlo block estimator against the exact renewal formula"""
    U = discrete.from_name("abs")
    f = indicator_at_zero(U)
    exact = zigzag1d.clt_variance_exact(U, f)
    estimate = zigzag1d.renewal_block_variance(U, f, 50_000, rng)
    assert estimate == pytest.approx(exact, rel=0.1)


def test_renewal_block_lengths(rng):
    """Test block lengths are even and average to 2 Z"""
    U = discrete.from_name("abs")
    _, lengths = zigzag1d.renewal_blocks(U, indicator_at_zero(U), 20_000, rng)
    assert np.all(lengths % 2 == 0)
    assert np.mean(lengths) == pytest.approx(2.0 / math.tanh(0.5), rel=0.05)


def test_escape_window_validation(well):
    """Test the ordering a < alpha <= 0 <= beta < b"""
    with pytest.raises(ValidationError):
        EscapeConfig(potential=well, a=0, b=2, eps=0.5)
    with pytest.raises(ValidationError):
        EscapeConfig(potential=well, a=-2, b=2, alpha=1, eps=0.5)
    with pytest.raises(ValidationError):
        EscapeConfig(potential=well, a=-2, b=2, eps=0.0)


def test_escape_energies(well):
    """Test barrier energies of the symmetric window"""
    cfg = EscapeConfig(potential=well, a=-2, b=2, eps=0.5)
    assert (cfg.e1, cfg.e2, cfg.e3) == pytest.approx((1.5, 0.75, 0.0))
    assert cfg.window_issues() == []


def test_prediction_symmetric_and_tilted():
    """Test the leading-order mean and exit side"""
    symmetric = EscapeConfig(potential=discrete.from_name("doublewell:1.5,1.5,2"), a=-2, b=2, eps=0.5)
    mean, p_left = zigzag1d.eyring_kramers_prediction(symmetric)
    assert mean == pytest.approx(math.exp(3.0))
    assert p_left == 0.5
    tilted = EscapeConfig(potential=discrete.from_name("doublewell:1.5,2,2"), a=-2, b=2, eps=0.5)
    mean, p_left = zigzag1d.eyring_kramers_prediction(tilted)
    assert mean == pytest.approx(2.0 * math.exp(3.0))
    assert p_left == 1.0


@pytest.mark.parametrize("eps", [0.5, 0.35, 0.25])
def test_exact_mean_escape_time_closed_form(well, eps):
    """Test the first-exit solve against T = (1 + 2p - p^2) / p^2, p = exp(-0.75 / eps)"""
    cfg = EscapeConfig(potential=well, a=-2, b=2, eps=eps)
    p = math.exp(-0.75 / eps)
    mean, p_left = zigzag1d.exact_mean_escape_time(cfg)
    assert mean == pytest.approx((1.0 + 2.0 * p - p * p) / (p * p), rel=1e-10)
    assert p_left == pytest.approx(0.5, abs=1e-12)


def test_exit_right_probability(well):
    """Test the exact exit side from the renewal cycle"""
    cfg = EscapeConfig(potential=well, a=-2, b=2, eps=0.5)
    q = math.exp(-3.0)
    assert zigzag1d.escape_geometric_parameter(cfg) == pytest.approx(2 * q - q * q)
    assert zigzag1d.exact_exit_right_probability(cfg) == pytest.approx(q / (2 * q - q * q))


def test_escape_samples_match_exact_mean(well, rng):
    """Test simulated escapes against the exact mean and exit side"""
    cfg = EscapeConfig(potential=well, a=-2, b=2, eps=0.5)
    taus, left = zigzag1d.escape_time_samples(cfg, 4000, rng)
    exact, _ = zigzag1d.exact_mean_escape_time(cfg)
    assert np.mean(taus) == pytest.approx(exact, rel=0.1)
    assert abs(np.mean(left) - 0.5) < 0.04
    assert np.all(taus >= 2)
    assert zigzag1d.sandwich_violation(taus, cfg) < 0.05


def test_single_escape_sample(well, rng):
    """Test the scalar escape routine"""
    cfg = EscapeConfig(potential=well, a=-2, b=2, eps=0.5)
    tau, left = zigzag1d.escape_time_sample(cfg, rng)
    assert tau >= 2
    assert isinstance(left, bool)


def test_escape_step_cap(well, rng):
    """Test that the cap raises with the partial count"""
    cfg = EscapeConfig(potential=well, a=-2, b=2, eps=0.5)
    with pytest.raises(StepCapExceeded) as info:
        zigzag1d.escape_time_samples(cfg, 10, rng, step_cap=1)
    assert info.value.partial_count == 1
