"""Tests for the continuous-time Zig-Zag process and the lattice embedding"""

import math

import numpy as np
import pytest
from pydantic import ValidationError

from src.core.exceptions import BoundViolation, ConfigurationError, DomainError
from src.core.models import PDMPState
from src.potentials import continuous
from src.samplers import continuous_zz
from src.samplers.continuous_zz import LipschitzRateBound, ZigZagPath, invert_affine


@pytest.fixture
def rng():
    """Seeded generator"""
    return np.random.default_rng(31)


def test_invert_affine():
    """Test the inverse of the integrated affine rate"""
    assert invert_affine(1.0, 0.0, 2.0) == 2.0
    assert invert_affine(0.0, 2.0, 1.0) == pytest.approx(1.0)
    t = invert_affine(1.0, 2.0, 1.5)
    assert t + t * t == pytest.approx(1.5)
    assert math.isinf(invert_affine(0.0, 0.0, 1.0))


def test_state_validation():
    """Test unit velocities and non-negative time"""
    with pytest.raises(ValidationError):
        PDMPState(y=[0.0], w=[0.5])
    with pytest.raises(ValidationError):
        PDMPState(y=[0.0], w=[1.0], t=-1.0)
    with pytest.raises(ValidationError):
        PDMPState(y=[0.0, 1.0], w=[1.0])


def test_position_at_follows_events():
    """Test the piecewise-linear interpolation of a path"""
    init = PDMPState(y=[0.0], w=[1.0])
    path = ZigZagPath(init, [(1.0, 0)], PDMPState(y=[-1.0], w=[-1.0], t=3.0))
    assert path.position_at(0.5).tolist() == [0.5]
    assert path.position_at(2.0).tolist() == [0.0]
    assert path.position_at(3.0).tolist() == [-1.0]
    with pytest.raises(DomainError):
        path.position_at(3.5)


def test_flat_potential_never_flips(rng):
    """Test straight-line motion without any flip rate"""
    H = continuous.from_name("flat", dim=2)
    path = continuous_zz.simulate_zz(H, LipschitzRateBound(), 5.0, PDMPState(y=[0.0, 0.0], w=[1.0, -1.0]), rng)
    assert len(path) == 0
    assert path.proposals == 0
    assert path.final.t == pytest.approx(5.0)
    assert np.allclose(path.final.y, [5.0, -5.0])


def test_path_end_matches_interpolation(rng):
    """Test that the final state agrees with the event list"""
    H = continuous.from_name("quadratic", dim=2)
    init = PDMPState(y=[0.5, -0.5], w=[1.0, 1.0])
    path = continuous_zz.simulate_zz(H, LipschitzRateBound(), 10.0, init, rng)
    assert len(path) > 0
    assert np.allclose(path.position_at(10.0), path.final.y)
    times = [time for time, _ in path.events]
    assert times == sorted(times)


@pytest.mark.parametrize("name", ["quadratic", "quartic", "doublewell"])
def test_lipschitz_bound_dominates_rates(name, rng):
    """Test c + m t >= true flip rate on the horizon from random states"""
    H = continuous.from_name(name, dim=2)
    bound = LipschitzRateBound(horizon=0.5)
    for _ in range(30):
        state = PDMPState(y=rng.normal(size=2), w=rng.choice([-1.0, 1.0], size=2))
        assert bound.verify(H, state) <= 1e-12


def test_too_small_bound_is_detected(rng):
    """Test that an invalid majorant raises at the first proposal"""
    H = continuous.from_name("quadratic")
    with pytest.raises(BoundViolation) as info:
        continuous_zz.simulate_zz(H, LipschitzRateBound(lipschitz=0.0), 100.0, PDMPState(y=[1.0], w=[1.0]), rng)
    assert info.value.ratio > 1.0


def test_bound_arguments_checked(rng):
    """Test horizon and dimension checks"""
    with pytest.raises(DomainError):
        LipschitzRateBound(horizon=0.0)
    H = continuous.from_name("quadratic", dim=2)
    with pytest.raises(ConfigurationError):
        continuous_zz.simulate_zz(H, LipschitzRateBound(), 1.0, PDMPState(y=[0.0], w=[1.0]), rng)


def test_first_flip_time_of_gaussian(rng):
    """Test E[T] = sqrt(pi / 2) for the rate (y + t)_+ started at y = 0"""
    H = continuous.from_name("quadratic")
    times = continuous_zz.first_event_times(H, LipschitzRateBound(), PDMPState(y=[0.0], w=[1.0]), 4000, rng)
    assert times.shape == (4000, 1)
    assert np.all(np.isfinite(times))
    assert np.mean(times) == pytest.approx(math.sqrt(math.pi / 2.0), rel=0.05)


def test_embedding_reads_the_smooth_potential():
    """Test U_eps(k) = H(eps k)"""
    H = continuous.from_name("quadratic", dim=2)
    U = continuous_zz.embed_discrete(H, 0.5)
    assert float(U.evaluate(np.array([2, -2]))) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        continuous_zz.embed_discrete(H, 0.0)


def test_scaling_gap_vanishes_without_forces(rng):
    """Test that the rescaled walk and the process coincide on a flat landscape"""
    H = continuous.from_name("flat", dim=2)
    gaps = continuous_zz.scaling_gap(H, [0.1, 0.05], 1.0, 50, rng)
    assert [eps for eps, _ in gaps] == [0.1, 0.05]
    assert all(gap < 1e-12 for _, gap in gaps)


def test_coordinate_w1():
    """Test the per-coordinate sum of W1 distances"""
    a = np.zeros((10, 2))
    b = np.column_stack([np.ones(10), 2.0 * np.ones(10)])
    assert continuous_zz.coordinate_w1(a, b) == pytest.approx(3.0)
    assert continuous_zz.coordinate_w1(a, a) == 0.0
