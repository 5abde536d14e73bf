"""Tests for the kinetic walk steps"""

import numpy as np
import pytest

from src.core.exceptions import DomainError
from src.core.models import OUMode
from src.samplers.kinetic import energy_drift, kinetic_walk_step, ricci_ciccotti_step, shifted_verlet_step


def harmonic_gradient(x):
    return np.asarray(x, dtype=float)


def harmonic_energy(x):
    return 0.5 * float(np.sum(x * x))


def test_position_moves_with_mean_velocity():
    """Test x' = x + delta (v + v') / 2"""
    x, v = kinetic_walk_step(np.array([0.0]), np.array([1.0]), np.array([3.0]), 0.5)
    assert x.tolist() == [1.0]
    assert v.tolist() == [3.0]


def test_shifted_verlet_step_on_harmonic_potential():
    """Test the kick at the half-drifted point"""
    x, v = shifted_verlet_step(np.array([1.0]), np.array([0.0]), harmonic_gradient, 0.1)
    assert v.tolist() == pytest.approx([-0.1])
    assert x.tolist() == pytest.approx([1.0 - 0.005])


def test_energy_drift_is_small_and_second_order():
    """Test bounded energy error shrinking by four when the step halves"""
    x0, v0 = np.array([1.0]), np.array([0.0])
    coarse = energy_drift(x0, v0, harmonic_energy, harmonic_gradient, 0.02, 500)
    fine = energy_drift(x0, v0, harmonic_energy, harmonic_gradient, 0.01, 1000)
    assert coarse < 1e-3
    assert 3.0 < coarse / fine < 5.0


def test_frictionless_langevin_step_is_verlet():
    """Test that gamma = 0 reduces to the shifted Verlet step"""
    x0, v0 = np.array([0.3, -0.2]), np.array([0.5, 1.0])
    rng = np.random.default_rng(0)
    expected = shifted_verlet_step(x0, v0, harmonic_gradient, 0.05)
    actual = ricci_ciccotti_step(x0, v0, harmonic_gradient, 0.05, 0.0, rng)
    assert np.array_equal(actual[0], expected[0])
    assert np.array_equal(actual[1], expected[1])


@pytest.mark.parametrize("mode", [OUMode.EXACT, OUMode.PAPER_LITERAL])
def test_langevin_step_keeps_kinetic_identity(mode):
    """Test the position update from old and new velocity in both noise conventions"""
    rng = np.random.default_rng(4)
    x0, v0 = np.array([0.3, -0.2]), np.array([0.5, 1.0])
    x, v = ricci_ciccotti_step(x0, v0, harmonic_gradient, 0.05, 2.0, rng, mode)
    assert np.allclose(x, x0 + 0.025 * (v0 + v))


def test_langevin_arguments_checked():
    """Test the step size and friction domain"""
    rng = np.random.default_rng(0)
    with pytest.raises(DomainError):
        ricci_ciccotti_step(np.zeros(1), np.zeros(1), harmonic_gradient, 0.0, 1.0, rng)
    with pytest.raises(DomainError):
        ricci_ciccotti_step(np.zeros(1), np.zeros(1), harmonic_gradient, 0.1, -1.0, rng)
