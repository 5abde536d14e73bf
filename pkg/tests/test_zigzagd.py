"""Tests for the Zig-Zag walk on Z^d and its exact kernels"""

import numpy as np
import pytest
from pydantic import ValidationError

from src.core.exceptions import ConfigurationError, ContractViolation, StateSpaceTooLarge
from src.core.models import LatticeStateD, LyapunovParams, SweepOrder
from src.potentials import discrete
from src.samplers import zigzagd


@pytest.fixture
def rng():
    """Seeded generator"""
    return np.random.default_rng(5)


@pytest.fixture
def torus_abs():
    """U(x) = |x_1| + |x_2| on the 6x6 torus"""
    return discrete.from_name("abs", dim=2, torus_side=6)


def constant_flip_spec(U):
    cap = zigzagd.max_positive_increment(U) + 0.5
    return zigzagd.flip_bound_spec(U, lambda y, axis, s: cap)


def test_signature():
    """Test ((-1)^x_i v_i)_i"""
    assert zigzagd.signature(np.array([0, 1, -3]), np.array([1, 1, -1])).tolist() == [1, -1, 1]


def test_sweep_on_flat_landscape_moves_every_coordinate(rng):
    """Test that no velocity flips without energy increase"""
    U = discrete.from_name("flat", dim=3)
    state = LatticeStateD(x=[0, 0, 0], v=[1, -1, 1])
    for _ in range(4):
        state = zigzagd.sweep_transition(state, U, rng)
    assert state.x.tolist() == [4, -4, 4]
    assert state.v.tolist() == [1, -1, 1]
    assert state.step_count == 4


def test_thinned_sweep_on_flat_landscape(rng):
    """Test the bound chain never flips when the exact flip probability is zero"""
    U = discrete.from_name("flat", dim=2, torus_side=8)
    spec = constant_flip_spec(U)
    counters = zigzagd.SweepCounters()
    state = LatticeStateD(x=[0, 0], v=[1, 1])
    for _ in range(10):
        state = zigzagd.sweep_transition(state, U, rng, thin=spec, counters=counters)
    assert state.v.tolist() == [1, 1]
    assert state.x.tolist() == [2, 2]
    assert len(counters.bound_evals) == 2
    assert counters.bound_evals[0] == 20
    assert counters.bound_evals[1] <= 20


def test_factorized_sweep_counts_factor_evaluations(rng):
    """Test that every factor is tried when none rejects"""
    U = discrete.from_name("flat", dim=2)
    state, counters = zigzagd.sweep_transition_factorized(LatticeStateD(x=[0, 0], v=[1, 1]), U, rng)
    assert state.x.tolist() == [1, 1]
    assert counters.factor_evals == 4


def test_sweep_rejects_dimension_mismatch(rng):
    """Test the dimension contract"""
    with pytest.raises(ContractViolation):
        zigzagd.sweep_transition(LatticeStateD(x=[0], v=[1]), discrete.from_name("abs", dim=2), rng)


def test_fixed_order_needs_permutation():
    """Test the state validator for fixed sweep orders"""
    with pytest.raises(ValidationError):
        LatticeStateD(x=[0, 0], v=[1, 1], sweep_order=SweepOrder.FIXED)
    with pytest.raises(ValidationError):
        LatticeStateD(x=[0, 0], v=[1, 1], sweep_order=SweepOrder.FIXED, permutation=(0, 0))
    with pytest.raises(ValidationError):
        LatticeStateD(x=[0, 0], v=[1, 2])


@pytest.mark.parametrize("order", [SweepOrder.IDENTITY, SweepOrder.RANDOM])
def test_run_chains_on_flat_landscape(rng, order):
    """Test lockstep chains keep their velocities on a flat landscape"""
    U = discrete.from_name("flat", dim=2)
    x, v = zigzagd.run_chains_d(U, np.zeros((3, 2)), np.array([[1, 1], [-1, 1], [1, -1]]), 5, rng, order=order)
    assert x.tolist() == [[5, 5], [-5, 5], [5, -5]]
    assert v.tolist() == [[1, 1], [-1, 1], [1, -1]]


def test_run_chains_records_steps(rng):
    """Test the recorded trajectory shape"""
    U = discrete.from_name("abs", dim=2)
    xs, vs = zigzagd.run_chains_d(U, np.zeros((4, 2)), np.ones((4, 2)), 7, rng, record=True)
    assert xs.shape == (8, 4, 2)
    assert vs.shape == (8, 4, 2)
    assert np.all(np.abs(np.diff(xs, axis=0)) <= 1)


@pytest.mark.parametrize("factorized", [False, True])
def test_exact_kernel_leaves_target_invariant(torus_abs, factorized):
    """Test mu Q = mu to machine precision"""
    tm = zigzagd.build_transition_matrix(torus_abs, factorized=factorized)
    assert tm.size == 36 * 4
    assert np.allclose(np.asarray(tm.matrix.sum(axis=1)).ravel(), 1.0)
    assert zigzagd.invariance_residual(torus_abs, tm) < 1e-12


def test_exact_kernel_with_reversed_order(torus_abs):
    """Test invariance for a non-identity sweep permutation"""
    tm = zigzagd.build_transition_matrix(torus_abs, permutation=[1, 0])
    assert zigzagd.invariance_residual(torus_abs, tm) < 1e-12


def test_thinned_kernel_equals_plain_kernel(torus_abs):
    """Test that flip thinning reproduces the plain kernel"""
    plain = zigzagd.build_transition_matrix(torus_abs)
    thinned = zigzagd.build_transition_matrix(torus_abs, thin=constant_flip_spec(torus_abs))
    assert abs(thinned.matrix - plain.matrix).max() < 1e-12
    assert zigzagd.invariance_residual(torus_abs, thinned) < 1e-12


def test_exact_kernel_needs_torus():
    """Test that Z^d potentials cannot be enumerated"""
    with pytest.raises(ConfigurationError):
        zigzagd.build_transition_matrix(discrete.from_name("abs", dim=2))


def test_exact_kernel_size_limit():
    """Test the enumeration limit"""
    with pytest.raises(StateSpaceTooLarge):
        zigzagd.build_transition_matrix(discrete.from_name("flat", dim=4, torus_side=40))


def test_signature_classes_partition_states(torus_abs):
    """Test four classes of equal size in two dimensions"""
    tm = zigzagd.build_transition_matrix(torus_abs)
    classes = zigzagd.signature_classes(tm)
    assert len(classes) == 4
    assert all(len(indices) == 36 for indices in classes.values())
    assert sorted(np.concatenate(list(classes.values())).tolist()) == list(range(tm.size))


def test_class_laws_invariant_under_two_steps(torus_abs):
    """Test mu_s Q^2 = mu_s for every signature class"""
    tm = zigzagd.build_transition_matrix(torus_abs)
    two_step = (tm.matrix @ tm.matrix).T
    for key, law in zigzagd.reversal_stationary(torus_abs, tm).items():
        assert law.sum() == pytest.approx(1.0)
        assert np.sum(np.abs(two_step @ law - law)) < 1e-12


def test_classes_strongly_connected(torus_abs):
    """Test irreducibility of the kernel on each pair of opposite classes"""
    tm = zigzagd.build_transition_matrix(torus_abs)
    for key in zigzagd.signature_classes(tm):
        assert zigzagd.class_is_strongly_connected(tm, key)


def test_total_variation_decays():
    """Test that the two-step law converges to the class law"""
    U = discrete.from_name("abs", torus_side=6)
    tm = zigzagd.build_transition_matrix(U)
    x, v = np.array([0]), np.array([1])
    key = tuple(int(s) for s in zigzagd.signature(x, v))
    target = zigzagd.class_target(U, tm, key)
    distances = zigzagd.tv_decay(tm, tm.index(x, v), target, 200)
    assert np.all(np.diff(distances) <= 1e-12)
    assert distances[-1] < 0.1 * distances[0]


def test_lyapunov_drift_holds_for_abs():
    """Test QV <= gamma V + C on a box for U = |x_1| + |x_2|"""
    U = discrete.from_name("abs", dim=2)
    report = zigzagd.lyapunov_report(U, LyapunovParams.from_h(1.0), 4)
    assert report.states_checked == 81 * 4
    assert report.assumption_violations == 0
    assert report.holds
    assert report.empirical_gamma is not None
    assert report.empirical_gamma <= report.gamma + 1e-12


def test_lyapunov_default_parameters():
    """Test a = h/2 and the gamma of h = 1"""
    params = LyapunovParams.from_h(1.0)
    assert params.a == 0.5
    assert params.gamma == pytest.approx(0.7154, abs=1e-3)


def test_lyapunov_assumption_fails_on_flat_landscape():
    """Test that a flat landscape violates the outward increment condition"""
    U = discrete.from_name("flat", dim=2)
    report = zigzagd.lyapunov_report(U, LyapunovParams.from_h(1.0), 2)
    assert report.assumption_violations > 0
    assert not report.holds


def test_max_positive_increment():
    """Test the global flip bound on small tori"""
    assert zigzagd.max_positive_increment(discrete.from_name("abs:2", torus_side=6)) == 2.0
    assert zigzagd.max_positive_increment(discrete.from_name("doublewell:1.5,2,2", dim=2, torus_side=8)) == 1.0
    with pytest.raises(ConfigurationError):
        zigzagd.max_positive_increment(discrete.from_name("abs"))
