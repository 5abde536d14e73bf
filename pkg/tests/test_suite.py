"""Tests for the validation oracle suite"""

import math

import numpy as np
import pytest

from src.core.exceptions import NumericalError
from src.samplers import hybrid
from src.validation import suite


def test_unknown_profile():
    """Test the profile check"""
    with pytest.raises(ValueError):
        suite.run_suite("huge")


def test_raising_oracle_is_reported_as_failed(monkeypatch):
    """Test that library errors inside an oracle become a failed result"""

    def boom(sizes, seed):
        raise NumericalError("did not converge", residual=1.0)

    monkeypatch.setitem(suite.ORACLES, "boom", boom)
    (result,) = suite.run_suite("quick", 0, names=["boom"])
    assert not result.passed
    assert math.isinf(result.residual)
    assert result.details["error"].startswith("NumericalError")
    assert result.seconds >= 0.0


def test_strang_order_oracle():
    """Test the second-order Richardson ratio of the exact OU convention"""
    (result,) = suite.run_suite("quick", 0, names=["strang_order"])
    assert result.passed
    assert 3.0 <= result.details["exact"]["ratio"] <= 5.0


@pytest.mark.slow
def test_exact_oracles_pass():
    """Test the oracles without sampling noise"""
    results = suite.run_suite("quick", 1, names=["invariance", "conservation"])
    assert all(r.passed for r in results), [(r.name, r.residual) for r in results]


@pytest.mark.slow
def test_statistical_oracles_pass():
    """Test the sampling oracles on the quick profile"""
    results = suite.run_suite("quick", 0, names=["thinning", "msd"])
    assert all(r.passed for r in results), [(r.name, r.residual) for r in results]


@pytest.mark.parametrize(
    "observed, expected, z",
    [(0.5, 0.5, 0.0), (0.6, 0.5, 2.0), (0.0, 0.0, 0.0), (0.1, 0.0, math.inf), (0.9, 1.0, math.inf)],
)
def test_binomial_z(observed, expected, z):
    """Test the exit-side score, including predictions without spread"""
    assert suite.binomial_z(observed, expected, 100) == pytest.approx(z)


def test_conservation_oracle_checks_sampler_reflection(monkeypatch):
    """Test that the oracle runs the reflection the sampler uses"""
    sizes = {"reflections": 1000}
    assert suite.oracle_conservation(sizes, 3).passed
    monkeypatch.setattr(hybrid, "reflect", lambda v, F: 1.5 * np.asarray(v, dtype=float))
    result = suite.oracle_conservation(sizes, 3)
    assert not result.passed
    assert result.details["norm_error"] > 0.1


@pytest.mark.slow
def test_cost_oracle_passes():
    """Test field evaluations per unit time against the bound model"""
    (result,) = suite.run_suite("quick", 0, names=["cost_model"])
    assert result.passed, result.details
    assert result.details["f0_evals"] == suite.PROFILES["quick"]["cost_steps"]


@pytest.mark.slow
def test_clt_oracle_respects_variance_bound():
    """Test the batch-means variance against three times the bound"""
    (result,) = suite.run_suite("quick", 0, names=["clt"])
    for name in ("at_zero", "near_zero"):
        row = result.details[name]
        assert 0.0 < row["sigma2_n"] <= row["bound_3Mf"]
        assert 0.0 < row["sigma2_4n"] <= row["bound_3Mf"]
    assert math.isfinite(result.residual)


@pytest.mark.slow
def test_escape_oracle_rows():
    """Test the escape rows for every temperature"""
    (result,) = suite.run_suite("quick", 0, names=["escape"])
    rows = result.details["rows"]
    assert [row["eps"] for row in rows] == [0.5, 0.35, 0.25]
    for row in rows:
        assert row["ratio"] > 0.0
        assert math.isfinite(row["left_z"])
        assert 0.0 <= row["ks"] <= 1.0


@pytest.mark.slow
def test_scaling_oracle_gaps():
    """Test one W1 gap per eps and a positive noise floor"""
    (result,) = suite.run_suite("quick", 0, names=["scaling"])
    gaps = result.details["gaps"]
    assert [eps for eps, _ in gaps] == [1 / 8, 1 / 16, 1 / 32, 1 / 64]
    assert all(gap >= 0.0 for _, gap in gaps)
    assert result.details["noise_floor"] > 0.0
