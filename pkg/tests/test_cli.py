"""Tests for the command-line entry point"""

from unittest.mock import patch

import pytest

from main import EXIT_CONFIG, EXIT_FAILURE, EXIT_OK, build_parser, main
from src.core.config import Config
from src.core.exceptions import NumericalError
from src.utils import output


@pytest.fixture(autouse=True)
def quiet_run(monkeypatch):
    """No progress bars and one thread"""
    monkeypatch.delenv("KINETIC_THREADS", raising=False)
    monkeypatch.setattr(Config, "KINETIC_THREADS", 0)
    monkeypatch.setattr(Config, "SHOW_PROGRESS", False)


def test_no_command_prints_help(capsys):
    """Test the bare invocation"""
    assert main([]) == EXIT_OK
    assert "validate-invariance" in capsys.readouterr().out


def test_every_subcommand_has_a_parser():
    """Test that flags are derived from the schemas"""
    parser = build_parser()
    args = parser.parse_args(["zzd", "--dim", "3", "--factorized", "--out-prefix", "x"])
    assert (args.dim, args.factorized, args.out_prefix) == ("3", True, "x")
    args = parser.parse_args(["escape", "--eps", "0.5", "--eps", "0.25,0.1"])
    assert args.eps == ["0.5", "0.25,0.1"]


def test_escape_from_flags(tmp_path):
    """Test a small escape run"""
    prefix = tmp_path / "esc"
    argv = ["escape", "--eps", "0.5", "--samples", "200", "--seed", "1", "--out-prefix", str(prefix)]
    assert main(argv) == EXIT_OK
    frame = output.read_csv(tmp_path / "esc.csv")
    assert frame["eps"].tolist() == [0.5]


def test_config_file_and_flag_override(tmp_path):
    """Test that flags win over the config file"""
    config = tmp_path / "run.cfg"
    config.write_text("subcommand=zzd\ndim=1\nsteps=3\nchains=2\nseed=5\n", encoding="utf-8")
    prefix = tmp_path / "walk"
    assert main(["zzd", "--config", str(config), "--steps", "4", "--out-prefix", str(prefix)]) == EXIT_OK
    frame = output.read_csv(tmp_path / "walk.csv")
    assert list(frame.columns) == ["step", "x1", "v1", "chain"]
    assert len(frame) == 10


def test_validate_invariance_prints_residual(tmp_path, capsys):
    """Test the residual on stdout"""
    argv = ["validate-invariance", "--dim", "2", "--torus", "4", "--seed", "0", "--out-prefix", str(tmp_path / "inv")]
    assert main(argv) == EXIT_OK
    assert float(capsys.readouterr().out.strip().splitlines()[-1]) < 1e-12


@pytest.mark.parametrize(
    "text",
    [
        "subcommand=escape\nfoo=1\n",
        "subcommand=escape\nsamples=many\n",
        "subcommand=hybrid\n",
    ],
)
def test_bad_config_file_exits_with_two(tmp_path, capsys, text):
    """Test unknown keys, type mismatches and a file for another subcommand"""
    config = tmp_path / "bad.cfg"
    config.write_text(text, encoding="utf-8")
    assert main(["escape", "--config", str(config), "--out-prefix", str(tmp_path / "x")]) == EXIT_CONFIG
    assert "config error:" in capsys.readouterr().err


def test_missing_config_file_exits_with_two(tmp_path):
    """Test an unreadable config file"""
    assert main(["escape", "--config", str(tmp_path / "missing.cfg")]) == EXIT_CONFIG


def test_bad_flag_value_exits_with_two(tmp_path):
    """Test a flag that fails the type check"""
    assert main(["hybrid", "--M", "eight", "--out-prefix", str(tmp_path / "h")]) == EXIT_CONFIG


def test_cutoff_error_exits_with_two(tmp_path, capsys):
    """Test that a configuration error from the library maps to exit status 2"""
    argv = ["hybrid", "--a", "5", "--R", "3", "--M", "8", "--steps", "1", "--out-prefix", str(tmp_path / "h")]
    assert main(argv) == EXIT_CONFIG
    assert "split radius" in capsys.readouterr().err


def test_library_error_exits_with_one(tmp_path, capsys):
    """Test that other kinetic errors map to exit status 1"""
    with patch("src.workflow.orchestrator.ExperimentOrchestrator.run_scaling", side_effect=NumericalError("bad", 1.0)):
        assert main(["scaling", "--out-prefix", str(tmp_path / "s")]) == EXIT_FAILURE
    assert "Error: bad" in capsys.readouterr().err


def test_failing_validation_exits_with_one(tmp_path):
    """Test the validate exit status"""
    with patch("src.workflow.orchestrator.ExperimentOrchestrator.run_validate", return_value=1):
        assert main(["validate", "--out-prefix", str(tmp_path / "v")]) == EXIT_FAILURE


def test_init_creates_directories(tmp_path, monkeypatch):
    """Test the init command"""
    monkeypatch.setattr(Config, "OUTPUT_DIR", tmp_path / "results")
    monkeypatch.setattr(Config, "LOGS_DIR", tmp_path / "logs")
    monkeypatch.setattr(Config, "DATA_DIR", tmp_path / "data")
    with patch.object(Config, "validate", return_value=[]):
        assert main(["init"]) == EXIT_OK
    assert all((tmp_path / name).is_dir() for name in ("results", "logs", "data"))
