"""Tests for result writers and report templates"""

import json

import numpy as np
import pandas as pd
import pytest

from src import __version__
from src.core.models import OracleResult, SplitKind
from src.utils import output
from src.utils.templates import render_junit, render_summary


@pytest.fixture
def meta():
    """Provenance of a fictitious run"""
    return output.provenance("abcdef0123456789", 7)


def test_provenance_fields(meta):
    """Test hash, seed and version"""
    assert meta == {"config_hash": "abcdef0123456789", "seed": 7, "version": __version__}


def test_csv_has_meta_line_and_header(tmp_path, meta):
    """Test the comment line, the header and full float precision"""
    path = output.write_csv(tmp_path / "run.csv", [{"eps": 0.1 + 0.2, "w1": 1.0}], ["eps", "w1"], meta)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == f"# config_hash=abcdef0123456789,seed=7,version={__version__}"
    assert lines[1] == "eps,w1"
    assert lines[2].split(",")[0] == "0.30000000000000004"
    frame = output.read_csv(path)
    assert list(frame.columns) == ["eps", "w1"]
    assert frame["eps"][0] == pytest.approx(0.1 + 0.2, rel=1e-15)


def test_csv_from_frame_keeps_column_order(tmp_path):
    """Test that a DataFrame is written in the requested column order"""
    frame = pd.DataFrame({"b": [1, 2], "a": [3, 4], "extra": [0, 0]})
    path = output.write_csv(tmp_path / "frame.csv", frame, ["a", "b"])
    assert path.read_text(encoding="utf-8").splitlines() == ["a,b", "3,1", "4,2"]


def test_atomic_write_creates_parent_directories(tmp_path):
    """Test that nested output prefixes work"""
    path = output.write_text(tmp_path / "deep" / "er" / "final.xyz", "1\n8.0\n0 0 0\n")
    assert path.read_text(encoding="utf-8") == "1\n8.0\n0 0 0\n"


def test_failed_write_leaves_target_untouched(tmp_path):
    """Test that an exception keeps the previous file and removes the temporary one"""
    target = tmp_path / "report.json"
    output.write_text(target, "old")

    def broken(handle):
        handle.write("partial")
        raise RuntimeError("disk full")

    with pytest.raises(RuntimeError):
        output.atomic_write(target, broken)
    assert target.read_text(encoding="utf-8") == "old"
    assert [p.name for p in tmp_path.iterdir()] == ["report.json"]


def test_jsonl_provenance_first(tmp_path, meta):
    """Test the provenance line and numpy conversion"""
    path = output.write_jsonl(tmp_path / "stats.jsonl", [{"block": 0, "x": np.array([1.5, 2.0])}], meta)
    lines = [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines()]
    assert lines[0] == {"provenance": meta}
    assert lines[1] == {"block": 0, "x": [1.5, 2.0]}


def test_json_converts_models_and_enums(tmp_path):
    """Test pydantic models and enums in JSON payloads"""
    result = OracleResult(name="msd", passed=True, residual=0.01, threshold=0.1)
    path = output.write_json(tmp_path / "r.json", {"result": result, "split": SplitKind.PAIRWISE, "n": np.int64(3)})
    payload = json.loads(path.read_text(encoding="utf-8"))
    assert payload["result"]["name"] == "msd"
    assert payload["split"] == "pairwise"
    assert payload["n"] == 3


def test_json_rejects_unknown_objects(tmp_path):
    """Test that unsupported objects fail loudly"""
    with pytest.raises(TypeError):
        output.write_json(tmp_path / "bad.json", {"x": object()})


def test_junit_report_marks_failures():
    """Test the JUnit XML for one passing and one failing oracle"""
    results = [
        OracleResult(name="invariance", passed=True, residual=1e-16, threshold=1e-12, seconds=0.5),
        OracleResult(name="escape", passed=False, residual=0.3, threshold=0.15, seconds=1.25),
    ]
    xml = render_junit("kinetic-quick", results, timestamp="2024-01-01T00:00:00")
    assert 'tests="2"' in xml and 'failures="1"' in xml
    assert 'time="1.750"' in xml
    assert xml.count("<failure") == 1
    assert 'name="escape"' in xml


def test_summary_lists_every_oracle():
    """Test the plain-text summary"""
    results = [
        OracleResult(name="msd", passed=True, residual=0.02, threshold=0.1),
        OracleResult(name="clt", passed=False, residual=0.4, threshold=0.2),
    ]
    text = render_summary("kinetic-quick", results)
    assert text.startswith("kinetic-quick: 1/2 oracles passed")
    assert "[PASS] msd" in text
    assert "[FAIL] clt" in text
