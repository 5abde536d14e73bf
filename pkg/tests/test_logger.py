"""Tests for the logging setup"""

import logging

from src.utils.logger import TqdmHandler, run_logger, setup_logger


def test_run_logger_prefixes_messages():
    """Test the subcommand and hash prefix"""
    adapter = run_logger("escape", "abcdef0123456789")
    msg, _ = adapter.process("Wrote out.csv", {})
    assert msg == "[escape abcdef0123456789] Wrote out.csv"


def test_file_keeps_debug_detail(tmp_path):
    """Test that the file gets DEBUG lines while the console stays at INFO"""
    log_file = tmp_path / "logs" / "run.log"
    log = setup_logger("kinetic-test", log_file=log_file, level="INFO")
    console = next(h for h in log.handlers if isinstance(h, TqdmHandler))
    assert console.level == logging.INFO

    log.debug("built kernel")
    log.info("finished")
    for handler in log.handlers:
        handler.flush()
    text = log_file.read_text(encoding="utf-8")
    assert "DEBUG - built kernel" in text
    assert "INFO - finished" in text
    for handler in list(log.handlers):
        handler.close()
        log.removeHandler(handler)
