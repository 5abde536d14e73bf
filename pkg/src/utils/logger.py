"""Logging for long-running samplers: colored console lines that coexist with tqdm bars, plus a log file"""

import logging
from pathlib import Path
from typing import Any, MutableMapping, Optional, Tuple

from tqdm import tqdm

try:
    import colorlog

    HAS_COLORLOG = True
except ImportError:
    HAS_COLORLOG = False

from ..core.config import Config

CONSOLE_FORMAT = "%(levelname)-8s %(name)s - %(message)s"
FILE_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


class TqdmHandler(logging.StreamHandler):
    """Console handler writing through tqdm so active progress bars are redrawn below the message"""

    def emit(self, record: logging.LogRecord) -> None:
        try:
            tqdm.write(self.format(record), file=self.stream)
        except Exception:
            self.handleError(record)


class RunAdapter(logging.LoggerAdapter):
    """Prefixes every message with the subcommand and config hash of the current run"""

    def process(self, msg: Any, kwargs: MutableMapping[str, Any]) -> Tuple[Any, MutableMapping[str, Any]]:
        return f"[{self.extra['subcommand']} {self.extra['config_hash']}] {msg}", kwargs


def _console_formatter() -> logging.Formatter:
    if not HAS_COLORLOG:
        return logging.Formatter(CONSOLE_FORMAT)
    return colorlog.ColoredFormatter(
        "%(log_color)s%(levelname)-8s%(reset)s %(blue)s%(name)s%(reset)s - %(message)s",
        log_colors={
            "DEBUG": "cyan",
            "INFO": "green",
            "WARNING": "yellow",
            "ERROR": "red",
            "CRITICAL": "red,bg_white",
        },
    )


def setup_logger(
    name: str = "kinetic",
    log_file: Optional[Path] = None,
    level: Optional[str] = None,
) -> logging.Logger:
    """Console (stderr, via tqdm) and file handlers; stdout is reserved for command results"""
    logger = logging.getLogger(name)
    log_level = getattr(logging, (level or Config.LOG_LEVEL).upper(), logging.INFO)
    logger.setLevel(log_level)
    logger.propagate = False
    logger.handlers.clear()

    console_handler = TqdmHandler()
    console_handler.setLevel(log_level)
    console_handler.setFormatter(_console_formatter())
    logger.addHandler(console_handler)

    log_file = log_file or Config.LOG_FILE
    log_file.parent.mkdir(parents=True, exist_ok=True)
    file_handler = logging.FileHandler(log_file, encoding="utf-8")
    # per-step detail goes to the file only
    file_handler.setLevel(min(log_level, logging.DEBUG))
    file_handler.setFormatter(logging.Formatter(FILE_FORMAT, datefmt="%Y-%m-%d %H:%M:%S"))
    logger.addHandler(file_handler)
    if file_handler.level < log_level:
        logger.setLevel(file_handler.level)

    return logger


def run_logger(subcommand: str, config_hash: str) -> RunAdapter:
    """Logger for one orchestrated run"""
    return RunAdapter(logger, {"subcommand": subcommand, "config_hash": config_hash})


logger = setup_logger()
