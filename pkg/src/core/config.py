"""Environment-driven settings (.env) for output location, logging, threads and seeds"""

import os
from pathlib import Path

from dotenv import load_dotenv

# Load environment variables
load_dotenv()


class Config:
    """Environment settings shared by every run; run parameters live in RunConfig"""

    # Project paths
    BASE_DIR = Path(__file__).parent.parent.parent
    DATA_DIR = BASE_DIR / "data"
    LOGS_DIR = BASE_DIR / "logs"
    OUTPUT_DIR: Path = Path(os.getenv("OUTPUT_DIR", str(BASE_DIR / "output")))

    # Logging
    LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO")
    LOG_FILE: Path = Path(os.getenv("LOG_FILE", str(LOGS_DIR / "kinetic.log")))

    # Execution
    KINETIC_THREADS: int = int(os.getenv("KINETIC_THREADS", "0"))  # 0 = not set
    DEFAULT_SEED: int = int(os.getenv("DEFAULT_SEED", "0"))
    STEP_CAP: int = int(os.getenv("STEP_CAP", str(10**10)))
    SHOW_PROGRESS: bool = os.getenv("SHOW_PROGRESS", "true").lower() == "true"

    @classmethod
    def thread_count(cls, requested: int = 1) -> int:
        """Effective worker count; the environment variable wins over the run config"""
        env_value = os.getenv("KINETIC_THREADS")
        if env_value:
            return max(1, int(env_value))
        if cls.KINETIC_THREADS > 0:
            return cls.KINETIC_THREADS
        return max(1, requested)

    @classmethod
    def ensure_directories(cls):
        """Create the data, logs and output directories"""
        cls.DATA_DIR.mkdir(exist_ok=True)
        cls.LOGS_DIR.mkdir(exist_ok=True)
        cls.OUTPUT_DIR.mkdir(parents=True, exist_ok=True)

    @classmethod
    def validate(cls) -> list[str]:
        """Problems with the environment settings, empty when everything is usable"""
        errors = []

        if cls.LOG_LEVEL not in {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}:
            errors.append(f"LOG_LEVEL '{cls.LOG_LEVEL}' is not a logging level")
        if cls.KINETIC_THREADS < 0:
            errors.append("KINETIC_THREADS must be non-negative")
        if cls.STEP_CAP < 1:
            errors.append("STEP_CAP must be positive")
        if cls.DEFAULT_SEED < 0 or cls.DEFAULT_SEED >= 2**64:
            errors.append("DEFAULT_SEED must fit in 64 unsigned bits")

        return errors


# Initialize directories on import
Config.ensure_directories()
