"""
Configuration for mlrank

Defaults come from environment variables (optionally loaded from a .env
file); command-line flags override them.
"""

import logging
import os
from dataclasses import dataclass, field

# Load environment variables from .env file
try:
    from dotenv import load_dotenv
    load_dotenv()
except ImportError:
    # dotenv not installed, continue without it
    pass


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"Environment variable {name} must be an integer, got {raw!r}")


def default_threads() -> int:
    return max(1, os.cpu_count() or 1)


@dataclass
class SolverSettings:
    """Process-wide defaults for stores, threads, seeds and logging"""
    store_type: str = "json"
    archive_dir: str = "archives"
    db_path: str = "mlrank_archives.db"
    threads: int = field(default_factory=default_threads)
    seed: int = 0
    log_level: str = "WARNING"
    em_starts: int = 2000

    @classmethod
    def from_env(cls) -> "SolverSettings":
        """
        Build settings from environment variables

        Environment variables:
        - MLRANK_STORE_TYPE: archive backend ('json' or 'sqlite')
        - MLRANK_ARCHIVE_DIR: directory for JSON archives
        - MLRANK_DB_PATH: SQLite archive database file
        - MLRANK_THREADS: worker threads for tracking and EM
        - MLRANK_SEED: default master seed
        - MLRANK_LOG_LEVEL: level for the mlrank_sdk logger
        - MLRANK_EM_STARTS: default number of EM starts
        """
        return cls(
            store_type=os.getenv("MLRANK_STORE_TYPE", "json"),
            archive_dir=os.getenv("MLRANK_ARCHIVE_DIR", "archives"),
            db_path=os.getenv("MLRANK_DB_PATH", "mlrank_archives.db"),
            threads=max(1, _env_int("MLRANK_THREADS", default_threads())),
            seed=_env_int("MLRANK_SEED", 0),
            log_level=os.getenv("MLRANK_LOG_LEVEL", "WARNING").upper(),
            em_starts=max(1, _env_int("MLRANK_EM_STARTS", 2000)),
        )


def configure_logging(level: str = "WARNING") -> None:
    """Attach a stream handler to the package logger (CLI use only)"""
    logger = logging.getLogger("mlrank_sdk")
    logger.setLevel(getattr(logging, level.upper(), logging.WARNING))
    if not logger.handlers:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s"))
        logger.addHandler(handler)
