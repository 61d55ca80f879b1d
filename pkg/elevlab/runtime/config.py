"""Process-level settings read from ELEVLAB_* environment variables."""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import psutil

from elevlab.core.errors import ConfigError

LOG_LEVELS = ("debug", "info", "warning", "error", "critical")


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or not raw.strip():
        return default
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigError(f"{name} must be an integer, got {raw!r}") from exc


def default_jobs() -> int:
    return max(1, psutil.cpu_count(logical=False) or psutil.cpu_count() or 1)


@dataclass(frozen=True)
class RuntimeConfig:
    log_level: str = "info"
    log_dir: Path | None = None
    jobs: int = 1
    output_dir: Path = Path("runs")

    def __post_init__(self) -> None:
        if self.log_level not in LOG_LEVELS:
            raise ConfigError(f"unknown log level {self.log_level!r}")
        if self.jobs < 1:
            raise ConfigError("jobs must be at least 1")

    @classmethod
    def from_env(cls) -> "RuntimeConfig":
        log_dir = os.getenv("ELEVLAB_LOG_DIR")
        return cls(
            log_level=os.getenv("ELEVLAB_LOG_LEVEL", "info").strip().lower(),
            log_dir=Path(log_dir) if log_dir else None,
            jobs=_env_int("ELEVLAB_JOBS", default_jobs()),
            output_dir=Path(os.getenv("ELEVLAB_OUTPUT_DIR", "runs")),
        )
