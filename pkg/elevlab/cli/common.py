"""Argument parsing, runtime setup and exit-code policy shared by the commands."""

from __future__ import annotations

import argparse
import logging
import math
import sys
from collections.abc import Callable
from pathlib import Path

from rich.console import Console

from elevlab.core.errors import ConfigError, ElevlabError
from elevlab.core.geometry import SensorConfig, Twist
from elevlab.runtime.config import LOG_LEVELS, RuntimeConfig
from elevlab.runtime.logging import configure_logging

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2

PROFILES = {"aris": SensorConfig.aris, "desk": SensorConfig.desk}

console = Console()
logger = logging.getLogger("elevlab.cli")


class CommandParser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with status 1."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def add_runtime_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--log-level", choices=LOG_LEVELS, help="Overrides ELEVLAB_LOG_LEVEL")
    parser.add_argument("--log-dir", type=Path, help="Overrides ELEVLAB_LOG_DIR")
    parser.add_argument("--jobs", type=int, help="Parallel workers; overrides ELEVLAB_JOBS")


def add_sensor_arguments(parser: argparse.ArgumentParser, default_profile: str) -> None:
    parser.add_argument("--profile", choices=sorted(PROFILES), default=default_profile)
    parser.add_argument("--config", type=Path, help="Sensor configuration JSON (angles in degrees)")


def apply_runtime(args: argparse.Namespace) -> RuntimeConfig:
    """Environment settings with command-line overrides; also configures logging."""
    runtime = RuntimeConfig.from_env()
    runtime = RuntimeConfig(
        log_level=args.log_level or runtime.log_level,
        log_dir=args.log_dir or runtime.log_dir,
        jobs=args.jobs if args.jobs is not None else runtime.jobs,
        output_dir=runtime.output_dir,
    )
    configure_logging(runtime.log_level, runtime.log_dir)
    return runtime


def sensor_config(args: argparse.Namespace) -> SensorConfig:
    if getattr(args, "config", None):
        return SensorConfig.load(args.config)
    return PROFILES[args.profile]()


def parse_float_list(text: str) -> tuple[float, ...]:
    try:
        values = tuple(float(part) for part in text.split(",") if part.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc
    if not values:
        raise argparse.ArgumentTypeError("expected at least one number")
    return values


def parse_range(text: str) -> tuple[float, float]:
    """``low:high``"""
    parts = text.split(":")
    try:
        low, high = (float(p) for p in parts)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected low:high, got {text!r}") from exc
    return low, high


def parse_scan(text: str) -> tuple[float, float, int]:
    """``a:b:n`` with azimuths in degrees."""
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected a:b:n, got {text!r}")
    try:
        return float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected a:b:n, got {text!r}") from exc


def parse_twist(text: str) -> Twist:
    """``tx,ty,tz,wx,wy,wz`` with translations in meters and rotations in degrees."""
    values = parse_float_list(text)
    if len(values) != 6:
        raise argparse.ArgumentTypeError("a twist has six components: tx,ty,tz,wx,wy,wz")
    return Twist(t=values[:3], omega=tuple(math.radians(v) for v in values[3:]))


def run_command(body: Callable[[], int]) -> None:
    """Run a command body and translate failures into exit codes."""
    try:
        code = body()
    except ConfigError as exc:
        console.print(f"[bold red]error:[/bold red] {exc}")
        raise SystemExit(EXIT_USAGE) from exc
    except ElevlabError as exc:
        logger.error("%s", exc)
        console.print(f"[bold red]failed:[/bold red] {exc}")
        raise SystemExit(EXIT_RUNTIME) from exc
    raise SystemExit(code)
