"""Motion-field sensitivity scans and degeneracy scores."""

from __future__ import annotations

import argparse
import math
from pathlib import Path

from rich import box
from rich.table import Table

from elevlab.core.errors import ConfigError
from elevlab.core.geometry import Twist
from elevlab.core.motion_field import SCAN_CSV_HEADER, degeneracy_score, sensitivity_scan
from elevlab.sim.dataset import MOTION_RANGES, MOTION_TAGS, basic_twist
from elevlab.utils import files

from .common import (
    CommandParser,
    add_runtime_arguments,
    add_sensor_arguments,
    apply_runtime,
    console,
    parse_scan,
    parse_twist,
    run_command,
    sensor_config,
)

# (r meters, phi degrees, twist) for the three canonical sensitivity plots
PRESETS: dict[str, tuple[float, float, Twist]] = {
    "roll": (3.5, 3.5, Twist(omega=(math.radians(10.0), 0.0, 0.0))),
    "pitch": (3.5, 3.5, Twist(omega=(0.0, math.radians(10.0), 0.0))),
    "heave": (3.5, 3.5, Twist(t=(0.0, 0.0, 0.1745))),
}
SUMMARY_COLUMNS = (
    "peak |dx| (m)",
    "peak |dy| (m)",
    "rho (m)",
    "gamma (m)",
    "scan score",
    "grid score",
)


def build_arg_parser() -> argparse.ArgumentParser:
    parser = CommandParser(description="Tabulate the motion field and score elevation")
    parser.add_argument("--preset", choices=sorted(PRESETS), help="Canonical r, phi, twist")
    parser.add_argument("--r", type=float, default=3.5, help="Range in meters")
    parser.add_argument("--phi", type=float, default=3.5, help="Elevation in degrees")
    parser.add_argument(
        "--twist",
        type=parse_twist,
        help="tx,ty,tz,wx,wy,wz (meters, degrees)",
    )
    parser.add_argument("--scan-theta", type=parse_scan, help="Azimuth scan a:b:n in degrees")
    parser.add_argument("--out", type=Path, help="Sensitivity CSV destination")
    parser.add_argument(
        "--classify",
        action="store_true",
        help="Also score the six basic motions at their mid-range magnitudes",
    )
    add_sensor_arguments(parser, "aris")
    add_runtime_arguments(parser)
    return parser


def _verdict(score: float) -> str:
    return "[green]observable[/green]" if score > 1.0 else "[yellow]sub-resolution[/yellow]"


def print_classification(config) -> None:
    table = Table(title="Basic motions", box=box.ROUNDED, header_style="bold magenta")
    table.add_column("Motion", style="cyan")
    table.add_column("Magnitude", justify="right")
    table.add_column("Score", justify="right")
    table.add_column("Elevation")
    for tag in MOTION_TAGS:
        _, low, high = MOTION_RANGES[tag]
        value = 0.5 * (low + high)
        score = degeneracy_score(basic_twist(tag, value), config)
        label = f"{math.degrees(value):.1f} deg" if tag.startswith("w") else f"{100 * value:.1f} cm"
        table.add_row(tag, label, f"{score:.3f}", _verdict(score))
    console.print(table)


def main() -> None:
    args = build_arg_parser().parse_args()

    def body() -> int:
        apply_runtime(args)
        config = sensor_config(args)
        r, phi_deg, twist = args.r, args.phi, args.twist or Twist()
        if args.preset:
            r, phi_deg, twist = PRESETS[args.preset]
            if args.twist is not None:
                twist = args.twist
        if abs(phi_deg) > math.degrees(config.half_aperture):
            raise ConfigError(f"phi {phi_deg} deg lies outside the elevation aperture")
        if not 0 < r <= config.r_max:
            raise ConfigError(f"r {r} m lies outside (0, {config.r_max}] m")
        theta_range, n_samples = None, 61
        if args.scan_theta:
            low, high, n_samples = args.scan_theta
            theta_range = (math.radians(low), math.radians(high))

        scan = sensitivity_scan(config, r, math.radians(phi_deg), twist, theta_range, n_samples)
        score = degeneracy_score(twist, config)
        if args.out:
            files.write_csv(args.out, SCAN_CSV_HEADER, scan.csv_rows())

        table = Table(
            title=f"r = {r:g} m, phi = {phi_deg:g} deg",
            box=box.ROUNDED,
            header_style="bold magenta",
        )
        for column in SUMMARY_COLUMNS:
            table.add_column(column, justify="right")
        table.add_row(
            f"{scan.peak_dx:.6f}",
            f"{scan.peak_dy:.6f}",
            f"{scan.rho:.6f}",
            f"{scan.gamma:.6f}",
            f"{scan.score:.4f}",
            f"{score:.4f}",
        )
        console.print(table)
        console.print(f"degeneracy score: {score:.4f} ({_verdict(score)})")
        if args.classify:
            print_classification(config)
        return 0

    run_command(body)


if __name__ == "__main__":
    main()
