"""Scaled basic-motion study: generate, estimate and evaluate every motion tag."""

from __future__ import annotations

import argparse
from pathlib import Path

from rich import box
from rich.table import Table

from elevlab.core.estimator import OptConfig
from elevlab.sim.dataset import MOTION_TAGS
from elevlab.sim.render import RenderConfig
from elevlab.sim.study import run_study

from .common import (
    CommandParser,
    add_runtime_arguments,
    add_sensor_arguments,
    apply_runtime,
    console,
    run_command,
    sensor_config,
)


def build_arg_parser() -> argparse.ArgumentParser:
    parser = CommandParser(description="Desk-scale basic-motion study")
    parser.add_argument(
        "--motions",
        nargs="+",
        choices=MOTION_TAGS,
        default=list(MOTION_TAGS),
        help="Motion tags to study",
    )
    parser.add_argument("--n", type=int, default=20, help="Triplets per motion")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--terrain-seed", type=int, action="append", help="Override test terrains")
    parser.add_argument("--iters", type=int, default=OptConfig.iterations)
    parser.add_argument("--n-phi", type=int, default=RenderConfig.n_phi)
    parser.add_argument("--out", type=Path, help="Study directory (default: <output>/study)")
    add_sensor_arguments(parser, "desk")
    add_runtime_arguments(parser)
    return parser


def main() -> None:
    args = build_arg_parser().parse_args()

    def body() -> int:
        runtime = apply_runtime(args)
        rows = run_study(
            args.out or runtime.output_dir / "study",
            tags=args.motions,
            n_triplets=args.n,
            seed=args.seed,
            terrain_seeds=args.terrain_seed,
            config=sensor_config(args),
            render_config=RenderConfig(n_phi=args.n_phi),
            opt=OptConfig(iterations=args.iters),
            jobs=runtime.jobs,
        )
        table = Table(title="Basic-motion study", box=box.ROUNDED, header_style="bold magenta")
        for column in ("Motion", "Triplets", "MAE (rad)", "Baseline (rad)", "Ratio", "CD", "Score"):
            table.add_column(column, justify="right")
        table.add_column("Verdict")
        for row in rows:
            colour = "green" if row.verdict == "effective" else "yellow"
            table.add_row(
                row.motion,
                str(row.triplets),
                f"{row.mae_rad:.4f}",
                f"{row.baseline_rad:.4f}",
                f"{row.mae_ratio:.2f}",
                f"{row.cd:.4f}",
                f"{row.degeneracy_score:.3f}",
                f"[{colour}]{row.verdict}[/{colour}]",
            )
        console.print(table)
        return 0

    run_command(body)


if __name__ == "__main__":
    main()
