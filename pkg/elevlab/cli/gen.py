"""Basic-motion dataset generation."""

from __future__ import annotations

import argparse
import math
from pathlib import Path

from rich import box
from rich.table import Table

from elevlab.core.mask import MaskConfig
from elevlab.sim.dataset import MOTION_RANGES, MOTION_TAGS, SPLITS, DatasetManifest, gen_dataset
from elevlab.sim.render import RenderConfig
from elevlab.sim.terrain import default_terrain_splits

from .common import (
    CommandParser,
    add_runtime_arguments,
    add_sensor_arguments,
    apply_runtime,
    console,
    parse_range,
    run_command,
    sensor_config,
)


def build_arg_parser() -> argparse.ArgumentParser:
    parser = CommandParser(description="Render a basic-motion triplet dataset")
    parser.add_argument("--motion", required=True, choices=MOTION_TAGS, help="Basic motion tag")
    parser.add_argument("--n", type=int, default=20, help="Number of triplets")
    parser.add_argument(
        "--out",
        type=Path,
        help="Dataset directory (default: <output>/<motion>_<split>)",
    )
    parser.add_argument("--split", choices=SPLITS, default="test")
    parser.add_argument(
        "--terrain-seed",
        type=int,
        action="append",
        help="Terrain seed; repeat for several terrains (default: the split's terrains)",
    )
    parser.add_argument("--seed", type=int, default=0, help="Base seed for motions and placement")
    parser.add_argument(
        "--range",
        type=parse_range,
        help="Motion magnitude range low:high (meters for t*, degrees for w*)",
    )
    parser.add_argument("--n-phi", type=int, default=RenderConfig.n_phi)
    parser.add_argument("--mask-threshold", type=float, default=MaskConfig.threshold)
    add_sensor_arguments(parser, "desk")
    add_runtime_arguments(parser)
    return parser


def _magnitude_label(tag: str, value: float) -> str:
    if tag.startswith("w"):
        return f"{math.degrees(value):+.2f} deg"
    return f"{100 * value:+.2f} cm"


def print_manifest_summary(manifest: DatasetManifest) -> None:
    table = Table(
        title=f"{manifest.motion_tag} / {manifest.split}: {len(manifest.triplets)} triplets",
        box=box.ROUNDED,
        header_style="bold magenta",
    )
    table.add_column("Triplet", style="cyan")
    table.add_column("Terrain", justify="right")
    table.add_column("Valid", justify="right")
    table.add_column("Multi-hit", justify="right")
    table.add_column("Past", justify="right")
    table.add_column("Future", justify="right")
    index = MOTION_RANGES[manifest.motion_tag][0]
    for triplet in manifest.triplets:
        past, future = (pair.twist[index] for pair in triplet.sources)
        table.add_row(
            triplet.triplet_id,
            str(triplet.terrain_seed),
            f"{100 * triplet.valid_fraction:.0f}%",
            str(triplet.multi_hit_pixels),
            _magnitude_label(manifest.motion_tag, past),
            _magnitude_label(manifest.motion_tag, future),
        )
    console.print(table)


def main() -> None:
    args = build_arg_parser().parse_args()

    def body() -> int:
        runtime = apply_runtime(args)
        config = sensor_config(args)
        seeds = args.terrain_seed or list(default_terrain_splits(args.seed)[args.split])
        bounds = args.range
        if bounds is not None and args.motion.startswith("w"):
            bounds = tuple(math.radians(v) for v in bounds)
        out_dir = args.out or runtime.output_dir / f"{args.motion}_{args.split}"
        manifest = gen_dataset(
            out_dir,
            seeds,
            args.motion,
            args.n,
            seed=args.seed,
            split=args.split,
            config=config,
            render_config=RenderConfig(n_phi=args.n_phi),
            mask_config=MaskConfig(threshold=args.mask_threshold),
            range_override=bounds,
            jobs=runtime.jobs,
        )
        print_manifest_summary(manifest)
        console.print(f"Manifest written to [cyan]{out_dir / 'manifest.json'}[/cyan]")
        return 0

    run_command(body)


if __name__ == "__main__":
    main()
