"""Per-triplet elevation estimation over a dataset manifest."""

from __future__ import annotations

import argparse
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from rich import box
from rich.table import Table

from elevlab.core.errors import ConfigError, ElevlabError
from elevlab.core.estimator import (
    TRAJECTORY_CSV_HEADER,
    EstimationReport,
    OptConfig,
    elevation_to_pointcloud,
)
from elevlab.sim.dataset import SPLITS, TripletRecord, load_manifest
from elevlab.sim.study import estimate_triplet, load_triplet
from elevlab.utils import files

from .common import (
    EXIT_RUNTIME,
    CommandParser,
    add_runtime_arguments,
    apply_runtime,
    console,
    run_command,
)

logger = logging.getLogger("elevlab.cli.estimate")


def build_arg_parser() -> argparse.ArgumentParser:
    parser = CommandParser(description="Estimate target elevation maps for every triplet")
    parser.add_argument("--manifest", type=Path, required=True, help="Manifest or its directory")
    parser.add_argument("--split", choices=SPLITS, help="Refuse manifests of another split")
    parser.add_argument("--iters", type=int, default=OptConfig.iterations)
    parser.add_argument("--step", type=float, default=OptConfig.step)
    parser.add_argument(
        "--sources",
        choices=["both", "past", "future"],
        default="both",
        help="Source frames used as supervision",
    )
    parser.add_argument("--init-scale", type=float, default=0.0, help="Random initial logit scale")
    parser.add_argument("--seed", type=int, default=0, help="Seed for random initialization")
    parser.add_argument("--out", type=Path, help="Output directory (default: <output>/estimates)")
    add_runtime_arguments(parser)
    return parser


def write_artifacts(out_dir: Path, triplet_id: str, report: EstimationReport, pose) -> None:
    files.save_elevation_map(out_dir / f"{triplet_id}_elev.flsr", report.elevation, pose)
    files.write_ply(out_dir / f"{triplet_id}.ply", elevation_to_pointcloud(report.elevation))
    files.write_csv(out_dir / f"{triplet_id}_loss.csv", TRAJECTORY_CSV_HEADER, report.csv_rows())
    files.write_json(out_dir / f"{triplet_id}_report.json", report.to_document())


def main() -> None:
    args = build_arg_parser().parse_args()

    def body() -> int:
        runtime = apply_runtime(args)
        manifest = load_manifest(args.manifest, check_files=False)
        if args.split and manifest.split != args.split:
            raise ConfigError(f"manifest holds the {manifest.split} split, not {args.split}")
        dataset_dir = args.manifest if args.manifest.is_dir() else args.manifest.parent
        out_dir = args.out or runtime.output_dir / "estimates"
        opt = OptConfig(
            step=args.step,
            iterations=args.iters,
            init_scale=args.init_scale,
            seed=args.seed,
        )
        keep = {"both": (0, 1), "past": (0,), "future": (1,)}[args.sources]

        def run(triplet: TripletRecord):
            try:
                frames = load_triplet(dataset_dir, triplet)
                report = estimate_triplet(frames, opt, keep)
                write_artifacts(out_dir, triplet.triplet_id, report, frames.target.pose)
                return triplet.triplet_id, report, None
            except ElevlabError as exc:
                logger.error("Triplet %s failed: %s", triplet.triplet_id, exc)
                return triplet.triplet_id, None, str(exc)

        if runtime.jobs > 1 and len(manifest.triplets) > 1:
            with ThreadPoolExecutor(max_workers=runtime.jobs) as pool:
                outcomes = list(pool.map(run, manifest.triplets))
        else:
            outcomes = [run(triplet) for triplet in manifest.triplets]

        table = Table(title="Elevation estimates", box=box.ROUNDED, header_style="bold magenta")
        table.add_column("Triplet", style="cyan")
        table.add_column("Iterations", justify="right")
        table.add_column("Initial loss", justify="right")
        table.add_column("Best loss", justify="right")
        table.add_column("Decrease", justify="right")
        table.add_column("Status")
        for triplet_id, report, error in outcomes:
            if report is None:
                table.add_row(triplet_id, "-", "-", "-", "-", f"[red]failed: {error}[/red]")
                continue
            status = "[green]ok[/green]"
            if report.degenerate:
                status = "[yellow]degenerate: loss decrease < 5%[/yellow]"
            table.add_row(
                triplet_id,
                str(report.iterations),
                f"{report.initial_loss:.5f}",
                f"{report.best_loss:.5f}",
                f"{100 * report.loss_decrease:.1f}%",
                status,
            )
        console.print(table)
        failures = sum(1 for _, report, _ in outcomes if report is None)
        if outcomes and failures == len(outcomes):
            return EXIT_RUNTIME
        return 0

    run_command(body)


if __name__ == "__main__":
    main()
