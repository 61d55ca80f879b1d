"""Score estimated elevation maps and clouds against simulator ground truth."""

from __future__ import annotations

import argparse
import logging
from dataclasses import asdict
from pathlib import Path

from rich import box
from rich.table import Table

from elevlab.core.errors import ElevlabError
from elevlab.core.estimator import elevation_to_pointcloud
from elevlab.core.metrics import DEFAULT_THRESHOLDS, eval_csv_header, evaluate
from elevlab.utils import files

from .common import (
    EXIT_RUNTIME,
    CommandParser,
    add_runtime_arguments,
    apply_runtime,
    console,
    parse_float_list,
    run_command,
)

logger = logging.getLogger("elevlab.cli.evaluate")

PRED_SUFFIX = "_elev.flsr"
GT_SUFFIX = "_target_elev.flsr"


def build_arg_parser() -> argparse.ArgumentParser:
    parser = CommandParser(description="Compute MAE, Chamfer distance and f-scores per frame")
    parser.add_argument("--pred-dir", type=Path, required=True, help="Estimate output directory")
    parser.add_argument("--gt-dir", type=Path, required=True, help="Dataset directory")
    parser.add_argument(
        "--thresholds",
        type=parse_float_list,
        default=DEFAULT_THRESHOLDS,
        help="f-score thresholds in meters, comma-separated",
    )
    parser.add_argument("--out", type=Path, help="Metrics CSV (default: <pred-dir>/metrics.csv)")
    add_runtime_arguments(parser)
    return parser


def frame_ids(directory: Path, suffix: str) -> set[str]:
    return {
        path.name[: -len(suffix)]
        for path in directory.glob(f"*{suffix}")
        if not (suffix == PRED_SUFFIX and path.name.endswith(GT_SUFFIX))
    }


def main() -> None:
    args = build_arg_parser().parse_args()

    def body() -> int:
        apply_runtime(args)
        predicted = frame_ids(args.pred_dir, PRED_SUFFIX)
        truth = frame_ids(args.gt_dir, GT_SUFFIX)
        for frame_id in sorted(predicted ^ truth):
            logger.warning("Skipping %s: no counterpart in the other directory", frame_id)
        shared = sorted(predicted & truth)
        if not shared:
            console.print("[bold red]No frame ids shared by prediction and ground truth[/bold red]")
            return EXIT_RUNTIME

        rows, documents = [], {}
        for frame_id in shared:
            try:
                pred_map = files.load_elevation_map(args.pred_dir / f"{frame_id}{PRED_SUFFIX}")
                gt_map = files.load_elevation_map(args.gt_dir / f"{frame_id}{GT_SUFFIX}")
                cloud_path = args.pred_dir / f"{frame_id}.ply"
                pred_cloud = (
                    files.read_ply(cloud_path)
                    if cloud_path.exists()
                    else elevation_to_pointcloud(pred_map)
                )
                gt_cloud = files.read_ply(args.gt_dir / f"{frame_id}_target_gt.ply")
                result = evaluate(pred_map, gt_map, pred_cloud, gt_cloud, tuple(args.thresholds))
            except ElevlabError as exc:
                logger.error("Frame %s skipped: %s", frame_id, exc)
                continue
            rows.append(result.csv_row(frame_id))
            documents[frame_id] = asdict(result)

        header = eval_csv_header(tuple(args.thresholds))
        out = args.out or args.pred_dir / "metrics.csv"
        files.write_csv(out, header, rows)
        files.write_json(out.with_suffix(".json"), documents)

        table = Table(title="Evaluation", box=box.ROUNDED, header_style="bold magenta")
        for column in header:
            table.add_column(column, justify="right" if column != "frame_id" else "left")
        for row in rows:
            table.add_row(row[0], *(f"{value:.4f}" for value in row[1:]))
        console.print(table)
        return 0 if rows else EXIT_RUNTIME

    run_command(body)


if __name__ == "__main__":
    main()
