"""
Basic-motion triplet datasets.

Each triplet is a target frame flanked by a past and a future source frame.
The sensor moves by one basic motion per pair, drawn uniformly from the tag's
magnitude range with a random sign shared by both pairs of a triplet.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ValidationError, field_validator

from elevlab.core.errors import ConfigError, DatasetError
from elevlab.core.geometry import RigidMotion, SensorConfig, Twist, exp_twist
from elevlab.core.mask import MaskConfig, binarize
from elevlab.utils import files

from .render import PlacementConfig, RenderConfig, place_sensor, render
from .terrain import Terrain, TerrainParams, gen_terrain

logger = logging.getLogger("elevlab.sim.dataset")

MANIFEST_NAME = "manifest.json"
MOTION_TAGS = ("tx", "ty", "tz", "wx", "wy", "wz")
SPLITS = ("train", "val", "test")

# tag -> (twist component index, low, high); translations in meters, rotations in radians
MOTION_RANGES: dict[str, tuple[int, float, float]] = {
    "tx": (0, 0.08, 0.12),
    "ty": (1, 0.08, 0.12),
    "tz": (2, 0.08, 0.12),
    "wx": (3, math.radians(5.0), math.radians(10.0)),
    "wy": (4, math.radians(2.0), math.radians(4.0)),
    "wz": (5, math.radians(5.0), math.radians(10.0)),
}


def check_motion_tag(tag: str) -> str:
    if tag not in MOTION_TAGS:
        raise ConfigError(f"unknown motion tag {tag!r}; expected one of {', '.join(MOTION_TAGS)}")
    return tag


def motion_range(tag: str, override: tuple[float, float] | None = None) -> tuple[float, float]:
    check_motion_tag(tag)
    low, high = override if override is not None else MOTION_RANGES[tag][1:]
    if not 0 <= low <= high or high == 0:
        raise ConfigError(f"empty or inverted motion range [{low}, {high}] for {tag}")
    return float(low), float(high)


def basic_twist(tag: str, value: float) -> Twist:
    """Twist with a single non-zero component selected by ``tag``."""
    vector = np.zeros(6)
    vector[MOTION_RANGES[check_motion_tag(tag)][0]] = value
    return Twist.from_vector(vector)


class PairRecord(BaseModel):
    source: str
    twist: list[float]
    motion: dict

    def rigid_motion(self) -> RigidMotion:
        return RigidMotion.from_document(self.motion)

    def as_twist(self) -> Twist:
        return Twist.from_vector(self.twist)


class TripletRecord(BaseModel):
    triplet_id: str
    terrain_seed: int
    target: str
    target_elevation: str
    target_cloud: str
    sources: list[PairRecord]
    valid_fraction: float
    multi_hit_pixels: int


class DatasetManifest(BaseModel):
    version: int = 1
    motion_tag: str
    split: str
    seed: int
    sensor: dict
    motion_range: tuple[float, float]
    triplets: list[TripletRecord] = []

    @field_validator("motion_tag")
    @classmethod
    def _known_tag(cls, value: str) -> str:
        if value not in MOTION_TAGS:
            raise ValueError(f"unknown motion tag {value!r}")
        return value

    @field_validator("split")
    @classmethod
    def _known_split(cls, value: str) -> str:
        if value not in SPLITS:
            raise ValueError(f"unknown split {value!r}")
        return value

    def sensor_config(self) -> SensorConfig:
        return SensorConfig.from_document(self.sensor)


def _render_triplet(
    out_dir: Path,
    triplet_id: str,
    terrain: Terrain,
    tag: str,
    bounds: tuple[float, float],
    config: SensorConfig,
    render_config: RenderConfig,
    mask_config: MaskConfig,
    seed_sequence: np.random.SeedSequence,
) -> TripletRecord:
    rng = np.random.default_rng(seed_sequence)
    sign = 1.0 if rng.random() < 0.5 else -1.0
    past_twist = basic_twist(tag, sign * rng.uniform(*bounds))
    future_twist = basic_twist(tag, sign * rng.uniform(*bounds))

    target_pose, target = place_sensor(terrain, config, rng, render_config, PlacementConfig())
    # M_{t->s} maps target-frame points into the source frame.
    to_future = exp_twist(future_twist)
    to_past = exp_twist(past_twist).inverse()

    def save_frame(name: str, result) -> str:
        mask = binarize(result.image, mask_config.threshold, mask_config.min_component)
        path = out_dir / f"{triplet_id}_{name}.flsr"
        files.save_polar_image(path, result.image.with_valid(mask.valid))
        return path.name

    pairs = []
    for name, motion, twist in (("past", to_past, past_twist), ("future", to_future, future_twist)):
        source_pose = target_pose.compose(motion.inverse())
        source = render(terrain, source_pose, config, render_config)
        pairs.append(
            PairRecord(
                source=save_frame(name, source),
                twist=twist.as_vector().tolist(),
                motion=motion.to_document(),
            )
        )

    target_name = save_frame("target", target)
    elevation_path = out_dir / f"{triplet_id}_target_elev.flsr"
    cloud_path = out_dir / f"{triplet_id}_target_gt.ply"
    files.save_elevation_map(elevation_path, target.elevation, target_pose)
    files.write_ply(cloud_path, target.cloud)
    logger.debug("Rendered triplet %s (valid %.2f)", triplet_id, target.valid_fraction)
    return TripletRecord(
        triplet_id=triplet_id,
        terrain_seed=terrain.seed,
        target=target_name,
        target_elevation=elevation_path.name,
        target_cloud=cloud_path.name,
        sources=pairs,
        valid_fraction=target.valid_fraction,
        multi_hit_pixels=target.multi_hit_pixels,
    )


def gen_dataset(
    out_dir: Path,
    terrains: Sequence[Terrain | int],
    motion_tag: str,
    n_triplets: int,
    seed: int = 0,
    split: str = "test",
    config: SensorConfig | None = None,
    render_config: RenderConfig | None = None,
    mask_config: MaskConfig | None = None,
    range_override: tuple[float, float] | None = None,
    terrain_params: TerrainParams | None = None,
    jobs: int = 1,
) -> DatasetManifest:
    """Render ``n_triplets`` triplets round-robin over ``terrains`` and write the manifest."""
    check_motion_tag(motion_tag)
    bounds = motion_range(motion_tag, range_override)
    if n_triplets < 0:
        raise ConfigError("number of triplets must be non-negative")
    if split not in SPLITS:
        raise ConfigError(f"unknown split {split!r}")
    if n_triplets > 0 and not terrains:
        raise ConfigError("at least one terrain is required")
    config = config or SensorConfig.desk()
    render_config = render_config or RenderConfig()
    mask_config = mask_config or MaskConfig()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    tiles = [
        t if isinstance(t, Terrain) else gen_terrain(int(t), terrain_params)
        for t in (terrains if n_triplets else ())
    ]
    children = np.random.SeedSequence(seed).spawn(n_triplets)
    tasks = [
        (
            f"{motion_tag}_{split}_{index:04d}",
            tiles[index % len(tiles)],
            children[index],
        )
        for index in range(n_triplets)
    ]

    def run(task) -> TripletRecord:
        triplet_id, terrain, child = task
        return _render_triplet(
            out_dir,
            triplet_id,
            terrain,
            motion_tag,
            bounds,
            config,
            render_config,
            mask_config,
            child,
        )

    if jobs > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            triplets = list(pool.map(run, tasks))
    else:
        triplets = [run(task) for task in tasks]

    manifest = DatasetManifest(
        motion_tag=motion_tag,
        split=split,
        seed=seed,
        sensor=config.to_document(),
        motion_range=bounds,
        triplets=triplets,
    )
    files.write_json(out_dir / MANIFEST_NAME, manifest.model_dump(mode="json"))
    logger.info("Wrote %d %s triplets to %s", len(triplets), motion_tag, out_dir)
    return manifest


def load_manifest(path: Path, check_files: bool = True) -> DatasetManifest:
    """Read a manifest (file or dataset directory) and verify every referenced frame exists."""
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    try:
        manifest = DatasetManifest.model_validate_json(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise DatasetError(f"cannot read manifest {path}: {exc}") from exc
    except ValidationError as exc:
        raise ConfigError(f"invalid manifest {path}: {exc}") from exc
    if check_files:
        missing = [
            name
            for triplet in manifest.triplets
            for name in (
                triplet.target,
                triplet.target_elevation,
                triplet.target_cloud,
                *(pair.source for pair in triplet.sources),
            )
            if not (path.parent / name).exists()
        ]
        if missing:
            raise DatasetError(f"manifest references missing files: {', '.join(missing[:5])}")
    return manifest
