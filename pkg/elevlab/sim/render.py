"""
Raycast rendering of polar sonar images over a terrain.

Every azimuth beam is sampled by ``n_phi`` elevation rays. Each ray marches
out from the sensor until it crosses the heightfield; the hit deposits
albedo x Lambertian incidence into its (r, theta) bin. Consecutive hits of a
beam that lie on the same surface patch are joined by linear interpolation so
that grazing surfaces fill every range bin they span. A bin's intensity is the
mean of its deposits and its ground-truth elevation is the phi of its largest
deposit.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from elevlab.core.errors import ConfigError
from elevlab.core.geometry import PolarCoord, RigidMotion, SensorConfig, backproject
from elevlab.core.rasters import ElevationMap, PointCloud, PolarImage

from .terrain import Terrain

logger = logging.getLogger("elevlab.sim.render")


@dataclass(frozen=True)
class RenderConfig:
    n_phi: int = 256
    step_bins: float = 1.0
    bridge_bins: float = 16.0
    max_subsamples: int = 64
    spreading: bool = False
    chunk_beams: int = 8

    def __post_init__(self) -> None:
        if self.n_phi < 2:
            raise ConfigError("render needs at least two elevation samples")
        if not (self.step_bins > 0 and self.bridge_bins >= 0):
            raise ConfigError("march step must be positive and bridge length non-negative")
        if self.max_subsamples < 1 or self.chunk_beams < 1:
            raise ConfigError("max_subsamples and chunk_beams must be at least 1")


@dataclass(frozen=True, eq=False)
class RenderResult:
    image: PolarImage
    elevation: ElevationMap
    cloud: PointCloud
    multi_hit_pixels: int

    @property
    def valid_fraction(self) -> float:
        return self.elevation.valid_fraction


def elevation_samples(config: SensorConfig, n_phi: int) -> np.ndarray:
    """Centered elevation samples spanning the aperture."""
    pitch = config.elevation_aperture / n_phi
    return -config.half_aperture + (np.arange(n_phi) + 0.5) * pitch


def _march(terrain: Terrain, pose: RigidMotion, directions: np.ndarray, steps: np.ndarray):
    """
    First heightfield crossing along each world-frame ray direction.

    Returns the hit distance (nan where the ray stays above the terrain up to
    the last step).
    """
    origin = pose.translation
    distances = steps[None, None, :]
    x = origin[0] + directions[..., 0:1] * distances
    y = origin[1] + directions[..., 1:2] * distances
    z = origin[2] + directions[..., 2:3] * distances
    clearance = z - terrain.height_at(x, y)
    below = clearance <= 0
    has_hit = below.any(axis=-1)
    first = np.argmax(below, axis=-1)
    previous = np.maximum(first - 1, 0)
    f1 = np.take_along_axis(clearance, first[..., None], axis=-1)[..., 0]
    f0 = np.take_along_axis(clearance, previous[..., None], axis=-1)[..., 0]
    s1 = steps[first]
    s0 = steps[previous]
    denominator = np.where(f0 - f1 > 0, f0 - f1, 1.0)
    hit = np.where(first > 0, s0 + (s1 - s0) * f0 / denominator, s1)
    return np.where(has_hit, hit, np.nan)


def _beam_deposits(
    terrain: Terrain,
    pose: RigidMotion,
    config: SensorConfig,
    render_config: RenderConfig,
    beams: np.ndarray,
    thetas: np.ndarray,
    phis: np.ndarray,
    steps: np.ndarray,
):
    theta, phi = np.meshgrid(thetas, phis, indexing="ij")
    unit = backproject(PolarCoord(1.0, theta, phi))
    directions = unit @ pose.rotation.T
    r = _march(terrain, pose, directions, steps)

    hit = np.isfinite(r)
    safe_r = np.where(hit, r, 0.0)
    world = pose.translation + directions * safe_r[..., None]
    normal = terrain.normal_at(world[..., 0], world[..., 1])
    incidence = np.maximum(0.0, -np.sum(normal * directions, axis=-1))
    contribution = terrain.albedo_at(world[..., 0], world[..., 1]) * incidence
    if render_config.spreading:
        contribution = contribution * (config.r_min / np.where(hit, safe_r, 1.0)) ** 2
    in_window = hit & (safe_r >= config.r_min) & (safe_r < config.r_max)
    cloud = unit[in_window] * safe_r[in_window][:, None]

    # Pair every elevation sample with its upward neighbour on the same beam.
    n_phi = phis.size
    r_next = np.concatenate([safe_r[:, 1:], safe_r[:, -1:]], axis=1)
    phi_next = np.concatenate([phi[:, 1:], phi[:, -1:]], axis=1)
    c_next = np.concatenate([contribution[:, 1:], contribution[:, -1:]], axis=1)
    hit_next = np.concatenate([hit[:, 1:], np.zeros((hit.shape[0], 1), dtype=bool)], axis=1)
    gap = np.abs(r_next - safe_r)
    bridged = hit & hit_next & (gap <= render_config.bridge_bins * config.range_resolution)
    counts = np.where(
        bridged,
        np.clip(
            np.ceil(gap / (0.5 * config.range_resolution)), 1, render_config.max_subsamples
        ),
        1,
    ).astype(int)
    counts = np.where(hit, counts, 0)

    flat_counts = counts.ravel()
    pair = np.repeat(np.arange(flat_counts.size), flat_counts)
    offset = np.arange(pair.size) - np.repeat(np.cumsum(flat_counts) - flat_counts, flat_counts)
    t = offset / flat_counts[pair]
    r_dep = safe_r.ravel()[pair] + t * (r_next.ravel()[pair] - safe_r.ravel()[pair])
    phi_dep = phi.ravel()[pair] + t * (phi_next.ravel()[pair] - phi.ravel()[pair])
    c_dep = contribution.ravel()[pair] + t * (c_next.ravel()[pair] - contribution.ravel()[pair])
    beam_dep = np.repeat(beams, n_phi)[pair]
    sample_dep = np.tile(np.arange(n_phi), beams.size)[pair]

    keep = (r_dep >= config.r_min) & (r_dep < config.r_max)
    rows = np.minimum(
        np.floor((r_dep[keep] - config.r_min) / config.range_resolution).astype(int),
        config.n_range - 1,
    )
    pixel = rows * config.n_azimuth + beam_dep[keep]
    return pixel, phi_dep[keep], c_dep[keep], sample_dep[keep], cloud


def _count_multi_hit(pixel: np.ndarray, sample: np.ndarray, n_pixels: int) -> int:
    """Pixels whose deposits come from non-contiguous elevation samples."""
    if pixel.size == 0:
        return 0
    pairs = np.unique(np.stack([pixel, sample], axis=1), axis=0)
    distinct = np.bincount(pairs[:, 0], minlength=n_pixels)
    low = np.full(n_pixels, np.iinfo(np.int64).max)
    high = np.full(n_pixels, -1)
    np.minimum.at(low, pairs[:, 0], pairs[:, 1])
    np.maximum.at(high, pairs[:, 0], pairs[:, 1])
    touched = distinct > 0
    return int(np.count_nonzero(high[touched] - low[touched] + 1 > distinct[touched]))


def render(
    terrain: Terrain,
    pose: RigidMotion,
    config: SensorConfig,
    render_config: RenderConfig | None = None,
) -> RenderResult:
    """Image, max-contribution elevation map and hit cloud for a world <- sensor pose."""
    render_config = render_config or RenderConfig()
    phis = elevation_samples(config, render_config.n_phi)
    thetas = config.azimuth_centers()
    step = render_config.step_bins * config.range_resolution
    steps = np.arange(0.0, config.r_max + step, step)

    pixels, phi_values, contributions, samples, clouds = [], [], [], [], []
    for start in range(0, config.n_azimuth, render_config.chunk_beams):
        beams = np.arange(start, min(start + render_config.chunk_beams, config.n_azimuth))
        pixel, phi_dep, c_dep, sample_dep, cloud = _beam_deposits(
            terrain, pose, config, render_config, beams, thetas[beams], phis, steps
        )
        pixels.append(pixel)
        phi_values.append(phi_dep)
        contributions.append(c_dep)
        samples.append(sample_dep)
        clouds.append(cloud)

    pixel = np.concatenate(pixels)
    phi_dep = np.concatenate(phi_values)
    c_dep = np.concatenate(contributions)
    sample_dep = np.concatenate(samples)
    n_pixels = config.n_range * config.n_azimuth

    counts = np.bincount(pixel, minlength=n_pixels)
    sums = np.bincount(pixel, weights=c_dep, minlength=n_pixels)
    valid = counts > 0
    intensity = np.where(valid, sums / np.maximum(counts, 1), 0.0)

    phi_gt = np.zeros(n_pixels)
    if pixel.size:
        order = np.lexsort((c_dep, pixel))
        sorted_pixel = pixel[order]
        last = np.r_[sorted_pixel[1:] != sorted_pixel[:-1], True]
        phi_gt[sorted_pixel[last]] = phi_dep[order][last]

    multi_hit = _count_multi_hit(pixel, sample_dep, n_pixels)
    shape = config.shape
    valid = valid.reshape(shape)
    image = PolarImage(intensity.reshape(shape), config, pose, valid)
    elevation = ElevationMap(phi_gt.reshape(shape), valid, config)
    cloud = PointCloud(np.concatenate(clouds) if clouds else np.zeros((0, 3)), frame="sensor")
    logger.debug(
        "Rendered %d valid pixels, %d cloud points, %d multi-hit pixels",
        int(np.count_nonzero(valid)),
        len(cloud),
        multi_hit,
    )
    return RenderResult(image=image, elevation=elevation, cloud=cloud, multi_hit_pixels=multi_hit)


def sensor_pose(position, yaw: float, tilt: float) -> RigidMotion:
    """World <- sensor transform at ``position``, heading ``yaw``, pitched down by ``tilt``."""
    cos_y, sin_y = math.cos(yaw), math.sin(yaw)
    cos_t, sin_t = math.cos(tilt), math.sin(tilt)
    heading = np.array([[cos_y, -sin_y, 0.0], [sin_y, cos_y, 0.0], [0.0, 0.0, 1.0]])
    pitch = np.array([[cos_t, 0.0, sin_t], [0.0, 1.0, 0.0], [-sin_t, 0.0, cos_t]])
    return RigidMotion(rotation=heading @ pitch, translation=np.asarray(position, dtype=float))


@dataclass(frozen=True)
class PlacementConfig:
    altitude: tuple[float, float] = (0.5, 0.8)
    tilt_deg: tuple[float, float] = (12.0, 16.0)
    valid_fraction: tuple[float, float] = (0.6, 0.9)
    attempts: int = 8


def place_sensor(
    terrain: Terrain,
    config: SensorConfig,
    rng: np.random.Generator,
    render_config: RenderConfig | None = None,
    placement: PlacementConfig | None = None,
) -> tuple[RigidMotion, RenderResult]:
    """
    Draw sensor poses until the rendered image is 60-90% valid.

    The whole range window stays over the terrain tile. If no attempt lands
    in the target band, the pose whose valid fraction is closest to it wins.
    """
    placement = placement or PlacementConfig()
    margin = 0.5 * terrain.extent - config.r_max - 0.5
    if margin <= 0:
        raise ConfigError("terrain tile is too small for the sensor range window")
    low, high = placement.valid_fraction
    best: tuple[float, RigidMotion, RenderResult] | None = None
    for attempt in range(placement.attempts):
        x, y = rng.uniform(-margin, margin, size=2)
        altitude = rng.uniform(*placement.altitude)
        ground = float(terrain.height_at(x, y))
        pose = sensor_pose(
            (x, y, ground + altitude),
            yaw=rng.uniform(-math.pi, math.pi),
            tilt=math.radians(rng.uniform(*placement.tilt_deg)),
        )
        result = render(terrain, pose, config, render_config)
        fraction = result.valid_fraction
        distance = max(low - fraction, fraction - high, 0.0)
        if best is None or distance < best[0]:
            best = (distance, pose, result)
        if distance == 0.0:
            break
        logger.debug("Placement attempt %d rejected: valid fraction %.2f", attempt, fraction)
    _, pose, result = best
    return pose, result
