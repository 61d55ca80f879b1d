"""Procedural seabed terrains: multi-octave value noise heightfields with an albedo texture."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import ndimage

from elevlab.core.errors import ConfigError

logger = logging.getLogger("elevlab.sim.terrain")

# Height returned outside the terrain tile: rays never hit there.
OUTSIDE_HEIGHT = -1e9


@dataclass(frozen=True)
class TerrainParams:
    extent: float = 16.0
    resolution: int = 512
    amplitude: float = 0.15
    wavelength: float = 4.0
    octaves: int = 4
    lacunarity: float = 2.0
    gain: float = 0.35
    albedo_wavelength: float = 0.8
    albedo_octaves: int = 3
    albedo_floor: float = 0.35

    def __post_init__(self) -> None:
        if not self.extent > 0:
            raise ConfigError("terrain extent must be positive")
        if self.resolution < 2:
            raise ConfigError("terrain resolution must be at least 2")
        if self.amplitude < 0:
            raise ConfigError("terrain amplitude must be non-negative")
        if not (self.wavelength > 0 and self.albedo_wavelength > 0):
            raise ConfigError("noise wavelengths must be positive")
        if self.octaves < 1 or self.albedo_octaves < 1:
            raise ConfigError("noise needs at least one octave")
        if not 0.0 <= self.albedo_floor <= 1.0:
            raise ConfigError("albedo floor must lie in [0, 1]")


@dataclass(frozen=True, eq=False)
class Terrain:
    """
    Heightfield z = h(x, y) sampled on a square grid centered on the world origin.

    Sample (i, j) sits at x = -extent/2 + i * cell, y = -extent/2 + j * cell.
    """

    heights: np.ndarray
    albedo: np.ndarray
    extent: float
    seed: int
    params: TerrainParams = field(default_factory=TerrainParams)

    @property
    def cell_size(self) -> float:
        return self.extent / (self.heights.shape[0] - 1)

    def _grid_coordinates(self, x, y) -> np.ndarray:
        half = 0.5 * self.extent
        return np.stack(
            [
                (np.asarray(x, dtype=float) + half) / self.cell_size,
                (np.asarray(y, dtype=float) + half) / self.cell_size,
            ]
        )

    def _sample(self, plane: np.ndarray, x, y, outside: float) -> np.ndarray:
        coordinates = self._grid_coordinates(x, y)
        flat = coordinates.reshape(2, -1)
        values = ndimage.map_coordinates(plane, flat, order=1, mode="constant", cval=outside)
        return values.reshape(np.shape(coordinates)[1:])

    def height_at(self, x, y) -> np.ndarray:
        return self._sample(self.heights, x, y, OUTSIDE_HEIGHT)

    def albedo_at(self, x, y) -> np.ndarray:
        return self._sample(self.albedo, x, y, 0.0)

    @cached_property
    def _slopes(self) -> tuple[np.ndarray, np.ndarray]:
        return tuple(np.gradient(self.heights, self.cell_size))

    def normal_at(self, x, y) -> np.ndarray:
        """Unit upward surface normal (-dh/dx, -dh/dy, 1) / norm, shaped (..., 3)."""
        slope_x, slope_y = self._slopes
        dh_dx = self._sample(slope_x, x, y, 0.0)
        dh_dy = self._sample(slope_y, x, y, 0.0)
        normal = np.stack([-dh_dx, -dh_dy, np.ones_like(dh_dx)], axis=-1)
        return normal / np.linalg.norm(normal, axis=-1, keepdims=True)


def _fade(t):
    """Quintic fade 6t^5 - 15t^4 + 10t^3."""
    return t * t * t * (t * (t * 6 - 15) + 10)


def value_noise_2d(size: int, cells: float, rng: np.random.Generator) -> np.ndarray:
    """Value noise in [0, 1] on a size x size grid with ``cells`` lattice cells across it."""
    cells = max(cells, 1.0)
    lattice = rng.random((int(np.ceil(cells)) + 2, int(np.ceil(cells)) + 2))
    coordinates = np.linspace(0.0, cells, size)
    index = np.minimum(np.floor(coordinates).astype(int), lattice.shape[0] - 2)
    weight = _fade(coordinates - index)
    ii, jj = np.meshgrid(index, index, indexing="ij")
    wi, wj = np.meshgrid(weight, weight, indexing="ij")
    v00 = lattice[ii, jj]
    v10 = lattice[ii + 1, jj]
    v01 = lattice[ii, jj + 1]
    v11 = lattice[ii + 1, jj + 1]
    v0 = v00 + wj * (v01 - v00)
    v1 = v10 + wj * (v11 - v10)
    return v0 + wi * (v1 - v0)


def fbm_2d(
    size: int,
    cells: float,
    octaves: int,
    lacunarity: float,
    gain: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Fractal sum of value-noise octaves, normalised back into [0, 1]."""
    result = np.zeros((size, size))
    amplitude = 1.0
    total = 0.0
    for _ in range(octaves):
        result += amplitude * value_noise_2d(size, cells, rng)
        total += amplitude
        amplitude *= gain
        cells *= lacunarity
    return result / total


def gen_terrain(seed: int, params: TerrainParams | None = None) -> Terrain:
    """Deterministic terrain: identical seed and params give bitwise identical fields."""
    params = params or TerrainParams()
    height_rng, albedo_rng = (
        np.random.default_rng(child) for child in np.random.SeedSequence(seed).spawn(2)
    )
    noise = fbm_2d(
        params.resolution,
        params.extent / params.wavelength,
        params.octaves,
        params.lacunarity,
        params.gain,
        height_rng,
    )
    heights = params.amplitude * 2.0 * (noise - noise.mean())
    texture = fbm_2d(
        params.resolution,
        params.extent / params.albedo_wavelength,
        params.albedo_octaves,
        params.lacunarity,
        0.5,
        albedo_rng,
    )
    span = texture.max() - texture.min()
    texture = (texture - texture.min()) / span if span > 0 else np.ones_like(texture)
    albedo = params.albedo_floor + (1.0 - params.albedo_floor) * texture
    for plane in (heights, albedo):
        plane.setflags(write=False)
    logger.debug("Generated terrain seed=%d, relief %.3f m", seed, float(np.ptp(heights)))
    return Terrain(heights=heights, albedo=albedo, extent=params.extent, seed=seed, params=params)


def default_terrain_splits(base_seed: int = 0) -> dict[str, tuple[int, ...]]:
    """Two training, three validation and three test terrain seeds."""
    seeds = [int(s) for s in np.random.SeedSequence(base_seed).generate_state(8)]
    return {"train": tuple(seeds[:2]), "val": tuple(seeds[2:5]), "test": tuple(seeds[5:])}
