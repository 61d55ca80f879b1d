"""Terrain simulation, rendering and dataset generation."""

from elevlab.core.rasters import ElevationMap, PointCloud, PolarImage

from .render import RenderConfig, RenderResult, render
from .terrain import Terrain, TerrainParams, default_terrain_splits, gen_terrain

__all__ = [
    "ElevationMap",
    "PointCloud",
    "PolarImage",
    "RenderConfig",
    "RenderResult",
    "Terrain",
    "TerrainParams",
    "default_terrain_splits",
    "gen_terrain",
    "render",
]
