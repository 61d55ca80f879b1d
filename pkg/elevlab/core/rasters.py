"""Co-registered range-azimuth rasters and point clouds."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError
from .geometry import RigidMotion, SensorConfig


def _frozen(array, dtype) -> np.ndarray:
    array = np.array(array, dtype=dtype)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class PolarImage:
    """
    Intensity raster: rows are range bins (r_min -> r_max), columns azimuth
    bins (-fov/2 -> +fov/2). ``valid`` is the optional signal mask plane.
    """

    intensity: np.ndarray
    config: SensorConfig
    pose: RigidMotion = field(default_factory=RigidMotion.identity)
    valid: np.ndarray | None = None

    def __post_init__(self) -> None:
        intensity = np.clip(np.asarray(self.intensity, dtype=float), 0.0, 1.0)
        if intensity.shape != self.config.shape:
            raise ContractError(
                f"image shape {intensity.shape} does not match sensor grid {self.config.shape}"
            )
        object.__setattr__(self, "intensity", _frozen(intensity, float))
        if self.valid is not None:
            valid = np.asarray(self.valid, dtype=bool)
            if valid.shape != self.config.shape:
                raise ContractError("validity plane does not match sensor grid")
            object.__setattr__(self, "valid", _frozen(valid, bool))

    @property
    def shape(self) -> tuple[int, int]:
        return self.config.shape

    def with_valid(self, valid: np.ndarray) -> "PolarImage":
        return PolarImage(self.intensity, self.config, self.pose, valid)


@dataclass(frozen=True, eq=False)
class ElevationMap:
    """Per-pixel elevation angle (radians) with a validity plane."""

    phi: np.ndarray
    valid: np.ndarray
    config: SensorConfig

    def __post_init__(self) -> None:
        phi = np.asarray(self.phi, dtype=float)
        valid = np.asarray(self.valid, dtype=bool)
        if phi.shape != self.config.shape or valid.shape != self.config.shape:
            raise ContractError("elevation map does not match sensor grid")
        limit = self.config.half_aperture + 1e-12
        if np.any(np.abs(phi[valid]) > limit):
            raise ContractError("valid elevation outside the aperture")
        object.__setattr__(self, "phi", _frozen(np.where(valid, phi, 0.0), float))
        object.__setattr__(self, "valid", _frozen(valid, bool))

    @classmethod
    def constant(cls, config: SensorConfig, value: float = 0.0, valid=None) -> "ElevationMap":
        valid = np.ones(config.shape, dtype=bool) if valid is None else valid
        return cls(np.full(config.shape, float(value)), valid, config)

    @property
    def valid_fraction(self) -> float:
        return float(np.mean(self.valid))


@dataclass(frozen=True, eq=False)
class PointCloud:
    """Points shaped (N, 3) in meters, expressed in the named frame."""

    points: np.ndarray
    frame: str = "sensor"

    def __post_init__(self) -> None:
        points = np.asarray(self.points, dtype=float).reshape(-1, 3)
        if not np.all(np.isfinite(points)):
            raise ContractError("point cloud contains non-finite coordinates")
        object.__setattr__(self, "points", _frozen(points, float))

    def __len__(self) -> int:
        return len(self.points)

    @classmethod
    def empty(cls, frame: str = "sensor") -> "PointCloud":
        return cls(np.zeros((0, 3)), frame)


def require_same_grid(*configs: SensorConfig) -> SensorConfig:
    first = configs[0]
    for other in configs[1:]:
        if other != first:
            raise ContractError("rasters do not share a sensor configuration")
    return first
