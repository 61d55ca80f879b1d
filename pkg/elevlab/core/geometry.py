"""
Forward-looking sonar projection model and rigid-motion algebra.

Frame convention: x forward along the acoustic axis, y starboard, z up.
Azimuth theta is measured in the z = 0 plane from +x toward +y, elevation phi
from that plane toward +z. The frame is left-handed, so the physical cross
product of a rotation rate with a point is the negated right-handed component
formula (see ``elevlab.core.motion_field.point_velocity``).

All functions broadcast over numpy arrays; scalars work as 0-d arrays.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError, model_validator

from .errors import ConfigError, GeometryDomainError

ORTHONORMAL_TOLERANCE = 1e-9


class SensorConfig(BaseModel):
    """Polar imaging grid and physical resolutions of the sonar (angles in radians)."""

    model_config = ConfigDict(frozen=True)

    r_min: float
    r_max: float
    n_range: int
    n_azimuth: int
    azimuth_fov: float
    elevation_aperture: float

    @model_validator(mode="after")
    def _check_grid(self) -> "SensorConfig":
        if not self.r_min > 0:
            raise ValueError("r_min must be positive")
        if not self.r_max > self.r_min:
            raise ValueError("r_max must exceed r_min")
        if self.n_range < 2 or self.n_azimuth < 2:
            raise ValueError("n_range and n_azimuth must be at least 2")
        if not 0 < self.azimuth_fov < 2 * math.pi:
            raise ValueError("azimuth_fov must lie in (0, 2*pi)")
        if not 0 < self.elevation_aperture < math.pi:
            raise ValueError("elevation_aperture must lie in (0, pi)")
        return self

    @classmethod
    def aris(cls) -> "SensorConfig":
        """Analysis profile modelled on the ARIS EXPLORER 3000 (rho = 3 mm, phi in [-7, 7] deg)."""
        return cls(
            r_min=0.5,
            r_max=5.0,
            n_range=1500,
            n_azimuth=128,
            azimuth_fov=math.radians(30.0),
            elevation_aperture=math.radians(14.0),
        )

    @classmethod
    def desk(cls) -> "SensorConfig":
        """Coarser simulation profile sized for per-triplet optimization on a CPU."""
        return cls(
            r_min=1.0,
            r_max=5.0,
            n_range=320,
            n_azimuth=96,
            azimuth_fov=math.radians(30.0),
            elevation_aperture=math.radians(14.0),
        )

    @property
    def shape(self) -> tuple[int, int]:
        return self.n_range, self.n_azimuth

    @property
    def range_resolution(self) -> float:
        """rho: radial size of one range bin in meters."""
        return (self.r_max - self.r_min) / self.n_range

    @property
    def azimuth_pitch(self) -> float:
        """Angular width of one beam in radians."""
        return self.azimuth_fov / self.n_azimuth

    @property
    def half_aperture(self) -> float:
        return 0.5 * self.elevation_aperture

    def tangential_resolution(self, r):
        """gamma(r) = r * azimuth_fov / n_azimuth."""
        return np.asarray(r, dtype=float) * self.azimuth_pitch

    def range_centers(self) -> np.ndarray:
        return self.r_min + (np.arange(self.n_range) + 0.5) * self.range_resolution

    def azimuth_centers(self) -> np.ndarray:
        return -0.5 * self.azimuth_fov + (np.arange(self.n_azimuth) + 0.5) * self.azimuth_pitch

    def grid(self) -> tuple[np.ndarray, np.ndarray]:
        """(r, theta) of every pixel center, each shaped (n_range, n_azimuth)."""
        return np.meshgrid(self.range_centers(), self.azimuth_centers(), indexing="ij")

    def row_of(self, r):
        """Continuous row coordinate; integer values fall on pixel centers."""
        return (np.asarray(r, dtype=float) - self.r_min) / self.range_resolution - 0.5

    def col_of(self, theta):
        """Continuous column coordinate; integer values fall on pixel centers."""
        return (np.asarray(theta, dtype=float) + 0.5 * self.azimuth_fov) / self.azimuth_pitch - 0.5

    def to_document(self) -> dict:
        """JSON document with angles in degrees."""
        return {
            "r_min": self.r_min,
            "r_max": self.r_max,
            "n_range": self.n_range,
            "n_azimuth": self.n_azimuth,
            "azimuth_fov": math.degrees(self.azimuth_fov),
            "elevation_aperture": math.degrees(self.elevation_aperture),
        }

    @classmethod
    def from_document(cls, document: dict) -> "SensorConfig":
        try:
            values = dict(document)
            values["azimuth_fov"] = math.radians(float(values["azimuth_fov"]))
            values["elevation_aperture"] = math.radians(float(values["elevation_aperture"]))
            return cls(**values)
        except (KeyError, TypeError, ValueError, ValidationError) as exc:
            raise ConfigError(f"Invalid sensor configuration: {exc}") from exc

    @classmethod
    def load(cls, path: Path) -> "SensorConfig":
        try:
            document = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"Cannot read sensor configuration {path}: {exc}") from exc
        return cls.from_document(document)

    def dump(self, path: Path) -> Path:
        from elevlab.utils.files import dump_sensor_config

        return dump_sensor_config(path, self)


class PolarCoord(NamedTuple):
    r: np.ndarray | float
    theta: np.ndarray | float
    phi: np.ndarray | float


class PixelCoord(NamedTuple):
    x_s: np.ndarray | float
    y_s: np.ndarray | float

    @property
    def r(self):
        return np.hypot(self.x_s, self.y_s)

    @property
    def theta(self):
        return np.arctan2(self.y_s, self.x_s)

    def to_grid(self, config: SensorConfig) -> tuple[np.ndarray, np.ndarray]:
        """Continuous (row, col) indices under a sensor grid."""
        return config.row_of(self.r), config.col_of(self.theta)


@dataclass(frozen=True)
class Twist:
    """Small sensor motion in the sensor frame: translation (m) and rotation (rad)."""

    t: tuple[float, float, float] = (0.0, 0.0, 0.0)
    omega: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self) -> None:
        values = np.array([*self.t, *self.omega], dtype=float)
        if values.shape != (6,) or not np.all(np.isfinite(values)):
            raise ConfigError("Twist needs three finite translation and three rotation values")
        object.__setattr__(self, "t", tuple(float(v) for v in self.t))
        object.__setattr__(self, "omega", tuple(float(v) for v in self.omega))

    @classmethod
    def from_vector(cls, vector) -> "Twist":
        values = [float(v) for v in vector]
        return cls(t=tuple(values[:3]), omega=tuple(values[3:]))

    def as_vector(self) -> np.ndarray:
        return np.array([*self.t, *self.omega], dtype=float)

    def scaled(self, factor: float) -> "Twist":
        return Twist.from_vector(self.as_vector() * factor)

    def __add__(self, other: "Twist") -> "Twist":
        return Twist.from_vector(self.as_vector() + other.as_vector())

    @property
    def magnitude(self) -> float:
        return float(np.linalg.norm(self.as_vector()))


@dataclass(frozen=True, eq=False)
class RigidMotion:
    """Proper rigid transform p -> R p + translation (M_{t->s} maps target points to source)."""

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self) -> None:
        rotation = np.array(self.rotation, dtype=float).reshape(3, 3)
        translation = np.array(self.translation, dtype=float).reshape(3)
        if not np.allclose(rotation.T @ rotation, np.eye(3), atol=ORTHONORMAL_TOLERANCE):
            raise GeometryDomainError("rotation is not orthonormal")
        if abs(np.linalg.det(rotation) - 1.0) > ORTHONORMAL_TOLERANCE:
            raise GeometryDomainError("rotation is not proper (det != +1)")
        rotation.setflags(write=False)
        translation.setflags(write=False)
        object.__setattr__(self, "rotation", rotation)
        object.__setattr__(self, "translation", translation)

    @classmethod
    def identity(cls) -> "RigidMotion":
        return cls()

    @classmethod
    def from_matrix(cls, matrix) -> "RigidMotion":
        matrix = np.asarray(matrix, dtype=float)
        return cls(rotation=matrix[:3, :3], translation=matrix[:3, 3])

    def as_matrix(self) -> np.ndarray:
        matrix = np.eye(4)
        matrix[:3, :3] = self.rotation
        matrix[:3, 3] = self.translation
        return matrix

    def apply(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        return points @ self.rotation.T + self.translation

    def compose(self, other: "RigidMotion") -> "RigidMotion":
        """self o other: apply ``other`` first, then ``self``."""
        return RigidMotion(
            rotation=self.rotation @ other.rotation,
            translation=self.rotation @ other.translation + self.translation,
        )

    def inverse(self) -> "RigidMotion":
        rotation = self.rotation.T
        return RigidMotion(rotation=rotation, translation=-rotation @ self.translation)

    def to_document(self) -> dict:
        return {"rotation": self.rotation.tolist(), "translation": self.translation.tolist()}

    @classmethod
    def from_document(cls, document: dict) -> "RigidMotion":
        return cls(rotation=document["rotation"], translation=document["translation"])


def backproject(c: PolarCoord) -> np.ndarray:
    """3D point of a polar coordinate, shaped (..., 3)."""
    r, theta, phi = (np.asarray(v, dtype=float) for v in c)
    cos_phi = np.cos(phi)
    return np.stack(
        np.broadcast_arrays(
            r * cos_phi * np.cos(theta), r * cos_phi * np.sin(theta), r * np.sin(phi)
        ),
        axis=-1,
    )


def project(p) -> PolarCoord:
    """Inverse of ``backproject``. Poles and out-of-aperture angles are returned as-is."""
    p = np.asarray(p, dtype=float)
    r = np.linalg.norm(p, axis=-1)
    if np.any(r == 0):
        raise GeometryDomainError("cannot project the sensor origin")
    theta = np.arctan2(p[..., 1], p[..., 0])
    phi = np.arcsin(np.clip(p[..., 2] / r, -1.0, 1.0))
    return PolarCoord(r, theta, phi)


def pixel_of(c: PolarCoord) -> PixelCoord:
    """Cartesian image position (r cos theta, r sin theta); independent of phi."""
    r = np.asarray(c.r, dtype=float)
    theta = np.asarray(c.theta, dtype=float)
    return PixelCoord(r * np.cos(theta), r * np.sin(theta))


def skew(v) -> np.ndarray:
    """Right-handed component cross-product matrix: skew(a) @ b == np.cross(a, b)."""
    x, y, z = (float(c) for c in v)
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def exp_twist(xi: Twist) -> RigidMotion:
    """
    Finite motion of stationary scene points after the sensor moves by ``xi`` for unit time.

    Integrates the point flow dp/dt = [omega]_x p - t, so the result is the
    M_{t->s} relating the pre-motion frame to the post-motion frame.
    """
    omega = np.asarray(xi.omega, dtype=float)
    t = np.asarray(xi.t, dtype=float)
    angle = float(np.linalg.norm(omega))
    k = skew(omega)
    k2 = k @ k
    if angle < 1e-8:
        a = 1.0 - angle**2 / 6.0
        b = 0.5 - angle**2 / 24.0
        c = 1.0 / 6.0 - angle**2 / 120.0
    else:
        a = math.sin(angle) / angle
        b = (1.0 - math.cos(angle)) / angle**2
        c = (angle - math.sin(angle)) / angle**3
    rotation = np.eye(3) + a * k + b * k2
    v = np.eye(3) + b * k + c * k2
    return RigidMotion(rotation=rotation, translation=-v @ t)


def transform(m: RigidMotion, p) -> np.ndarray:
    return m.apply(p)
