"""
Motion field of a forward-looking sonar.

Per-pixel displacement rate ds/dt for a small sensor motion, evaluated exactly,
with the small-aperture approximation, and through the four basic-motion
closed forms. Also tabulates sensitivity scans and scores how far a motion
lets elevation show up in the image (the degeneracy score).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, GeometryDomainError
from .geometry import PixelCoord, PolarCoord, SensorConfig, Twist

logger = logging.getLogger("elevlab.motion_field")

SCAN_CSV_HEADER = ("theta_deg", "dx_m", "dy_m", "rho_m", "gamma_m")


def _polar_of_pixel(s: PixelCoord) -> tuple[np.ndarray, np.ndarray]:
    x_s = np.asarray(s.x_s, dtype=float)
    y_s = np.asarray(s.y_s, dtype=float)
    r = np.hypot(x_s, y_s)
    if np.any(r == 0):
        raise GeometryDomainError("motion field is undefined at r = 0")
    return r, np.arctan2(y_s, x_s)


# Slack for samples placed exactly on the range or aperture limit.
_DOMAIN_SLACK = 1e-9


def _check_domain(r: np.ndarray, phi: np.ndarray, config: SensorConfig | None) -> None:
    if config is None:
        return
    if np.any(r > config.r_max + _DOMAIN_SLACK):
        raise GeometryDomainError(f"pixel range exceeds r_max = {config.r_max} m")
    if np.any(np.abs(phi) > config.half_aperture + _DOMAIN_SLACK):
        raise GeometryDomainError("elevation lies outside the sensor aperture")


def point_velocity(p, xi: Twist) -> np.ndarray:
    """
    Velocity of a stationary point in the moving sensor frame, -omega x p - t.

    The cross product is the physical one in the left-handed sensor frame, so
    in components -omega x p equals np.cross(omega, p).
    """
    p = np.asarray(p, dtype=float)
    return np.cross(np.asarray(xi.omega, dtype=float), p) - np.asarray(xi.t, dtype=float)


def elevation_rate(c: PolarCoord, dp) -> np.ndarray:
    """dphi/dt = (1/r) (-cos(theta) sin(phi), -sin(theta) sin(phi), cos(phi)) . dp."""
    r = np.asarray(c.r, dtype=float)
    if np.any(r == 0):
        raise GeometryDomainError("elevation rate is undefined at r = 0")
    theta = np.asarray(c.theta, dtype=float)
    phi = np.asarray(c.phi, dtype=float)
    dp = np.asarray(dp, dtype=float)
    sin_phi = np.sin(phi)
    return (
        -np.cos(theta) * sin_phi * dp[..., 0]
        - np.sin(theta) * sin_phi * dp[..., 1]
        + np.cos(phi) * dp[..., 2]
    ) / r


def exact_field(s: PixelCoord, phi, xi: Twist, config: SensorConfig | None = None):
    """Full motion field with every second-order term; returns (dx_s/dt, dy_s/dt)."""
    r, _ = _polar_of_pixel(s)
    x_s = np.asarray(s.x_s, dtype=float)
    y_s = np.asarray(s.y_s, dtype=float)
    phi = np.asarray(phi, dtype=float)
    _check_domain(r, phi, config)
    t_x, t_y, t_z = xi.t
    w_x, w_y, w_z = xi.omega
    cos_phi = np.cos(phi)
    sin_phi = np.sin(phi)
    tan_phi = np.tan(phi)
    st = sin_phi * tan_phi
    r2 = r * r

    dx = (
        -t_x / cos_phi
        - (t_z * sin_phi / r) * x_s
        - w_z * y_s
        + (st * t_x / r2) * x_s**2
        + (st * t_y / r2 + tan_phi * w_x / r) * x_s * y_s
        + (tan_phi * w_y / r) * y_s**2
    )
    dy = (
        -t_y / cos_phi
        - (t_z * sin_phi / r) * y_s
        + w_z * x_s
        + (st * t_y / r2) * y_s**2
        + (st * t_x / r2 - tan_phi * w_y / r) * x_s * y_s
        - (tan_phi * w_x / r) * x_s**2
    )
    return dx, dy


def approx_field(s: PixelCoord, phi, xi: Twist, config: SensorConfig | None = None):
    """Small-aperture field: cos(phi) -> 1, sin(phi) tan(phi) terms dropped."""
    r, _ = _polar_of_pixel(s)
    x_s = np.asarray(s.x_s, dtype=float)
    y_s = np.asarray(s.y_s, dtype=float)
    phi = np.asarray(phi, dtype=float)
    _check_domain(r, phi, config)
    t_x, t_y, t_z = xi.t
    w_x, w_y, w_z = xi.omega
    sin_phi = np.sin(phi)
    tan_phi = np.tan(phi)

    dx = (
        -t_x
        - (t_z * sin_phi / r) * x_s
        - w_z * y_s
        + (tan_phi * w_x / r) * x_s * y_s
        + (tan_phi * w_y / r) * y_s**2
    )
    dy = (
        -t_y
        - (t_z * sin_phi / r) * y_s
        + w_z * x_s
        - (tan_phi * w_y / r) * x_s * y_s
        - (tan_phi * w_x / r) * x_s**2
    )
    return dx, dy


def basic_horizontal(s: PixelCoord, xi: Twist):
    """x/y translation and z rotation: (-t_x - w_z y_s, -t_y + w_z x_s). No phi dependence."""
    t_x, t_y, _ = xi.t
    w_z = xi.omega[2]
    x_s = np.asarray(s.x_s, dtype=float)
    y_s = np.asarray(s.y_s, dtype=float)
    return -t_x - w_z * y_s, -t_y + w_z * x_s


def basic_roll(s: PixelCoord, phi, omega_x: float):
    r, theta = _polar_of_pixel(s)
    k = r * omega_x * np.tan(phi)
    return k * np.cos(theta) * np.sin(theta), -k * np.cos(theta) ** 2


def basic_pitch(s: PixelCoord, phi, omega_y: float):
    r, theta = _polar_of_pixel(s)
    k = r * omega_y * np.tan(phi)
    return k * np.sin(theta) ** 2, -k * np.cos(theta) * np.sin(theta)


def basic_ztrans(s: PixelCoord, phi, t_z: float):
    _, theta = _polar_of_pixel(s)
    k = t_z * np.sin(phi)
    return -k * np.cos(theta), -k * np.sin(theta)


def _resolution_ratio(d_dx, d_dy, r, theta, config: SensorConfig) -> np.ndarray:
    """Larger of |radial change| / rho and |tangential change| / gamma(r)."""
    cos_t = np.cos(theta)
    sin_t = np.sin(theta)
    radial = d_dx * cos_t + d_dy * sin_t
    tangential = -d_dx * sin_t + d_dy * cos_t
    return np.maximum(
        np.abs(radial) / config.range_resolution,
        np.abs(tangential) / config.tangential_resolution(r),
    )


@dataclass(frozen=True, eq=False)
class SensitivityScan:
    thetas: np.ndarray
    dx: np.ndarray
    dy: np.ndarray
    r: float
    phi: float
    twist: Twist
    rho: float
    gamma: float
    score: float

    def csv_rows(self) -> list[tuple[float, float, float, float, float]]:
        return [
            (float(np.degrees(theta)), float(dx), float(dy), self.rho, self.gamma)
            for theta, dx, dy in zip(self.thetas, self.dx, self.dy)
        ]

    @property
    def peak_dx(self) -> float:
        return float(np.max(np.abs(self.dx)))

    @property
    def peak_dy(self) -> float:
        return float(np.max(np.abs(self.dy)))


def sensitivity_scan(
    config: SensorConfig,
    r: float,
    phi: float,
    xi: Twist,
    theta_range: tuple[float, float] | None = None,
    n_samples: int = 61,
) -> SensitivityScan:
    """
    Tabulate the exact field over azimuth at fixed (r, phi).

    ``score`` is the degeneracy measure restricted to this scan: how many
    resolution cells the phi-induced part of the displacement spans.
    """
    if n_samples < 2:
        raise ConfigError("a sensitivity scan needs at least two samples")
    half_fov = 0.5 * config.azimuth_fov
    low, high = theta_range if theta_range is not None else (-half_fov, half_fov)
    if low < -half_fov - 1e-12 or high > half_fov + 1e-12 or low > high:
        raise ConfigError("scan azimuth range must lie inside the field of view")
    thetas = np.linspace(low, high, n_samples)
    s = PixelCoord(r * np.cos(thetas), r * np.sin(thetas))
    dx, dy = exact_field(s, phi, xi, config)
    flat_dx, flat_dy = exact_field(s, 0.0, xi, config)
    ratio = _resolution_ratio(dx - flat_dx, dy - flat_dy, r, thetas, config)
    return SensitivityScan(
        thetas=thetas,
        dx=np.asarray(dx),
        dy=np.asarray(dy),
        r=float(r),
        phi=float(phi),
        twist=xi,
        rho=config.range_resolution,
        gamma=float(config.tangential_resolution(r)),
        score=float(np.max(ratio)),
    )


def degeneracy_score(
    xi: Twist,
    config: SensorConfig,
    n_r: int = 16,
    n_theta: int = 17,
    n_phi: int = 15,
) -> float:
    """
    How many resolution cells elevation can move a pixel under ``xi``.

    Over a canonical grid spanning the range window and field of view, and phi
    samples spanning the aperture, the change of the exact field relative to
    phi = 0 is split into radial and tangential parts, normalised by rho and by
    gamma(r). Below 1 the motion leaves elevation sub-resolution (degenerate).
    """
    radii = np.linspace(config.r_min, config.r_max, n_r)
    half_fov = 0.5 * config.azimuth_fov
    thetas = np.linspace(-half_fov, half_fov, n_theta)
    phis = np.linspace(-config.half_aperture, config.half_aperture, n_phi)
    r, theta, phi = np.meshgrid(radii, thetas, phis, indexing="ij")
    s = PixelCoord(r * np.cos(theta), r * np.sin(theta))
    dx, dy = exact_field(s, phi, xi, config)
    flat_dx, flat_dy = exact_field(s, np.zeros_like(phi), xi, config)
    score = float(np.max(_resolution_ratio(dx - flat_dx, dy - flat_dy, r, theta, config)))
    logger.debug("Degeneracy score %.4f for twist %s", score, xi)
    return score
