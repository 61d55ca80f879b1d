"""Tests for the sonar projection model and rigid-motion algebra."""

from __future__ import annotations

import json
import math

import numpy as np
import pytest

from elevlab.core.errors import ConfigError, GeometryDomainError
from elevlab.core.geometry import (
    PixelCoord,
    PolarCoord,
    RigidMotion,
    SensorConfig,
    Twist,
    backproject,
    exp_twist,
    pixel_of,
    project,
    transform,
)
from elevlab.core.motion_field import point_velocity


def test_backproject_matches_scalar_evaluation():
    assert backproject(PolarCoord(2.0, 0.0, 0.0)) == pytest.approx([2.0, 0.0, 0.0])
    quarter = backproject(PolarCoord(2.0, math.pi / 2, 0.0))
    assert quarter == pytest.approx([0.0, 2.0, 0.0], abs=1e-12)
    point = backproject(PolarCoord(3.5, math.radians(10.0), math.radians(3.5)))
    assert point == pytest.approx([3.4406, 0.6067, 0.2137], abs=1e-3)


def test_project_inverts_backproject_on_a_grid():
    r, theta, phi = np.meshgrid(
        np.linspace(0.5, 5.0, 7),
        np.radians(np.linspace(-15.0, 15.0, 9)),
        np.radians(np.linspace(-7.0, 7.0, 5)),
        indexing="ij",
    )
    points = backproject(PolarCoord(r, theta, phi))

    polar = project(points)

    np.testing.assert_allclose(polar.r, r, rtol=1e-12)
    np.testing.assert_allclose(polar.theta, theta, atol=1e-12)
    np.testing.assert_allclose(polar.phi, phi, atol=1e-12)
    np.testing.assert_allclose(backproject(polar), points, rtol=1e-12, atol=1e-12)


def test_project_returns_poles_and_rejects_the_origin():
    pole = project([0.0, 0.0, 1.0])
    assert float(pole.r) == pytest.approx(1.0)
    assert float(pole.phi) == pytest.approx(math.pi / 2)

    with pytest.raises(GeometryDomainError):
        project([0.0, 0.0, 0.0])


def test_pixel_of_ignores_elevation():
    for phi in (0.0, 0.05, -0.1):
        s = pixel_of(PolarCoord(2.0, 0.0, phi))
        assert (float(s.x_s), float(s.y_s)) == pytest.approx((2.0, 0.0))

    c = PolarCoord(3.5, math.radians(30.0), math.radians(4.0))
    s = pixel_of(c)
    p = backproject(c)
    assert float(s.x_s) * math.cos(c.phi) == pytest.approx(p[0])
    assert float(s.y_s) * math.cos(c.phi) == pytest.approx(p[1])
    flat = pixel_of(PolarCoord(3.5, math.radians(30.0), 0.0))
    assert (float(flat.x_s), float(flat.y_s)) == pytest.approx((3.0311, 1.75), abs=1e-4)


def test_pixel_coord_grid_indices_hit_pixel_centers(small_config):
    r, theta = small_config.grid()
    row, col = PixelCoord(r * np.cos(theta), r * np.sin(theta)).to_grid(small_config)

    expected_row, expected_col = np.indices(small_config.shape)
    np.testing.assert_allclose(row, expected_row, atol=1e-9)
    np.testing.assert_allclose(col, expected_col, atol=1e-9)


def test_sensor_profiles_expose_resolutions():
    aris = SensorConfig.aris()
    desk = SensorConfig.desk()

    assert aris.range_resolution == pytest.approx(0.003)
    assert aris.half_aperture == pytest.approx(math.radians(7.0))
    assert float(aris.tangential_resolution(3.5)) == pytest.approx(0.0143, abs=1e-4)
    assert desk.range_resolution == pytest.approx(0.0125)
    assert desk.shape == (320, 96)


@pytest.mark.parametrize(
    "overrides",
    [
        {"r_min": 0.0},
        {"r_max": 0.5},
        {"n_range": 1},
        {"azimuth_fov": 7.0},
        {"elevation_aperture": 0.0},
    ],
)
def test_sensor_config_rejects_invalid_grids(overrides):
    values = SensorConfig.desk().model_dump()
    values.update(overrides)

    with pytest.raises(ValueError):
        SensorConfig(**values)


def test_sensor_config_file_round_trip_uses_degrees(tmp_path):
    config = SensorConfig.aris()
    path = config.dump(tmp_path / "sensor.json")

    document = json.loads(path.read_text(encoding="utf-8"))
    loaded = SensorConfig.load(path)

    assert document["elevation_aperture"] == pytest.approx(14.0)
    assert loaded.n_range == config.n_range
    assert loaded.azimuth_fov == pytest.approx(config.azimuth_fov)
    assert loaded.elevation_aperture == pytest.approx(config.elevation_aperture)


def test_sensor_config_load_reports_config_errors(tmp_path):
    broken = tmp_path / "broken.json"
    broken.write_text("{not json", encoding="utf-8")
    incomplete = tmp_path / "incomplete.json"
    incomplete.write_text(json.dumps({"r_min": 1.0}), encoding="utf-8")

    with pytest.raises(ConfigError):
        SensorConfig.load(broken)
    with pytest.raises(ConfigError):
        SensorConfig.load(incomplete)
    with pytest.raises(ConfigError):
        SensorConfig.load(tmp_path / "missing.json")


def test_rigid_motion_rejects_improper_rotations():
    with pytest.raises(GeometryDomainError):
        RigidMotion(rotation=np.diag([1.0, 1.0, 2.0]))
    with pytest.raises(GeometryDomainError):
        RigidMotion(rotation=np.diag([1.0, 1.0, -1.0]))


def test_rigid_motion_group_law():
    m1 = exp_twist(Twist(t=(0.1, -0.2, 0.05), omega=(0.1, 0.2, -0.3)))
    m2 = exp_twist(Twist(t=(-0.3, 0.0, 0.2), omega=(-0.2, 0.05, 0.1)))
    p = np.array([[1.0, 2.0, 3.0], [-0.5, 0.25, 4.0]])

    np.testing.assert_allclose(
        transform(m2, transform(m1, p)), transform(m2.compose(m1), p), atol=1e-12
    )
    np.testing.assert_allclose(m1.compose(m1.inverse()).as_matrix(), np.eye(4), atol=1e-12)
    assert transform(RigidMotion(translation=(1.0, 2.0, 3.0)), np.zeros(3)) == pytest.approx(
        [1.0, 2.0, 3.0]
    )


def test_rigid_motion_document_round_trip():
    motion = exp_twist(Twist(t=(0.1, 0.0, 0.0), omega=(0.0, 0.1, 0.0)))
    restored = RigidMotion.from_document(json.loads(json.dumps(motion.to_document())))

    np.testing.assert_allclose(restored.as_matrix(), motion.as_matrix())


def test_exp_twist_of_zero_is_identity():
    motion = exp_twist(Twist())

    np.testing.assert_allclose(motion.as_matrix(), np.eye(4))


def test_exp_twist_translation_moves_points_backwards():
    motion = exp_twist(Twist(t=(0.1, 0.0, 0.0)))

    np.testing.assert_allclose(motion.rotation, np.eye(3))
    assert motion.apply([2.0, 1.0, 0.0]) == pytest.approx([1.9, 1.0, 0.0])


def test_exp_twist_rotation_is_rodrigues():
    motion = exp_twist(Twist(omega=(math.pi / 2, 0.0, 0.0)))
    expected = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]])

    np.testing.assert_allclose(motion.rotation, expected, atol=1e-12)
    np.testing.assert_allclose(motion.rotation.T @ motion.rotation, np.eye(3), atol=1e-12)


def test_exp_twist_agrees_with_point_velocity_for_small_motions():
    xi = Twist(t=(0.1, -0.05, 0.08), omega=(0.2, -0.1, 0.3))
    p = np.array([[2.0, 0.5, 0.1], [3.5, -0.8, -0.3]])
    epsilon = 1e-6

    moved = exp_twist(xi.scaled(epsilon)).apply(p)

    np.testing.assert_allclose((moved - p) / epsilon, point_velocity(p, xi), atol=1e-5)


def test_twist_rejects_non_finite_values():
    with pytest.raises(ConfigError):
        Twist(t=(math.nan, 0.0, 0.0))

    combined = Twist(t=(0.1, 0.0, 0.0)) + Twist(omega=(0.0, 0.0, 0.2))
    assert combined.as_vector() == pytest.approx([0.1, 0.0, 0.0, 0.0, 0.0, 0.2])
