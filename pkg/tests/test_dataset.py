"""Tests for triplet dataset generation and the basic-motion study."""

from __future__ import annotations

import math
from types import SimpleNamespace

import numpy as np
import pytest

from elevlab.core.errors import ConfigError, DatasetError
from elevlab.core.estimator import OptConfig
from elevlab.core.geometry import SensorConfig, exp_twist
from elevlab.sim.dataset import (
    MANIFEST_NAME,
    MOTION_RANGES,
    basic_twist,
    check_motion_tag,
    gen_dataset,
    load_manifest,
    motion_range,
)
from elevlab.sim.render import RenderConfig
from elevlab.sim.study import STUDY_CSV_HEADER, load_triplet, run_study, summarize
from elevlab.sim.terrain import TerrainParams, gen_terrain

SMALL_TERRAIN = TerrainParams(extent=8.0, resolution=96)


@pytest.fixture
def tiny_config():
    return SensorConfig(
        r_min=0.5,
        r_max=3.0,
        n_range=40,
        n_azimuth=12,
        azimuth_fov=math.radians(30.0),
        elevation_aperture=math.radians(14.0),
    )


def _generate(out_dir, config, motion_tag="wx", n_triplets=2, jobs=1):
    return gen_dataset(
        out_dir,
        [gen_terrain(1, SMALL_TERRAIN)],
        motion_tag,
        n_triplets,
        seed=3,
        config=config,
        render_config=RenderConfig(n_phi=32),
        jobs=jobs,
    )


def test_basic_twists_select_one_component():
    assert basic_twist("tz", 0.1).as_vector().tolist() == [0.0, 0.0, 0.1, 0.0, 0.0, 0.0]
    assert basic_twist("wy", -0.05).omega[1] == -0.05
    with pytest.raises(ConfigError):
        check_motion_tag("roll")


def test_motion_ranges():
    assert motion_range("wx") == pytest.approx((math.radians(5.0), math.radians(10.0)))
    assert motion_range("tx", (0.0, 0.2)) == (0.0, 0.2)
    with pytest.raises(ConfigError):
        motion_range("tx", (0.2, 0.1))
    with pytest.raises(ConfigError):
        motion_range("tx", (0.0, 0.0))


def test_triplets_carry_consistent_signed_motions(tmp_path, tiny_config):
    manifest = _generate(tmp_path, tiny_config)

    assert [t.triplet_id for t in manifest.triplets] == ["wx_test_0000", "wx_test_0001"]
    _, low, high = MOTION_RANGES["wx"]
    for triplet in manifest.triplets:
        past, future = triplet.sources
        values = [past.twist[3], future.twist[3]]
        assert all(low <= abs(v) <= high for v in values)
        assert np.sign(values[0]) == np.sign(values[1])
        assert past.twist[:3] == [0.0, 0.0, 0.0] and future.twist[4:] == [0.0, 0.0]
        np.testing.assert_allclose(
            future.rigid_motion().as_matrix(), exp_twist(future.as_twist()).as_matrix()
        )
        np.testing.assert_allclose(
            past.rigid_motion().as_matrix(),
            exp_twist(past.as_twist()).inverse().as_matrix(),
            atol=1e-12,
        )


def test_manifest_round_trip_and_frames(tmp_path, tiny_config):
    manifest = _generate(tmp_path, tiny_config, n_triplets=1)

    loaded = load_manifest(tmp_path)
    frames = load_triplet(tmp_path, loaded.triplets[0])

    assert loaded == manifest
    assert loaded.sensor_config().n_range == tiny_config.n_range
    assert frames.target.valid is not None
    assert frames.target.shape == tiny_config.shape
    assert frames.gt_elevation.valid.any()
    assert len(frames.gt_cloud) > 0
    assert len(frames.sources) == 2


def test_generation_is_independent_of_worker_count(tmp_path, tiny_config):
    serial = _generate(tmp_path / "serial", tiny_config, jobs=1)
    parallel = _generate(tmp_path / "parallel", tiny_config, jobs=2)

    assert serial.model_dump() == parallel.model_dump()
    for triplet in serial.triplets:
        name = triplet.target
        assert (tmp_path / "serial" / name).read_bytes() == (
            tmp_path / "parallel" / name
        ).read_bytes()


def test_zero_triplets_write_only_the_manifest(tmp_path, tiny_config):
    manifest = gen_dataset(tmp_path, [], "tx", 0, config=tiny_config)

    assert manifest.triplets == []
    assert [p.name for p in tmp_path.iterdir()] == [MANIFEST_NAME]


def test_missing_frames_are_reported(tmp_path, tiny_config):
    manifest = _generate(tmp_path, tiny_config, n_triplets=1)
    (tmp_path / manifest.triplets[0].sources[0].source).unlink()

    with pytest.raises(DatasetError):
        load_manifest(tmp_path)
    assert len(load_manifest(tmp_path, check_files=False).triplets) == 1


def test_generation_rejects_bad_arguments(tmp_path, tiny_config):
    with pytest.raises(ConfigError):
        gen_dataset(tmp_path, [1], "yaw", 1, config=tiny_config)
    with pytest.raises(ConfigError):
        gen_dataset(tmp_path, [1], "wx", -1, config=tiny_config)
    with pytest.raises(ConfigError):
        gen_dataset(tmp_path, [1], "wx", 1, split="holdout", config=tiny_config)
    with pytest.raises(ConfigError):
        gen_dataset(tmp_path, [], "wx", 1, config=tiny_config)
    with pytest.raises(DatasetError):
        load_manifest(tmp_path / "nowhere")


def test_summarize_classifies_by_baseline_ratio():
    reports = [SimpleNamespace(loss_decrease=0.4)]
    good = [SimpleNamespace(mae=0.01, baseline_mae=0.04, cd=1.0)]
    poor = [SimpleNamespace(mae=0.039, baseline_mae=0.04, cd=1.0)]

    effective = summarize("wx", reports, good, 2.6)
    degenerate = summarize("tx", reports, poor, 0.25)

    assert effective.verdict == "effective"
    assert effective.mae_ratio == pytest.approx(0.25)
    assert degenerate.verdict == "degenerate"
    assert len(effective.csv_row()) == len(STUDY_CSV_HEADER)


@pytest.mark.slow
def test_study_writes_a_row_per_motion(tmp_path, tiny_config):
    rows = run_study(
        tmp_path,
        tags=("wx", "tx"),
        n_triplets=1,
        terrain_seeds=[1],
        config=tiny_config,
        render_config=RenderConfig(n_phi=32),
        opt=OptConfig(iterations=20),
    )

    assert [row.motion for row in rows] == ["wx", "tx"]
    assert all(row.verdict in {"effective", "degenerate"} for row in rows)
    lines = (tmp_path / "study.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0].split(",") == list(STUDY_CSV_HEADER)
    assert len(lines) == 3
    assert (tmp_path / "study.json").exists()


@pytest.mark.slow
def test_study_separates_roll_from_surge(tmp_path):
    rows = run_study(tmp_path, tags=("wx", "tx"), n_triplets=3, seed=0)
    by_tag = {row.motion: row for row in rows}

    assert by_tag["wx"].verdict == "effective"
    assert by_tag["wx"].mae_rad < by_tag["wx"].baseline_rad
    assert by_tag["tx"].verdict == "degenerate"
    assert by_tag["wx"].mae_ratio < by_tag["tx"].mae_ratio
