"""Tests for elevation MAE, Chamfer distance, f-scores and PSNR."""

from __future__ import annotations

import math

import numpy as np
import pytest

from elevlab.core.errors import ConfigError, ContractError, EmptyMaskError
from elevlab.core.estimator import elevation_to_pointcloud
from elevlab.core.metrics import (
    chamfer,
    eval_csv_header,
    evaluate,
    f_score,
    mae,
    psnr,
    threshold_label,
    zero_baseline,
)
from elevlab.core.rasters import ElevationMap, PointCloud


def test_mae_of_identical_maps_is_zero(small_config, smooth_elevation):
    valid = np.ones(small_config.shape, dtype=bool)
    elevation = ElevationMap(smooth_elevation, valid, small_config)

    result = mae(elevation, elevation)

    assert result.mean == 0.0
    assert result.scaled == 0.0


def test_mae_reports_mean_and_image_size_normalisation(small_config):
    valid = np.zeros(small_config.shape, dtype=bool)
    valid[:20] = True
    pred = ElevationMap.constant(small_config, 0.01, valid)
    gt = ElevationMap.constant(small_config, 0.0)

    result = mae(pred, gt)

    assert result.mean == pytest.approx(0.01)
    # only half of the pixels are jointly valid
    assert result.scaled == pytest.approx(1000.0 * 0.01 * 0.5)
    assert mae(pred, gt, beta=1.0).scaled == pytest.approx(0.005)


def test_mae_needs_jointly_valid_pixels(small_config):
    first = np.zeros(small_config.shape, dtype=bool)
    first[:10] = True

    with pytest.raises(EmptyMaskError):
        mae(
            ElevationMap.constant(small_config, 0.0, first),
            ElevationMap.constant(small_config, 0.0, ~first),
        )


def test_mae_rejects_different_grids(small_config):
    other = small_config.model_copy(update={"r_max": 4.0})

    with pytest.raises(ContractError):
        mae(ElevationMap.constant(small_config), ElevationMap.constant(other))


def test_zero_baseline(small_config):
    assert zero_baseline(ElevationMap.constant(small_config, -0.02)) == pytest.approx(0.02)
    with pytest.raises(EmptyMaskError):
        zero_baseline(
            ElevationMap.constant(small_config, valid=np.zeros(small_config.shape, dtype=bool))
        )


def test_chamfer_distance():
    cloud = PointCloud(np.array([[0.0, 0.0, 0.0], [1.0, 2.0, 3.0]]))
    moved = PointCloud(cloud.points + np.array([0.01, 0.0, 0.0]))

    assert chamfer(cloud, cloud) == 0.0
    assert chamfer(cloud, moved) == pytest.approx(2 * 500.0 * 0.01**2)
    assert chamfer(cloud, moved, nu=1.0) == pytest.approx(2 * 0.01**2)
    with pytest.raises(EmptyMaskError):
        chamfer(cloud, PointCloud.empty())


def test_f_score_combines_precision_and_recall():
    estimate = PointCloud(np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [5.0, 0.0, 0.0]]))
    gt = PointCloud(np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [9.0, 0.0, 0.0]]))
    far = PointCloud(gt.points + 1.0)

    assert f_score(gt, gt, 0.001) == pytest.approx(100.0)
    assert f_score(estimate, gt, 0.001) == pytest.approx(200.0 / 3.0)
    assert f_score(far, gt, 0.001) == 0.0
    with pytest.raises(ConfigError):
        f_score(gt, gt, 0.0)


def test_psnr():
    image = np.full((8, 8), 0.5)

    assert psnr(image, image) == math.inf
    assert psnr(image, image + 0.1) == pytest.approx(20.0)
    with pytest.raises(EmptyMaskError):
        psnr(image, image, mask=np.zeros((8, 8), dtype=bool))


def test_threshold_labels_and_csv_header():
    assert threshold_label(0.001) == "f@1mm"
    assert threshold_label(0.0025) == "f@2.5mm"
    assert eval_csv_header() == ("frame_id", "mae_rad", "mae_scaled", "cd", "f@1mm", "f@3mm")


def test_evaluate_flat_prediction_against_a_tilted_truth(small_config):
    gt_map = ElevationMap.constant(small_config, 0.02)
    pred_map = ElevationMap.constant(small_config, 0.0)

    result = evaluate(
        pred_map,
        gt_map,
        elevation_to_pointcloud(pred_map),
        elevation_to_pointcloud(gt_map),
    )

    assert result.mae == pytest.approx(0.02)
    assert result.baseline_mae == pytest.approx(0.02)
    assert result.cd > 0.0
    assert set(result.f_scores) == {"f@1mm", "f@3mm"}
    row = result.csv_row("wx_test_0000")
    assert row[0] == "wx_test_0000"
    assert len(row) == len(eval_csv_header())
