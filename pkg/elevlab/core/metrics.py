"""Elevation MAE, Chamfer distance and threshold f-score."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.spatial import cKDTree

from .errors import ConfigError, EmptyMaskError
from .rasters import ElevationMap, PointCloud, PolarImage, require_same_grid

logger = logging.getLogger("elevlab.metrics")

DEFAULT_THRESHOLDS = (0.001, 0.003)
MAE_SCALE = 1000.0
CHAMFER_SCALE = 500.0


class MaeResult(NamedTuple):
    mean: float
    scaled: float


def mae(pred: ElevationMap, gt: ElevationMap, beta: float = MAE_SCALE) -> MaeResult:
    """
    Elevation error over jointly valid pixels.

    ``mean`` is the masked mean in radians; ``scaled`` is beta / (H W) times
    the masked sum, the image-size normalisation.
    """
    config = require_same_grid(pred.config, gt.config)
    joint = pred.valid & gt.valid
    if not joint.any():
        raise EmptyMaskError("no jointly valid pixels")
    errors = np.abs(pred.phi[joint] - gt.phi[joint])
    n_rows, n_cols = config.shape
    return MaeResult(
        mean=float(np.mean(errors)),
        scaled=float(beta * np.sum(errors) / (n_rows * n_cols)),
    )


def zero_baseline(gt: ElevationMap) -> float:
    """Masked MAE of the constant phi = 0 map against ``gt``."""
    if not gt.valid.any():
        raise EmptyMaskError("ground truth has no valid pixels")
    return float(np.mean(np.abs(gt.phi[gt.valid])))


def _points(cloud: PointCloud | np.ndarray) -> np.ndarray:
    points = cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud, dtype=float)
    points = points.reshape(-1, 3)
    if len(points) == 0:
        raise EmptyMaskError("point set is empty")
    return points


def _nearest_distances(query: np.ndarray, reference: np.ndarray) -> np.ndarray:
    distances, _ = cKDTree(reference).query(query, k=1)
    return distances


def chamfer(s1: PointCloud, s2: PointCloud, nu: float = CHAMFER_SCALE) -> float:
    """nu/|S1| sum min ||x - y||^2 + nu/|S2| sum min ||x - y||^2 via a kd-tree."""
    a = _points(s1)
    b = _points(s2)
    forward = _nearest_distances(a, b) ** 2
    backward = _nearest_distances(b, a) ** 2
    return float(nu * np.mean(forward) + nu * np.mean(backward))


def f_score(estimate: PointCloud, gt: PointCloud, threshold: float) -> float:
    """Harmonic mean of precision and recall at ``threshold`` meters, as a percentage."""
    if not threshold > 0:
        raise ConfigError("f-score threshold must be positive")
    est_points = _points(estimate)
    gt_points = _points(gt)
    precision = 100.0 * float(np.mean(_nearest_distances(est_points, gt_points) < threshold))
    recall = 100.0 * float(np.mean(_nearest_distances(gt_points, est_points) < threshold))
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def psnr(a: PolarImage | np.ndarray, b: PolarImage | np.ndarray, mask=None) -> float:
    """Peak signal-to-noise ratio in dB on unit-range intensities over ``mask``."""
    a = a.intensity if isinstance(a, PolarImage) else np.asarray(a, dtype=float)
    b = b.intensity if isinstance(b, PolarImage) else np.asarray(b, dtype=float)
    mask = np.ones(a.shape, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    if not mask.any():
        raise EmptyMaskError("PSNR over an empty mask")
    mse = float(np.mean((a[mask] - b[mask]) ** 2))
    if mse == 0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def threshold_label(threshold: float) -> str:
    return f"f@{threshold * 1000:g}mm"


def eval_csv_header(thresholds: tuple[float, ...] = DEFAULT_THRESHOLDS) -> tuple[str, ...]:
    return ("frame_id", "mae_rad", "mae_scaled", "cd", *(threshold_label(t) for t in thresholds))


@dataclass(frozen=True)
class EvalResult:
    mae: float
    mae_scaled: float
    cd: float
    f_scores: dict[str, float]
    thresholds: tuple[float, ...]
    baseline_mae: float | None = None

    def csv_row(self, frame_id: str) -> tuple:
        return (
            frame_id,
            self.mae,
            self.mae_scaled,
            self.cd,
            *(self.f_scores[threshold_label(t)] for t in self.thresholds),
        )


def evaluate(
    pred_map: ElevationMap,
    gt_map: ElevationMap,
    pred_cloud: PointCloud,
    gt_cloud: PointCloud,
    thresholds: tuple[float, ...] = DEFAULT_THRESHOLDS,
    beta: float = MAE_SCALE,
    nu: float = CHAMFER_SCALE,
) -> EvalResult:
    """MAE against the max-contribution map, CD and f-scores against the full GT cloud."""
    errors = mae(pred_map, gt_map, beta)
    cd = chamfer(pred_cloud, gt_cloud, nu)
    scores = {threshold_label(t): f_score(pred_cloud, gt_cloud, t) for t in thresholds}
    return EvalResult(
        mae=errors.mean,
        mae_scaled=errors.scaled,
        cd=cd,
        f_scores=scores,
        thresholds=tuple(thresholds),
        baseline_mae=zero_baseline(gt_map),
    )
