"""
Per-triplet variational elevation estimation.

The elevation map is optimized directly: every valid pixel owns one logit u,
mapped into the aperture by phi = aperture * (sigmoid(u) - 1/2). Each iteration
warps every source frame with the current map, averages the total-loss
gradients over sources and takes one Adam step on the logits.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .errors import ConfigError, EmptyMaskError, EstimationError
from .geometry import PolarCoord, RigidMotion, SensorConfig, backproject
from .loss import LossConfig, total_loss
from .mask import SignalMask
from .rasters import ElevationMap, PointCloud, PolarImage, require_same_grid
from .warp import inverse_warp

logger = logging.getLogger("elevlab.estimator")

TRAJECTORY_CSV_HEADER = ("iteration", "total", "recon", "smooth")
SMOOTHING_WINDOW = 10


@dataclass(frozen=True)
class OptConfig:
    step: float = 0.05
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    iterations: int = 500
    tolerance: float = 1e-5
    patience: int = 25
    warmup: int = 100
    source_weights: tuple[float, ...] | None = None
    init_scale: float = 0.0
    seed: int = 0
    degenerate_threshold: float = 0.05
    loss: LossConfig = field(default_factory=LossConfig)

    def __post_init__(self) -> None:
        if not self.step > 0:
            raise ConfigError("step size must be positive")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ConfigError("moment decay rates must lie in (0, 1)")
        if self.iterations < 0:
            raise ConfigError("iteration budget must be non-negative")
        if self.patience < 1:
            raise ConfigError("convergence window must be at least one iteration")
        if self.warmup < 0:
            raise ConfigError("warm-up must be non-negative")
        if self.tolerance < 0 or self.init_scale < 0:
            raise ConfigError("tolerance and init_scale must be non-negative")
        if self.source_weights is not None and (
            any(w < 0 for w in self.source_weights) or sum(self.source_weights) <= 0
        ):
            raise ConfigError("source weights must be non-negative with a positive sum")


class ElevParam:
    """Unbounded per-pixel logits and their mapping into the elevation aperture."""

    def __init__(self, logits: np.ndarray, aperture: float):
        self.u = np.asarray(logits, dtype=float).copy()
        self.aperture = float(aperture)

    @classmethod
    def zeros(cls, config: SensorConfig) -> "ElevParam":
        return cls(np.zeros(config.shape), config.elevation_aperture)

    @property
    def phi(self) -> np.ndarray:
        return self.aperture * (expit(self.u) - 0.5)

    def d_phi_du(self) -> np.ndarray:
        s = expit(self.u)
        return self.aperture * s * (1.0 - s)


class AdamState:
    """First/second moment estimates with bias correction."""

    def __init__(self, shape, beta1: float, beta2: float, epsilon: float):
        self.m = np.zeros(shape)
        self.v = np.zeros(shape)
        self.t = 0
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon

    def update(self, grad: np.ndarray, step: float) -> np.ndarray:
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad * grad
        m_hat = self.m / (1 - self.beta1**self.t)
        v_hat = self.v / (1 - self.beta2**self.t)
        return -step * m_hat / (np.sqrt(v_hat) + self.epsilon)


@dataclass(frozen=True, eq=False)
class EstimationReport:
    elevation: ElevationMap
    trajectory: tuple[tuple[int, float, float, float], ...]
    iterations: int
    best_iteration: int
    initial_loss: float
    best_loss: float
    in_bounds_fractions: tuple[float, ...]
    converged: bool
    degenerate: bool

    @property
    def loss_decrease(self) -> float:
        """Relative loss decrease from the initial map to the best iterate."""
        if self.initial_loss <= 0:
            return 0.0
        return (self.initial_loss - self.best_loss) / self.initial_loss

    def csv_rows(self) -> list[tuple[int, float, float, float]]:
        return list(self.trajectory)

    def to_document(self) -> dict:
        document = {
            "iterations": int(self.iterations),
            "best_iteration": int(self.best_iteration),
            "initial_loss": float(self.initial_loss),
            "best_loss": float(self.best_loss),
            "loss_decrease": float(self.loss_decrease),
            "in_bounds_fractions": [float(f) for f in self.in_bounds_fractions],
            "converged": bool(self.converged),
            "degenerate": bool(self.degenerate),
        }
        if self.degenerate:
            document["note"] = "degenerate: loss decrease < 5%"
        return document


def _signal_mask(target: PolarImage, mask) -> np.ndarray:
    if mask is None:
        mask = target.valid if target.valid is not None else np.ones(target.shape, dtype=bool)
    if isinstance(mask, SignalMask):
        mask = mask.valid
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise EmptyMaskError("estimation needs a non-empty signal mask")
    return mask


def _source_weights(opt: OptConfig, count: int) -> np.ndarray:
    if opt.source_weights is None:
        return np.full(count, 1.0 / count)
    if len(opt.source_weights) != count:
        raise ConfigError(f"expected {count} source weights, got {len(opt.source_weights)}")
    weights = np.asarray(opt.source_weights, dtype=float)
    return weights / weights.sum()


def _smoothed_increases(totals: Sequence[float]) -> int:
    if len(totals) < 2 * SMOOTHING_WINDOW:
        return 0
    kernel = np.full(SMOOTHING_WINDOW, 1.0 / SMOOTHING_WINDOW)
    smoothed = np.convolve(np.asarray(totals), kernel, mode="valid")
    return int(np.count_nonzero(np.diff(smoothed) > 1e-12 * np.abs(smoothed[:-1])))


def _plateaued(trajectory: Sequence[tuple[int, float, float, float]], opt: OptConfig) -> bool:
    """
    True once the last ``patience`` iterations failed to beat the best loss
    seen before them by more than ``tolerance`` (relative).

    Never fires during the warm-up, where Adam's first steps may raise the loss.
    """
    iteration = len(trajectory) - 1
    if iteration < max(opt.warmup, opt.patience):
        return False
    split = len(trajectory) - opt.patience
    before = min(row[1] for row in trajectory[:split])
    recent = min(row[1] for row in trajectory[split:])
    return before - recent <= opt.tolerance * abs(before)


def estimate(
    target: PolarImage,
    sources: Sequence[tuple[PolarImage, RigidMotion]],
    mask=None,
    opt: OptConfig | None = None,
) -> EstimationReport:
    """Minimize the averaged total loss over the target's elevation map."""
    opt = opt or OptConfig()
    if not 1 <= len(sources) <= 2:
        raise ConfigError("estimation takes one or two source frames")
    config = require_same_grid(target.config, *(image.config for image, _ in sources))
    signal = _signal_mask(target, mask)
    weights = _source_weights(opt, len(sources))

    param = ElevParam.zeros(config)
    if opt.init_scale > 0:
        param.u = np.random.default_rng(opt.seed).normal(0.0, opt.init_scale, config.shape)
    adam = AdamState(config.shape, opt.beta1, opt.beta2, opt.epsilon)

    trajectory: list[tuple[int, float, float, float]] = []
    best_loss = np.inf
    best_phi = param.phi
    best_iteration = 0
    best_in_bounds: tuple[float, ...] = ()
    converged = False

    for iteration in range(opt.iterations + 1):
        e_t = ElevationMap(param.phi, signal, config)
        total = recon = smooth = 0.0
        grad = np.zeros(config.shape)
        in_bounds = []
        for weight, (image, motion) in zip(weights, sources):
            warp = inverse_warp(e_t, image, motion)
            breakdown = total_loss(target, warp, e_t, signal, opt.loss)
            total += weight * breakdown.total
            recon += weight * breakdown.recon
            smooth += weight * breakdown.smooth
            grad += weight * breakdown.grad_total
            in_bounds.append(float(np.count_nonzero(warp.in_bounds)) / np.count_nonzero(signal))

        if not np.isfinite(total):
            raise EstimationError(
                "non-finite loss",
                iteration,
                {"total": total, "recon": recon, "smooth": smooth},
            )
        total, recon, smooth = float(total), float(recon), float(smooth)
        trajectory.append((iteration, total, recon, smooth))
        if total < best_loss:
            best_loss = total
            best_phi = e_t.phi
            best_iteration = iteration
            best_in_bounds = tuple(in_bounds)

        if iteration == opt.iterations:
            break
        if _plateaued(trajectory, opt):
            converged = True
            break
        param.u += adam.update(np.where(signal, grad * param.d_phi_du(), 0.0), opt.step)

    totals = [row[1] for row in trajectory]
    increases = _smoothed_increases(totals)
    if increases:
        logger.info("Smoothed loss increased on %d of %d iterations", increases, len(totals))

    initial_loss = totals[0]
    decrease = (initial_loss - best_loss) / initial_loss if initial_loss > 0 else 0.0
    degenerate = bool(decrease < opt.degenerate_threshold)
    logger.info(
        "Estimated elevation in %d iterations: loss %.5f -> %.5f (%.1f%%)%s",
        len(trajectory) - 1,
        initial_loss,
        best_loss,
        100.0 * decrease,
        " degenerate" if degenerate else "",
    )
    return EstimationReport(
        elevation=ElevationMap(best_phi, signal, config),
        trajectory=tuple(trajectory),
        iterations=len(trajectory) - 1,
        best_iteration=best_iteration,
        initial_loss=float(initial_loss),
        best_loss=float(best_loss),
        in_bounds_fractions=best_in_bounds,
        converged=converged,
        degenerate=degenerate,
    )


def elevation_to_pointcloud(e: ElevationMap, config: SensorConfig | None = None) -> PointCloud:
    """Backproject every valid pixel (r, theta, phi) into the sensor frame."""
    config = config or e.config
    r, theta = config.grid()
    valid = e.valid
    points = backproject(PolarCoord(r[valid], theta[valid], e.phi[valid]))
    return PointCloud(points.reshape(-1, 3), frame="sensor")
