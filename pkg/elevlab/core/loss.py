"""
Self-supervision objective and its gradient with respect to the elevation map.

    total  = lambda_r * recon + lambda_s * smooth
    recon  = beta * mean_M(1 - SSIM(I_t, I~_t)) + (1 - beta) * mean_M |I_t - I~_t|
    smooth = mean |d_r(M E)| exp(-|d_r I_t|) + mean |d_theta(M E)| exp(-|d_theta I_t|)

SSIM uses a uniform square window averaged over the in-image part of the
window; inside the reconstruction loss the window is further restricted to
the loss mask. The box filter and its adjoint are both normalised box sums.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import ConfigError, ContractError, EmptyMaskError
from .mask import SignalMask
from .rasters import ElevationMap, PolarImage
from .warp import WarpResult

logger = logging.getLogger("elevlab.loss")

SSIM_C1 = 0.01**2
SSIM_C2 = 0.03**2


@dataclass(frozen=True)
class LossConfig:
    beta: float = 0.3
    lambda_r: float = 2.0
    lambda_s: float = 1.0
    window: int = 7
    drop_boundary_windows: bool = False
    exclude_mask_boundary: bool = False

    def __post_init__(self) -> None:
        if not 0.0 <= self.beta <= 1.0:
            raise ConfigError("beta must lie in [0, 1]")
        if self.lambda_r < 0 or self.lambda_s < 0:
            raise ConfigError("loss weights must be non-negative")
        if self.window < 1 or self.window % 2 == 0:
            raise ConfigError("SSIM window must be a positive odd size")


@dataclass(frozen=True, eq=False)
class LossBreakdown:
    recon: float
    smooth: float
    total: float
    grad_total: np.ndarray
    beta: float
    lambda_r: float
    lambda_s: float

    def as_dict(self) -> dict[str, float]:
        return {"total": self.total, "recon": self.recon, "smooth": self.smooth}


def _pixels(image) -> np.ndarray:
    if isinstance(image, PolarImage):
        return image.intensity
    return np.asarray(image, dtype=float)


def _mask_array(mask, shape) -> np.ndarray:
    if mask is None:
        return np.ones(shape, dtype=bool)
    if isinstance(mask, SignalMask):
        mask = mask.valid
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != shape:
        raise ContractError(f"mask shape {mask.shape} does not match raster {shape}")
    return mask


class _BoxMean:
    """
    Mean over the weighted part of a square window, with its adjoint.

    Pixels with zero weight (outside the image or the mask) take no part in
    the statistics. Windows without any weighted pixel average to zero.
    """

    def __init__(self, shape: tuple[int, int], window: int, weights: np.ndarray | None = None):
        self.window = window
        self.weights = np.ones(shape) if weights is None else np.asarray(weights, dtype=float)
        counts = self._sum(self.weights)
        self.counts = np.where(counts > 0.5, counts, 1.0)

    def _sum(self, x: np.ndarray) -> np.ndarray:
        return ndimage.uniform_filter(x, size=self.window, mode="constant", cval=0.0) * (
            self.window**2
        )

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self._sum(self.weights * x) / self.counts

    def adjoint(self, g: np.ndarray) -> np.ndarray:
        return self.weights * self._sum(g / self.counts)


def _ssim_parts(a: np.ndarray, b: np.ndarray, box: _BoxMean):
    mu_a = box(a)
    mu_b = box(b)
    var_a = box(a * a) - mu_a * mu_a
    var_b = box(b * b) - mu_b * mu_b
    cov = box(a * b) - mu_a * mu_b
    a1 = 2 * mu_a * mu_b + SSIM_C1
    a2 = 2 * cov + SSIM_C2
    b1 = mu_a * mu_a + mu_b * mu_b + SSIM_C1
    b2 = var_a + var_b + SSIM_C2
    return a1 * a2 / (b1 * b2), (mu_a, mu_b, a1, a2, b1, b2)


def _evaluation_mask(mask: np.ndarray, window: int, drop_boundary_windows: bool) -> np.ndarray:
    if not drop_boundary_windows:
        return mask
    return ndimage.binary_erosion(mask, structure=np.ones((window, window)), border_value=0)


def ssim(a, b, mask=None, window: int = 7, drop_boundary_windows: bool = False):
    """Per-pixel SSIM map and its mean over the mask."""
    a = _pixels(a)
    b = _pixels(b)
    if a.shape != b.shape:
        raise ContractError("SSIM inputs differ in shape")
    mask = _evaluation_mask(_mask_array(mask, a.shape), window, drop_boundary_windows)
    if not mask.any():
        raise EmptyMaskError("SSIM mean over an empty mask")
    ssim_map, _ = _ssim_parts(a, b, _BoxMean(a.shape, window))
    return ssim_map, float(np.mean(ssim_map[mask]))


def _recon_terms(target: np.ndarray, synth: np.ndarray, mask: np.ndarray, config: LossConfig):
    """
    Reconstruction loss and its gradient with respect to the synthesized image.

    SSIM window statistics only see pixels inside ``mask``, so the zero fill of
    unsampled synthesized pixels never leaks into the score of their neighbours.
    """
    box = _BoxMean(target.shape, config.window, mask)
    mask = _evaluation_mask(mask, config.window, config.drop_boundary_windows)
    count = int(np.count_nonzero(mask))
    if count == 0:
        raise EmptyMaskError("reconstruction loss over an empty mask")
    ssim_map, (mu_a, mu_b, a1, a2, b1, b2) = _ssim_parts(target, synth, box)
    residual = target - synth
    beta = config.beta
    recon = beta * float(np.sum(1.0 - ssim_map[mask])) / count + (1.0 - beta) * float(
        np.sum(np.abs(residual[mask]))
    ) / count

    d_loss_d_ssim = np.where(mask, -beta / count, 0.0)
    denominator = b1 * b2
    d_ssim_d_mu_b = 2 * mu_a * (a2 - a1) / denominator - 2 * mu_b * ssim_map * (1 / b1 - 1 / b2)
    d_ssim_d_e_bb = -ssim_map / b2
    d_ssim_d_e_ab = 2 * a1 / denominator
    grad = (
        box.adjoint(d_loss_d_ssim * d_ssim_d_mu_b)
        + 2 * synth * box.adjoint(d_loss_d_ssim * d_ssim_d_e_bb)
        + target * box.adjoint(d_loss_d_ssim * d_ssim_d_e_ab)
    )
    grad -= np.where(mask, (1.0 - beta) * np.sign(residual) / count, 0.0)
    return recon, grad


def recon_loss(target, synth, mask, beta: float = 0.3, window: int = 7) -> float:
    config = LossConfig(beta=beta, window=window)
    target = _pixels(target)
    synth = _pixels(synth)
    if target.shape != synth.shape:
        raise ContractError("reconstruction inputs differ in shape")
    recon, _ = _recon_terms(target, synth, _mask_array(mask, target.shape), config)
    return recon


def _smooth_terms(phi: np.ndarray, image: np.ndarray, mask: np.ndarray, exclude_boundary: bool):
    if not mask.any():
        raise EmptyMaskError("smoothness loss over an empty mask")
    masked = np.where(mask, phi, 0.0)
    grad_masked = np.zeros_like(phi)
    total = 0.0
    for axis in (0, 1):
        lead = [slice(None), slice(None)]
        tail = [slice(None), slice(None)]
        lead[axis] = slice(1, None)
        tail[axis] = slice(None, -1)
        lead, tail = tuple(lead), tuple(tail)
        diff = masked[lead] - masked[tail]
        weight = np.exp(-np.abs(image[lead] - image[tail]))
        pairs = mask[tail] & mask[lead] if exclude_boundary else mask[tail]
        count = int(np.count_nonzero(pairs))
        if count == 0:
            continue
        total += float(np.sum(np.abs(diff[pairs]) * weight[pairs])) / count
        g = np.where(pairs, weight * np.sign(diff), 0.0) / count
        grad_masked[lead] += g
        grad_masked[tail] -= g
    return total, np.where(mask, grad_masked, 0.0)


def smooth_loss(
    e_t: ElevationMap | np.ndarray, image, mask=None, exclude_mask_boundary: bool = False
) -> float:
    phi = e_t.phi if isinstance(e_t, ElevationMap) else np.asarray(e_t, dtype=float)
    image = _pixels(image)
    if mask is None and isinstance(e_t, ElevationMap):
        mask = e_t.valid
    value, _ = _smooth_terms(phi, image, _mask_array(mask, phi.shape), exclude_mask_boundary)
    return value


def total_loss(
    target: PolarImage,
    warp: WarpResult,
    e_t: ElevationMap,
    mask=None,
    config: LossConfig | None = None,
) -> LossBreakdown:
    """Weighted loss plus d(total)/d(phi) per pixel (zero on invalid pixels)."""
    config = config or LossConfig()
    image = _pixels(target)
    signal = _mask_array(mask if mask is not None else e_t.valid, image.shape)
    recon, grad_synth = _recon_terms(image, warp.synth.intensity, signal & warp.overlap, config)
    smooth, grad_smooth = _smooth_terms(e_t.phi, image, signal, config.exclude_mask_boundary)
    total = config.lambda_r * recon + config.lambda_s * smooth
    grad = config.lambda_r * grad_synth * warp.jacobian + config.lambda_s * grad_smooth
    return LossBreakdown(
        recon=recon,
        smooth=smooth,
        total=total,
        grad_total=np.where(e_t.valid, grad, 0.0),
        beta=config.beta,
        lambda_r=config.lambda_r,
        lambda_s=config.lambda_s,
    )
