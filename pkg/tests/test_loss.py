"""Tests for SSIM, the reconstruction and smoothness losses, and the total gradient."""

from __future__ import annotations

import math

import numpy as np
import pytest

from elevlab.core.errors import ConfigError, ContractError, EmptyMaskError
from elevlab.core.geometry import Twist, exp_twist
from elevlab.core.loss import (
    SSIM_C1,
    SSIM_C2,
    LossConfig,
    _recon_terms,
    recon_loss,
    smooth_loss,
    ssim,
    total_loss,
)
from elevlab.core.rasters import ElevationMap
from elevlab.core.warp import inverse_warp

from .conftest import smooth_texture


def test_ssim_of_an_image_with_itself_is_one(textured_image):
    ssim_map, mean = ssim(textured_image, textured_image)

    np.testing.assert_allclose(ssim_map, 1.0, atol=1e-12)
    assert mean == pytest.approx(1.0)


def test_ssim_is_symmetric_and_bounded():
    a = smooth_texture((30, 20), seed=1)
    b = smooth_texture((30, 20), seed=2)

    ab, mean_ab = ssim(a, b)
    ba, mean_ba = ssim(b, a)

    np.testing.assert_allclose(ab, ba, atol=1e-12)
    assert mean_ab == pytest.approx(mean_ba, abs=1e-12)
    assert np.all(ab <= 1.0 + 1e-12) and np.all(ab >= -1.0 - 1e-12)


def test_ssim_of_constant_images_follows_the_closed_form():
    a = np.full((15, 15), 0.4)
    b = np.full((15, 15), 0.5)

    ssim_map, mean = ssim(a, b)

    expected = (2 * 0.4 * 0.5 + SSIM_C1) / (0.4**2 + 0.5**2 + SSIM_C1)
    np.testing.assert_allclose(ssim_map, expected, rtol=1e-9)
    assert mean == pytest.approx(expected, rel=1e-9)


def test_ssim_of_complementary_checkerboards_is_strongly_negative():
    board = (np.indices((21, 21)).sum(axis=0) % 2).astype(float)
    interior = np.zeros(board.shape, dtype=bool)
    interior[3:-3, 3:-3] = True

    ssim_map, mean = ssim(board, 1.0 - board, mask=interior)

    # Inside a 7x7 window both images average 24/49 or 25/49 with variance ~0.25
    # and covariance -variance, so only the stabilising constants keep SSIM off -1.
    mu = np.array([24 / 49, 25 / 49])
    var = mu * (1 - mu)
    expected = (2 * mu * (1 - mu) + SSIM_C1) * (-2 * var + SSIM_C2)
    expected /= (mu**2 + (1 - mu) ** 2 + SSIM_C1) * (2 * var + SSIM_C2)
    assert np.all(ssim_map[interior] < -0.95)
    assert expected.min() - 1e-9 <= mean <= expected.max() + 1e-9


def test_ssim_rejects_empty_masks_and_mismatched_shapes():
    image = smooth_texture((10, 10))

    with pytest.raises(EmptyMaskError):
        ssim(image, image, mask=np.zeros((10, 10), dtype=bool))
    with pytest.raises(ContractError):
        ssim(image, np.zeros((10, 11)))


def test_dropping_boundary_windows_can_empty_a_small_mask():
    image = smooth_texture((20, 20))
    mask = np.zeros((20, 20), dtype=bool)
    mask[8:12, 8:12] = True

    ssim(image, image, mask=mask)
    with pytest.raises(EmptyMaskError):
        ssim(image, image, mask=mask, drop_boundary_windows=True)


def test_recon_loss_endpoints():
    target = smooth_texture((20, 16), seed=3)
    shifted = target + 0.1
    mask = np.ones(target.shape, dtype=bool)

    assert recon_loss(target, target, mask) == pytest.approx(0.0, abs=1e-12)
    assert recon_loss(target, shifted, mask, beta=0.0) == pytest.approx(0.1)
    pure_ssim = recon_loss(target, shifted, mask, beta=1.0)
    _, mean = ssim(target, shifted)
    assert pure_ssim == pytest.approx(1.0 - mean)
    mixed = recon_loss(target, shifted, mask)
    assert mixed == pytest.approx(0.3 * pure_ssim + 0.7 * 0.1)


def test_recon_loss_is_non_negative_and_rejects_empty_masks():
    a = smooth_texture((20, 16), seed=4)
    b = smooth_texture((20, 16), seed=5)

    assert recon_loss(a, b, None) >= 0.0
    with pytest.raises(EmptyMaskError):
        recon_loss(a, b, np.zeros(a.shape, dtype=bool))


def test_loss_config_validation():
    with pytest.raises(ConfigError):
        LossConfig(beta=1.5)
    with pytest.raises(ConfigError):
        LossConfig(window=6)
    with pytest.raises(ConfigError):
        LossConfig(lambda_s=-1.0)


def test_smooth_loss_of_constant_and_ramp_maps():
    shape = (12, 10)
    flat_image = np.zeros(shape)
    ramp = 0.002 * np.arange(shape[0])[:, None] * np.ones(shape)

    assert smooth_loss(np.full(shape, 0.05), flat_image) == pytest.approx(0.0)
    assert smooth_loss(ramp, flat_image) == pytest.approx(0.002)
    assert smooth_loss(ramp + 0.01, flat_image) == pytest.approx(smooth_loss(ramp, flat_image))
    assert smooth_loss(ramp.T.copy(), flat_image.T.copy()) == pytest.approx(0.002)


def test_smooth_loss_is_down_weighted_along_image_edges():
    shape = (12, 10)
    ramp = 0.002 * np.arange(shape[0])[:, None] * np.ones(shape)
    edges = np.arange(shape[0])[:, None] * np.ones(shape)

    flat = smooth_loss(ramp, np.zeros(shape))
    edged = smooth_loss(ramp, edges)

    assert edged == pytest.approx(0.002 * math.exp(-1.0))
    assert edged < flat


def test_smooth_loss_rejects_an_empty_mask(small_config):
    elevation = ElevationMap.constant(small_config, 0.0, np.zeros(small_config.shape, dtype=bool))

    with pytest.raises(EmptyMaskError):
        smooth_loss(elevation, np.zeros(small_config.shape))


def _scene(small_config, textured_image, smooth_elevation):
    motion = exp_twist(Twist(t=(0.02, -0.01, 0.05), omega=(math.radians(8.0), 0.02, 0.01)))
    valid = np.ones(small_config.shape, dtype=bool)
    truth = ElevationMap(smooth_elevation, valid, small_config)
    target = inverse_warp(truth, textured_image, motion).synth.with_valid(valid)
    return target, motion, valid


def test_total_loss_combines_weighted_terms(small_config, textured_image, smooth_elevation):
    target, motion, valid = _scene(small_config, textured_image, smooth_elevation)
    guess = ElevationMap.constant(small_config, 0.0, valid)
    warp = inverse_warp(guess, textured_image, motion)

    breakdown = total_loss(target, warp, guess, valid)

    assert breakdown.total == pytest.approx(2.0 * breakdown.recon + 1.0 * breakdown.smooth)
    assert breakdown.as_dict()["total"] == breakdown.total
    assert (breakdown.beta, breakdown.lambda_r, breakdown.lambda_s) == (0.3, 2.0, 1.0)
    assert np.all(np.isfinite(breakdown.grad_total))


def test_total_gradient_vanishes_at_a_perfect_constant_fit(small_config, textured_image):
    valid = np.ones(small_config.shape, dtype=bool)
    elevation = ElevationMap.constant(small_config, 0.02, valid)
    warp = inverse_warp(elevation, textured_image, exp_twist(Twist()))

    breakdown = total_loss(textured_image.with_valid(valid), warp, elevation, valid)

    assert breakdown.total == pytest.approx(0.0, abs=1e-12)
    np.testing.assert_allclose(breakdown.grad_total, 0.0, atol=1e-9)


def test_total_gradient_matches_central_differences(
    small_config, textured_image, smooth_elevation
):
    target, motion, valid = _scene(small_config, textured_image, smooth_elevation)
    r, theta = small_config.grid()
    phi = 0.02 + 0.02 * (r - 2.0) + 0.1 * theta

    def evaluate(values):
        elevation = ElevationMap(values, valid, small_config)
        return total_loss(target, inverse_warp(elevation, textured_image, motion), elevation, valid)

    base = evaluate(phi)
    warp = inverse_warp(ElevationMap(phi, valid, small_config), textured_image, motion)
    candidates = np.argwhere(warp.in_bounds & ~warp.near_cell_boundary)
    picks = candidates[np.random.default_rng(0).choice(len(candidates), 40, replace=False)]
    h = 1e-6

    agree = 0
    for row, col in picks:
        plus = phi.copy()
        minus = phi.copy()
        plus[row, col] += h
        minus[row, col] -= h
        finite = (evaluate(plus).total - evaluate(minus).total) / (2 * h)
        analytic = base.grad_total[row, col]
        if abs(analytic - finite) <= 1e-3 * max(abs(finite), 1e-5):
            agree += 1

    assert agree >= 38


def test_recon_loss_ignores_pixels_outside_the_mask():
    target = smooth_texture((24, 20), seed=8)
    mask = np.zeros(target.shape, dtype=bool)
    mask[4:20, 3:15] = True
    synth = np.where(mask, target + 0.01, 0.0)
    filled = np.where(mask, synth, target)

    assert recon_loss(target, synth, mask) == pytest.approx(recon_loss(target, filled, mask))
    assert recon_loss(target, np.where(mask, target, 0.0), mask) == pytest.approx(0.0, abs=1e-12)


def test_recon_gradient_matches_central_differences_under_a_partial_mask():
    target = smooth_texture((20, 18), seed=9)
    synth = target + 0.02 + 0.05 * smooth_texture((20, 18), seed=10)
    mask = np.zeros(target.shape, dtype=bool)
    mask[3:15, 2:12] = True
    mask[8:11, 12:16] = True
    config = LossConfig()

    _, grad = _recon_terms(target, synth, mask, config)

    def recon(values):
        return _recon_terms(target, values, mask, config)[0]

    h = 1e-6
    for row, col in [(3, 2), (5, 7), (9, 11), (9, 14), (14, 11), (1, 1), (18, 16)]:
        plus = synth.copy()
        minus = synth.copy()
        plus[row, col] += h
        minus[row, col] -= h
        finite = (recon(plus) - recon(minus)) / (2 * h)
        assert grad[row, col] == pytest.approx(finite, rel=1e-4, abs=1e-9)
    assert np.all(grad[~mask] == 0.0)
