"""
Inverse warping: synthesize the target view by sampling the source image.

Each valid target pixel (r_t, theta_t, phi_t) is lifted to 3D, moved by
M_{t->s}, re-polarised to (r_s, theta_s) and sampled bilinearly on the source
(r, theta) grid. The derivative of the sampled intensity with respect to the
pixel's elevation is carried alongside, so the loss can be differentiated
without autodiff.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .geometry import PolarCoord, RigidMotion, backproject
from .rasters import ElevationMap, PolarImage, require_same_grid

logger = logging.getLogger("elevlab.warp")

# Sample coordinates this close to a grid node are snapped onto it.
_NODE_SNAP = 1e-9
CELL_BOUNDARY_MARGIN = 1e-3


@dataclass(frozen=True, eq=False)
class WarpResult:
    synth: PolarImage
    in_bounds: np.ndarray
    jacobian: np.ndarray
    overlap: np.ndarray
    near_cell_boundary: np.ndarray

    @property
    def in_bounds_fraction(self) -> float:
        return float(np.mean(self.in_bounds))


def _snap(coordinate: np.ndarray) -> np.ndarray:
    nearest = np.round(coordinate)
    return np.where(np.abs(coordinate - nearest) < _NODE_SNAP, nearest, coordinate)


def inverse_warp(e_t: ElevationMap, i_s: PolarImage, m: RigidMotion) -> WarpResult:
    config = require_same_grid(e_t.config, i_s.config)
    n_rows, n_cols = config.shape
    r_t, theta_t = config.grid()
    phi_t = e_t.phi

    p_t = backproject(PolarCoord(r_t, theta_t, phi_t))
    p_s = m.apply(p_t)
    x, y = p_s[..., 0], p_s[..., 1]
    r_s = np.linalg.norm(p_s, axis=-1)
    rho_xy2 = x * x + y * y
    theta_s = np.arctan2(y, x)

    row = _snap(config.row_of(r_s))
    col = _snap(config.col_of(theta_s))
    in_bounds = (
        e_t.valid
        & (rho_xy2 > 0)
        & (row >= 0)
        & (row <= n_rows - 1)
        & (col >= 0)
        & (col <= n_cols - 1)
    )

    r0 = np.clip(np.floor(row), 0, n_rows - 2).astype(int)
    c0 = np.clip(np.floor(col), 0, n_cols - 2).astype(int)
    a = np.where(in_bounds, row - r0, 0.0)
    b = np.where(in_bounds, col - c0, 0.0)

    source = i_s.intensity
    i00 = source[r0, c0]
    i10 = source[r0 + 1, c0]
    i01 = source[r0, c0 + 1]
    i11 = source[r0 + 1, c0 + 1]
    w00 = (1 - a) * (1 - b)
    w10 = a * (1 - b)
    w01 = (1 - a) * b
    w11 = a * b
    sampled = w00 * i00 + w10 * i10 + w01 * i01 + w11 * i11
    synth = np.where(in_bounds, sampled, 0.0)

    overlap = in_bounds.copy()
    if i_s.valid is not None:
        v = i_s.valid
        for weight, valid in (
            (w00, v[r0, c0]),
            (w10, v[r0 + 1, c0]),
            (w01, v[r0, c0 + 1]),
            (w11, v[r0 + 1, c0 + 1]),
        ):
            overlap &= (weight == 0) | valid

    # d p_t / d phi, carried through the rotation, re-polarisation and bilinear kernel.
    sin_phi = np.sin(phi_t)
    cos_phi = np.cos(phi_t)
    dp_t = np.stack(
        [-r_t * sin_phi * np.cos(theta_t), -r_t * sin_phi * np.sin(theta_t), r_t * cos_phi],
        axis=-1,
    )
    dp_s = dp_t @ m.rotation.T
    safe_r = np.where(r_s > 0, r_s, 1.0)
    safe_rho2 = np.where(rho_xy2 > 0, rho_xy2, 1.0)
    dr_s = np.sum(p_s * dp_s, axis=-1) / safe_r
    dtheta_s = (x * dp_s[..., 1] - y * dp_s[..., 0]) / safe_rho2
    drow = dr_s / config.range_resolution
    dcol = dtheta_s / config.azimuth_pitch
    d_i_drow = (1 - b) * (i10 - i00) + b * (i11 - i01)
    d_i_dcol = (1 - a) * (i01 - i00) + a * (i11 - i10)
    jacobian = np.where(in_bounds, d_i_drow * drow + d_i_dcol * dcol, 0.0)

    frac_row = row - np.floor(row)
    frac_col = col - np.floor(col)
    near_cell_boundary = in_bounds & (
        (np.minimum(frac_row, 1 - frac_row) < CELL_BOUNDARY_MARGIN)
        | (np.minimum(frac_col, 1 - frac_col) < CELL_BOUNDARY_MARGIN)
    )

    logger.debug(
        "Warped %d valid pixels, %.1f%% in bounds",
        int(np.count_nonzero(e_t.valid)),
        100.0 * float(np.mean(in_bounds)),
    )
    return WarpResult(
        synth=PolarImage(synth, config, i_s.pose),
        in_bounds=in_bounds,
        jacobian=jacobian,
        overlap=overlap,
        near_cell_boundary=near_cell_boundary,
    )


def warp_jacobian(e_t: ElevationMap, i_s: PolarImage, m: RigidMotion) -> np.ndarray:
    """Per-pixel d(synthesized intensity)/d(phi), zero outside the sampled domain."""
    return inverse_warp(e_t, i_s, m).jacobian
