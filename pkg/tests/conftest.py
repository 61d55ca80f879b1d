"""
Pytest configuration for the elevlab test suite
"""

import logging
import math
import sys
from pathlib import Path

# Add elevlab to Python path
sys.path.insert(0, str(Path(__file__).parent.parent))

import numpy as np
import pytest
from scipy import ndimage

from elevlab.core.geometry import SensorConfig
from elevlab.core.rasters import PolarImage


def smooth_texture(shape, seed: int = 0, sigma: float = 2.0) -> np.ndarray:
    """Blurred noise rescaled into [0.2, 0.8]."""
    rng = np.random.default_rng(seed)
    field = ndimage.gaussian_filter(rng.normal(size=shape), sigma=sigma, mode="reflect")
    field = (field - field.min()) / (field.max() - field.min())
    return 0.2 + 0.6 * field


@pytest.fixture
def small_config():
    """Coarse grid: r in [1, 3] m over 40 bins (rho = 5 cm), 24 beams over 30 deg."""
    return SensorConfig(
        r_min=1.0,
        r_max=3.0,
        n_range=40,
        n_azimuth=24,
        azimuth_fov=math.radians(30.0),
        elevation_aperture=math.radians(14.0),
    )


@pytest.fixture
def textured_image(small_config):
    return PolarImage(smooth_texture(small_config.shape, seed=7), small_config)


@pytest.fixture
def smooth_elevation(small_config):
    """Smooth elevation field well inside the aperture."""
    r, theta = small_config.grid()
    return 0.06 * np.sin(1.3 * r) + 0.03 * np.cos(5.0 * theta)


@pytest.fixture(autouse=True)
def _release_log_handlers():
    """Commands install root handlers; drop them so tests do not leak file handles."""
    yield
    root = logging.getLogger()
    for handler in list(root.handlers):
        if getattr(handler, "_elevlab_managed", False):
            root.removeHandler(handler)
            handler.close()
