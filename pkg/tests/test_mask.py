"""Tests for signal-mask binarization."""

from __future__ import annotations

import numpy as np
import pytest

from elevlab.core.errors import ConfigError
from elevlab.core.mask import MaskConfig, binarize


def test_threshold_is_strict():
    image = np.array([[0.05, 0.0501], [0.0, 1.0]])

    mask = binarize(image, threshold=0.05, min_component=0)

    assert mask.valid.tolist() == [[False, True], [False, True]]
    assert mask.count == 2
    assert mask.threshold == 0.05


def test_small_components_are_removed():
    image = np.zeros((12, 12))
    image[1:4, 1:4] = 0.5
    image[8, 8] = 0.9

    mask = binarize(image)

    assert mask.valid[1:4, 1:4].all()
    assert not mask.valid[8, 8]
    assert mask.count == 9


def test_diagonal_neighbours_are_not_connected():
    image = np.zeros((10, 10))
    for i in range(9):
        image[i, i] = 0.5

    assert binarize(image, min_component=2).count == 0
    assert binarize(image, min_component=1).count == 9


def test_polar_images_are_accepted(textured_image):
    mask = binarize(textured_image, threshold=0.1)

    assert mask.valid.shape == textured_image.shape
    assert mask.valid.all()


def test_mask_is_read_only(textured_image):
    mask = binarize(textured_image)

    with pytest.raises(ValueError):
        mask.valid[0, 0] = False


@pytest.mark.parametrize("threshold, min_component", [(-0.1, 8), (1.5, 8), (0.05, -1)])
def test_mask_config_validation(threshold, min_component):
    with pytest.raises(ConfigError):
        MaskConfig(threshold, min_component)
    with pytest.raises(ConfigError):
        binarize(np.zeros((4, 4)), threshold, min_component)


def test_blank_image_gives_an_empty_mask():
    mask = binarize(np.zeros((5, 5)))

    assert mask.count == 0
