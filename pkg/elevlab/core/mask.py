"""Signal masks for simulated images: intensity threshold plus small-component removal."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import ConfigError
from .rasters import PolarImage

logger = logging.getLogger("elevlab.mask")

# 4-connectivity
_FOUR_CONNECTED = ndimage.generate_binary_structure(2, 1)


@dataclass(frozen=True)
class MaskConfig:
    threshold: float = 0.05
    min_component: int = 8

    def __post_init__(self) -> None:
        if not 0.0 <= self.threshold <= 1.0:
            raise ConfigError("mask threshold must lie in [0, 1]")
        if self.min_component < 0:
            raise ConfigError("min_component must be non-negative")


@dataclass(frozen=True, eq=False)
class SignalMask:
    valid: np.ndarray
    threshold: float

    @property
    def count(self) -> int:
        return int(np.count_nonzero(self.valid))


def binarize(
    image: PolarImage | np.ndarray, threshold: float = 0.05, min_component: int = 8
) -> SignalMask:
    """intensity > threshold, minus 4-connected components under ``min_component`` pixels."""
    MaskConfig(threshold, min_component)
    intensity = image.intensity if isinstance(image, PolarImage) else np.asarray(image, dtype=float)
    valid = intensity > threshold
    if min_component > 1 and valid.any():
        labels, count = ndimage.label(valid, structure=_FOUR_CONNECTED)
        sizes = np.bincount(labels.ravel(), minlength=count + 1)
        keep = sizes >= min_component
        keep[0] = False
        removed = int(np.count_nonzero(~keep[1:]))
        valid = keep[labels]
        if removed:
            logger.debug("Removed %d components smaller than %d pixels", removed, min_component)
    valid.setflags(write=False)
    return SignalMask(valid=valid, threshold=float(threshold))
