"""Exception hierarchy shared by every elevlab module."""

from __future__ import annotations


class ElevlabError(Exception):
    """Base class for all elevlab failures."""


class ConfigError(ElevlabError, ValueError):
    """Invalid configuration, motion tag, range or command-line value."""


class GeometryDomainError(ElevlabError, ValueError):
    """Input outside the domain of a geometric operation (zero norm, r = 0)."""


class ContractError(ElevlabError):
    """Rasters that must share a sensor grid do not."""


class EmptyMaskError(ElevlabError):
    """A mean, loss or metric was requested over an empty set."""


class DatasetError(ElevlabError):
    """A manifest references frames that cannot be read."""


class EstimationError(ElevlabError):
    """The optimizer produced a non-finite loss."""

    def __init__(self, message: str, iteration: int, components: dict[str, float]):
        super().__init__(f"{message} (iteration {iteration}, components {components})")
        self.iteration = iteration
        self.components = components
