"""Exception types shared across the toolkit."""

from __future__ import annotations

__all__ = [
    "MrfError",
    "InvalidLabelingError",
    "CompositionError",
    "MissingNeighborError",
    "DomainError",
    "TooLargeError",
    "NoCertificateError",
    "NoFactorError",
]


class MrfError(Exception):
    """Base class for all toolkit errors."""


class InvalidLabelingError(MrfError):
    """A labeling does not match the energy's node count or label ranges."""


class CompositionError(MrfError):
    """Two partial labelings with overlapping supports were composed."""


class MissingNeighborError(MrfError):
    """A neighborhood assignment does not cover every required neighbor."""


class DomainError(MrfError):
    """An operation was applied to an energy outside its domain (e.g. a
    non-binary energy passed to a binary-only solver)."""


class TooLargeError(MrfError):
    """An exhaustive enumeration would exceed the configured cap."""


class NoCertificateError(MrfError):
    """A bound certificate was requested for a run that cannot support it
    (e.g. a worst-case bound for a run with an unbounded loss gate)."""


class NoFactorError(MrfError):
    """No multiplicative approximation factor exists for this energy."""
