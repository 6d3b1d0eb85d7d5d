"""Exception hierarchy shared across the pipeline."""

from __future__ import annotations


class MSSDDPGError(Exception):
    """Base class for all package errors."""


class FormatError(MSSDDPGError):
    """Input file does not have the expected layout."""


class OrderError(MSSDDPGError):
    """Timestamps are not strictly increasing."""


class DataError(MSSDDPGError):
    """Invalid or insufficient data.

    ``row`` is the 1-based data row (header excluded) when the problem was
    found while loading a file.
    """

    def __init__(self, message: str, row: int | None = None) -> None:
        super().__init__(message if row is None else f"row {row}: {message}")
        self.row = row


class ScaleError(MSSDDPGError):
    """Requested timescale conversion is not a coarsening."""


class SpecError(MSSDDPGError):
    """Malformed synthetic generator spec."""


class EmptyError(MSSDDPGError):
    """Operation needs at least one bar."""


class ShapeError(MSSDDPGError):
    """Array dimensions do not match."""


class CacheError(MSSDDPGError):
    """Backward pass called with a cache that does not belong to the params."""


class NotReadyError(MSSDDPGError):
    """Not enough experience collected yet."""


class EpisodeError(MSSDDPGError):
    """Environment stepped after the episode finished."""


class ConfigError(MSSDDPGError):
    """Run configuration is invalid."""


class CheckpointError(MSSDDPGError):
    """Checkpoint missing or unreadable."""
