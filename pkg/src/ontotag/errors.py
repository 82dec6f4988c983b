"""Shared exception base so the CLI can map failures to exit codes uniformly."""


class TaggerError(Exception):
    """Base class for validation and data errors raised by this package."""
