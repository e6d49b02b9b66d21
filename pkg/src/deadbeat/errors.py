"""Exception taxonomy shared by every module in the package."""

from __future__ import annotations


class DeadbeatError(Exception):
    """Base class for the package's own failures."""


class CatalogError(DeadbeatError):
    """Requested model name is not in the catalog."""


class ModelError(DeadbeatError):
    """A model callback returned a malformed value."""


class GridError(DeadbeatError):
    """A time is off-grid, or window bounds are misaligned/degenerate."""


class DivergenceError(DeadbeatError):
    """Integration left the finite range.

    Carries the first bad time in ``time`` and, when the producer can
    supply one, the truncated result in ``partial``.
    """

    def __init__(self, time: float, message: str = "", partial=None):
        super().__init__(message or f"state diverged at t={time!r}")
        self.time = float(time)
        self.partial = partial


class ObservabilityError(DeadbeatError):
    """The window Gramian is numerically singular: the window does not
    distinguish initial states at the working tolerance."""


class DomainError(DeadbeatError):
    """Operation used outside the model class it supports."""


class ConfigError(DeadbeatError):
    """One or more invalid fields in a run configuration.

    ``issues`` is a list of (field path, reason) pairs.
    """

    def __init__(self, issues):
        if isinstance(issues, str):
            issues = [("", issues)]
        self.issues = list(issues)
        lines = [f"{field}: {reason}" if field else reason for field, reason in self.issues]
        super().__init__("invalid configuration\n  " + "\n  ".join(lines))
