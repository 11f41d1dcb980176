"""Exception types shared across the package."""


class GravcleanError(Exception):
    """Base class for all gravclean errors."""


class EmptyCloudError(GravcleanError):
    """An operation that requires points received an empty cloud."""


class DegenerateLeafError(GravcleanError):
    """A leaf is too small for the requested neighborhood statistics."""


class CloudParseError(GravcleanError):
    """A point-cloud file is malformed; the message carries location info."""
