"""Exception types shared across the package."""


class GridWeaverError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(GridWeaverError):
    """An input document is malformed or has the wrong shape."""


class UnresolvedReference(GridWeaverError):
    """A named element refers to another element that does not exist."""


class InvariantViolation(GridWeaverError):
    """A structural rule of the data model is broken."""


class NoMatchingStationClass(GridWeaverError):
    """No station class in the blueprint matches an aggregated station."""


class DisconnectedTopology(GridWeaverError):
    """The requested network cannot connect all stations."""

    def __init__(self, message: str, unreachable=()):
        super().__init__(message)
        self.unreachable = tuple(unreachable)


class ConfigurationError(GridWeaverError):
    """The configuration phase cannot complete with the given inputs."""


class VersionError(GridWeaverError):
    """A document declares an unsupported format version."""
