"""Exception types shared across the package."""


class EmsError(Exception):
    """Base class for all package-specific errors."""


class ParseError(EmsError):
    """A data-file row or header could not be parsed."""


class NonUniformTimestep(EmsError):
    """Cycle timestamps are not uniformly spaced."""


class NegativeSpeed(EmsError):
    """A cycle speed sample is negative or not finite."""


class IndexOutOfRange(EmsError, IndexError):
    """A step or grid index lies outside the valid range."""


class PowerOutOfRange(EmsError):
    """Commanded fuel-cell power lies outside [0, max_power]."""


class PowerInfeasible(EmsError):
    """The battery cannot deliver the requested terminal power
    (open-circuit voltage squared below 4 * R_int * P)."""


class EpisodeFinished(EmsError):
    """step() was called on an environment whose episode already ended."""


class EmptyCurve(EmsError):
    """A learning curve with no evaluation points cannot be classified."""


class MissingCell(EmsError):
    """A heat-map cell has no run covering its grid combination."""


class ConfigError(EmsError):
    """A run configuration failed validation."""


class DataFileError(EmsError):
    """A referenced data file is missing or malformed."""
