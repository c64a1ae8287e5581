"""Exception and warning types shared across the package."""


class PhotonMemoryError(Exception):
    """Base class for errors raised by this package."""


class GridError(PhotonMemoryError, ValueError):
    """Non-uniform, mismatched or otherwise unusable sampling grid."""


class DomainError(PhotonMemoryError, ValueError):
    """Argument outside the domain of a function."""


class SingularMediumError(PhotonMemoryError, ValueError):
    """Zero optical depth: no optimal pulse exists."""


class ConfigurationError(PhotonMemoryError, ValueError):
    """A run configuration that cannot produce a valid result."""


class EdgeLeakageWarning(UserWarning):
    """Signal not negligible at the edges of its grid."""


class EmptyWindowWarning(UserWarning):
    """Integration window does not intersect the grid."""


class ThinSliceWarning(UserWarning):
    """Slice too thick for the thin-slice transfer function."""


class SeriesTruncationWarning(UserWarning):
    """Series truncated before reaching its convergence tolerance."""


class TruncatedPulseWarning(UserWarning):
    """Grid start discards a non-negligible part of the pulse."""
