"""Exception types raised across the toolkit."""


class DoaFoundryError(Exception):
    """Base class for all toolkit errors."""


class UnsupportedGeometryError(DoaFoundryError):
    """Geometry has no 1-D manifold for the requested operation."""


class InvalidGeometryError(DoaFoundryError):
    """Geometry parameters violate their structural constraints."""


class DegenerateCovarianceError(DoaFoundryError):
    """Covariance is singular or indefinite where positivity is required."""


class InsufficientDimensionsError(DoaFoundryError):
    """Array dimension too small for the requested statistic."""


class CalibrationUnreliableError(DoaFoundryError):
    """Too few Monte Carlo trials to resolve the requested quantile."""


class InvalidModelOrderError(DoaFoundryError):
    """Requested source count is incompatible with the array dimension."""


class InvalidRootError(DoaFoundryError):
    """Polynomial root maps outside the physical angle range."""


class DegenerateSubspaceError(DoaFoundryError):
    """Signal subspace is rank deficient."""


class EstimationFailedError(DoaFoundryError):
    """Estimator could not produce an angle (e.g. no zero crossing)."""


class UnidentifiableError(DoaFoundryError):
    """Fisher information is singular; the parameter is unidentifiable."""


class ConfigurationError(DoaFoundryError):
    """Missing or inconsistent configuration input."""


class AmbiguityResolutionError(DoaFoundryError):
    """Candidate set for ambiguity elimination is empty."""


class InsufficientCoarrayError(DoaFoundryError):
    """Contiguous coarray segment too short for virtual processing."""


class OverCapacityError(DoaFoundryError):
    """More sources requested than the (virtual) aperture supports."""


class DegeneratePlaneError(DoaFoundryError):
    """Bearing geometry does not define a valid plane."""


class NoTriangleError(DoaFoundryError):
    """Lines do not intersect pairwise in a triangle."""


class SolverFailedError(DoaFoundryError):
    """Iterative solver failed to converge; carries the best iterate."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
