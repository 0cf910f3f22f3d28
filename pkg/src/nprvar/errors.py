"""Exception types raised across the package.

Every operational failure maps to one of these classes so callers (and the
CLI, which turns them into exit code 2) can distinguish validation problems
from genuine runtime faults.
"""


class NprvarError(Exception):
    """Base class for all package-specific errors."""


class NonPositiveBandwidth(NprvarError):
    """A bandwidth was zero or negative."""


class InvalidSampleSize(NprvarError):
    """Fewer observations than the operation requires."""


class MissingBeta(NprvarError):
    """A variance-function bandwidth was requested without a beta."""


class SmoothnessOutOfRange(NprvarError):
    """A smoothness index lies outside the supported range."""


class NegativeVariance(NprvarError):
    """A variance specification evaluated below zero at a design point."""


class OutOfDomain(NprvarError):
    """Evaluation point outside the function specification's domain."""


class AlphaOutOfRange(NprvarError):
    """Hard instance requested outside its smoothness regime."""


class SmoothnessRegime(NprvarError):
    """(alpha, beta) outside the regime the construction is defined for."""


class DimensionMismatch(NprvarError):
    """Design dimension and argument shapes disagree."""


class GridNotEven(NprvarError):
    """Grid side length is not an even integer."""


class DimensionTooSmall(NprvarError):
    """Operation needs a higher-dimensional design."""


class DimensionTooLarge(NprvarError):
    """Operation supports only low dimensions."""


class UnknownDesignCDF(NprvarError):
    """Projection estimator invoked without the design CDFs it assumes."""


class NegativeWeight(NprvarError):
    """Weight function evaluated below zero."""


class EvenOrder(NprvarError):
    """Moment matching order must be odd."""


class NotPositiveDefinite(NprvarError):
    """Covariance argument is not symmetric positive definite."""


class NonPositiveValue(NprvarError):
    """Log-log fitting needs strictly positive values."""


class SchemaMismatch(NprvarError):
    """Persisted result carries an unknown schema version."""


class TrialFailure(NprvarError):
    """A Monte Carlo trial failed; carries scenario/n/trial context."""
