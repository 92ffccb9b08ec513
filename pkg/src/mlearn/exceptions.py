"""Exception hierarchy shared across the package.

Input problems (bad shapes, bad labels, unparseable files) raise
:class:`ValidationError` or one of its subclasses; failures of the numerics
themselves (non-convergence, singular spectra, ill-conditioning) raise
:class:`NumericalError`. The CLI maps the former to exit code 2 and the
latter to exit code 3.
"""


class MetricLearnError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(MetricLearnError, ValueError):
    """Invalid user input: shapes, labels, options, file contents."""


class DimensionError(ValidationError):
    """Mismatched or unsupported array dimensions."""


class SymmetryError(ValidationError):
    """A matrix required to be symmetric is not, beyond tolerance."""


class NumericalError(MetricLearnError, RuntimeError):
    """A numerical procedure failed (non-convergence, overflow, ...)."""


class RankError(NumericalError):
    """An operation required a nonzero spectrum but found none."""


class ConditioningError(NumericalError):
    """A matrix is too ill-conditioned (for example not positive definite)."""


class ConvergenceWarning(UserWarning):
    """A solver stopped at its iteration cap without meeting its tolerance."""
