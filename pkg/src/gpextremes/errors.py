"""Exception hierarchy for gpextremes.

Exit-code mapping in the CLI: configuration / model-violation errors map to
exit code 1, numerical failures to exit code 2.
"""


class GPExtremesError(Exception):
    """Base class for all library errors."""


class DomainError(GPExtremesError):
    """Argument outside the declared domain of a profile or operation."""


class SpecViolationError(GPExtremesError):
    """A process specification violates a structural requirement
    (non-unique variance maximum, nonpositive variance drop, plateau, ...)."""


class BracketError(GPExtremesError):
    """Root/inverse target not attained on the given bracket."""


class NotPositiveDefiniteError(GPExtremesError):
    """Covariance matrix failed factorization even after maximal jitter."""


class SamplerError(GPExtremesError):
    """Both the spectral embedding and the dense factorization sampler failed."""


class ClassificationError(GPExtremesError):
    """Numeric case classification did not converge to 0, a finite limit, or infinity."""


class ConfigurationError(GPExtremesError):
    """Inconsistent inputs: mismatched indices, missing constants, bad dispatch."""
