"""Exception types shared across the package."""


class SovxxzError(Exception):
    """Base class for all package errors."""


class DimensionError(SovxxzError):
    """Matrix or vector has an incompatible shape."""


class ParameterError(SovxxzError):
    """Model parameters violate the genericity/separation requirements."""


class SingularEvaluationError(SovxxzError):
    """A denominator factor is too close to zero to evaluate reliably."""


class ConvergenceError(SovxxzError):
    """An iterative routine failed to reach its target residual."""


class DegenerateSpectrumError(SovxxzError):
    """Transfer-matrix eigenvalues are too close; parameters must be re-seeded."""


class AmbiguousNullspaceError(SovxxzError):
    """The sampled functional system does not have a one-dimensional nullspace."""


class CertificationError(SovxxzError):
    """An eigenvalue record failed one of its certification checks."""


class InversionError(SovxxzError):
    """A transfer-matrix factor required by the inverse problem is singular."""
