"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """Malformed data object: bad shape, non-finite entries, broken invariant."""


class InvalidParameterError(ValueError):
    """Scalar or config parameter outside its documented range."""


class NumericalFailureError(RuntimeError):
    """An iterative numerical routine failed (no convergence, no bracket)."""


class EvaluationDomainError(ValueError):
    """Evaluation requested outside the mathematical domain of a function."""
