"""Exception types shared across the package."""


class DimensionTooLarge(ValueError):
    """Requested dimension exceeds what an exhaustive routine supports."""


class SingularMatrixError(ValueError):
    pass


class IllConditionedBasis(ArithmeticError):
    """Floating orthonormal basis lost orthogonality beyond the allowed defect."""


class NonConvergence(RuntimeError):
    pass


class InvalidDistribution(ValueError):
    pass


class InvariantViolation(AssertionError):
    """A mathematical guarantee (identity or proven inequality) failed to hold.

    Distinct from operational errors: the CLI maps it to exit code 3.
    """
