class ValidationError(ValueError):
    """Inputs violate a documented precondition or invariant."""


class CurveDomainError(ValidationError):
    """A curve was queried outside its pillar range."""


class NumericalError(RuntimeError):
    """A numerical procedure (root solve, optimizer) failed to converge."""
