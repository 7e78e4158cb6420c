"""Exception hierarchy for the toolkit."""


class VarElimError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(VarElimError, ValueError):
    """Input failed a structural check (shape, symmetry, orthonormality)."""


class DimensionError(ValidationError):
    """Point or vector dimensions do not match the problem."""


class DomainError(VarElimError, ValueError):
    """The inner solver is undefined at the requested point."""


class ConvergenceError(VarElimError, RuntimeError):
    """An iterative inner solve did not reach its tolerance."""

    def __init__(self, message, residual):
        super().__init__(f"{message} (residual norm {residual:.3e})")
        self.residual = residual


class SingularityError(VarElimError, ArithmeticError):
    """The inner Hessian is singular or too ill-conditioned to invert."""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class RankError(VarElimError, ArithmeticError):
    """A model or design matrix is rank deficient where full rank is needed."""


class HypothesisError(VarElimError, ValueError):
    """A theorem hypothesis (e.g. positive definite inner Hessian) is violated."""


class NotStationaryError(VarElimError, ValueError):
    """The candidate is not a stationary point of the reduced objective."""

    def __init__(self, message, grad_norm):
        super().__init__(f"{message} (reduced gradient norm {grad_norm:.3e})")
        self.grad_norm = grad_norm


class DivergenceError(VarElimError, FloatingPointError):
    """An optimizer produced a non-finite objective or gradient."""

    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = trace


class CapabilityError(VarElimError, NotImplementedError):
    """The problem does not support the requested operation."""
