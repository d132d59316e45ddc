"""Exception types shared across the package."""


class ContractViolation(ValueError):
    """An argument violates a documented precondition."""


class DimensionMismatch(ContractViolation):
    pass


class CapabilityError(NotImplementedError):
    """The operator variant does not support the requested action."""


class InnerSolveError(RuntimeError):
    """An inner solver failed to reach its tolerance."""

    def __init__(self, message, residual=float("nan"), iters=0):
        super().__init__(message)
        self.residual = residual
        self.iters = iters


class StepError(RuntimeError):
    """An outer step failed; carries the failing equation index."""

    def __init__(self, message, equation, cause=None):
        super().__init__(f"equation {equation}: {message}")
        self.equation = equation
        self.cause = cause


class NoAdmissibleIndex(ValueError):
    """The stopping-index set is empty: noise exceeds the regularization range."""


class ConfigError(ValueError):
    pass
