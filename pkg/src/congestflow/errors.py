"""Exception hierarchy shared across the package."""


class CongestflowError(Exception):
    """Base class for all package-specific errors."""


class DomainError(CongestflowError):
    """Input violates a documented precondition (mass mismatch, non-indicator field, ...)."""


class ParameterError(CongestflowError):
    """Invalid parameter bundle (negative epsilon, alpha+beta == 0, ...)."""


class SolverError(CongestflowError):
    """Iterative solver failed to reach its tolerance.

    Carries the residual (or marginal defect) reached when the iteration cap hit.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class StepError(CongestflowError):
    """A JKO step failed; carries the step diagnostics collected so far."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class ConfigError(CongestflowError):
    """Configuration text failed validation; carries all collected issues."""

    def __init__(self, issues):
        self.issues = list(issues)
        super().__init__("; ".join(str(i) for i in self.issues))
