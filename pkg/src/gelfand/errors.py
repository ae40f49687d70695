"""Exception hierarchy shared by all modules."""


class GelfandError(Exception):
    """Base class for every error raised by this package."""


class DomainError(GelfandError, ValueError):
    """Input parameters lie outside the admissible range."""


class EvalError(GelfandError, ArithmeticError):
    """An evaluator produced a non-finite value."""


class SolverError(GelfandError, RuntimeError):
    """Base class for numerical integration failures."""


class BlowupError(SolverError):
    """The combined exponent exceeded the overflow guard."""


class ToleranceError(SolverError):
    """The requested accuracy could not be met."""


class StepBudgetError(SolverError):
    """The integrator exhausted its right-hand-side evaluation budget."""


class BracketError(SolverError):
    """A level set could not be bracketed before the guard radius."""


class SeedError(SolverError):
    """The asymptotic seed is outside its regime of validity."""


class DomainExitError(SolverError):
    """A phase orbit reached the boundary of the vector field's domain.

    The truncated orbit is kept in ``orbit``.
    """

    def __init__(self, message, orbit=None):
        super().__init__(message)
        self.orbit = orbit


class FitError(GelfandError, RuntimeError):
    """A least-squares fit could not be performed (noise floor, sign change)."""


class TailError(GelfandError, RuntimeError):
    """No truncation point achieved the requested tail bound."""
