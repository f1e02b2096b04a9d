"""Exception hierarchy.

Errors are grouped so the CLI can map them onto exit codes: input problems
(`ValidationError` subclasses) versus numerical failures (`NumericalError`).
"""


class TcdynError(Exception):
    """Base class for all package errors."""


class ValidationError(TcdynError, ValueError):
    """Invalid user input; `field` names the offending parameter when known."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class NonPositiveRate(ValidationError):
    pass


class ModeOrderViolation(ValidationError):
    pass


class StepTooLarge(ValidationError):
    pass


class WindowTooShort(ValidationError):
    pass


class UnsupportedScheme(ValidationError):
    pass


class ParseError(ValidationError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class NumericalError(TcdynError, ArithmeticError):
    """A computation failed or produced an untrustworthy result."""


class NoLasingThreshold(NumericalError):
    pass


class DegenerateCubic(NumericalError):
    pass


class NotPhysical(NumericalError):
    def __init__(self, message: str, condition: str):
        super().__init__(message)
        self.condition = condition


class ConvergenceFailure(NumericalError):
    pass


class NonFiniteState(NumericalError):
    def __init__(self, message: str, time: float, trajectory=None):
        super().__init__(message)
        self.time = time
        self.trajectory = trajectory


class NonRealCoefficient(NumericalError):
    pass


class NoValidBranch(NumericalError):
    pass


class DiscretizationSuspect(NumericalError):
    def __init__(self, message: str, value: float):
        super().__init__(message)
        self.value = value


class NoConvergence(NumericalError):
    pass
