"""Exception hierarchy.

Validation problems (bad input, violated preconditions) and numerical
failures (propagation blow-up, singular systems) are kept apart so the CLI
can map them onto distinct exit codes.
"""


class EnaqtError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(EnaqtError, ValueError):
    """An input violated a documented precondition."""


class NumericalError(EnaqtError, ArithmeticError):
    """A computation could not be completed to the required accuracy."""


class NotPositiveSemidefiniteError(NumericalError):
    def __init__(self, eigenvalue: float):
        self.eigenvalue = float(eigenvalue)
        super().__init__(f"matrix is not positive semidefinite (min eigenvalue {self.eigenvalue:.3e})")


class SingularSystemError(NumericalError):
    pass


class PropagationError(NumericalError):
    def __init__(self, time: float, violation: float, what: str):
        self.time = float(time)
        self.violation = float(violation)
        self.what = what
        super().__init__(f"propagation failed at t={self.time:.6g} ps: {what} violated by {self.violation:.3e}")


class StepSizeError(NumericalError):
    pass


class EmptySiteBlockError(NumericalError):
    """The single-excitation block has (near) zero trace, so LQU is undefined."""
