class ValidationError(ValueError):
    """Bad configuration or an input that violates a type invariant."""


class NumericalError(ArithmeticError):
    """A linear solve, eigensolver or iteration failed numerically."""


class SingularSystemError(NumericalError):
    pass


class ConvergenceError(NumericalError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual
