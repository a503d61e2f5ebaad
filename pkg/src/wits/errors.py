"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """Raised when an argument violates an operation's preconditions."""


class NumericalError(RuntimeError):
    """Raised when an optimization step produces NaN/Inf or fails to converge."""


class CodeSolverError(NumericalError):
    """Sparse-code solver hit its iteration cap before reaching the requested
    stationarity tolerance. Carries the best iterate seen and its residual."""

    def __init__(self, message, best, residual):
        super().__init__(message)
        self.best = best
        self.residual = residual


class RuleSyntaxError(ValueError):
    """Rule text failed to parse; carries 1-based line/column of the offending token."""

    def __init__(self, message, line, column):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column
