"""Activity recognition from ambient signal streams.

Pipeline: trend-filtered statistical features -> multi-task shared-structure
dictionary learning -> reconstruction-error classification and abnormality
detection -> trigger-action rules deriving complex activities from atomic
context events. Includes a synthetic smart-home generator and a CLI.
"""

__version__ = "0.1.0"

from .errors import CodeSolverError, InvalidInputError, NumericalError, RuleSyntaxError

__all__ = [
    "CodeSolverError",
    "InvalidInputError",
    "NumericalError",
    "RuleSyntaxError",
    "__version__",
]
