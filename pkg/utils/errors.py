# app/utils/errors.py

"""
Exception hierarchy for the EVaR toolkit.

Every error carries a machine-readable ``code`` and the process exit code the
command line uses when the error escapes a command (2 config, 3 data, 4 solver).
"""

from typing import Any, Dict, Optional

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_SOLVER = 4


class EvarError(Exception):
    """Base class for all toolkit errors."""
    code: str = "EVAR_ERROR"
    exit_code: int = EXIT_SOLVER

    def __init__(self, detail: str, **context: Any):
        super().__init__(detail)
        self.detail = detail
        self.context = context

    def to_payload(self, command: Optional[str] = None) -> Dict[str, Any]:
        """Builds the error document written to stderr by the command line."""
        payload: Dict[str, Any] = {"error": self.code, "detail": self.detail}
        if command is not None:
            payload["command"] = command
        if self.context:
            payload["context"] = self.context
        return payload


class ConfigError(EvarError):
    code = "CONFIG_ERROR"
    exit_code = EXIT_CONFIG


class FileAccessError(ConfigError):
    """An input or output path could not be opened, read or written."""
    code = "FILE_ACCESS_ERROR"


class ExponentOverflowError(EvarError):
    """An exponent argument exceeded the configured cap."""
    code = "EXPONENT_OVERFLOW"


class SingularCovarianceError(EvarError):
    code = "SINGULAR_COVARIANCE"


class TruncationBudgetExceededError(EvarError):
    code = "TRUNCATION_BUDGET_EXCEEDED"


class NoInteriorMinimumError(EvarError):
    """The EVaR objective kept decreasing up to the bracket cap."""
    code = "NO_INTERIOR_MINIMUM"


class EmptySampleError(EvarError):
    code = "EMPTY_SAMPLE"
    exit_code = EXIT_DATA


class NegativeQuadraticFormError(EvarError):
    code = "NEGATIVE_QUADRATIC_FORM"


class InfeasibleTargetError(EvarError):
    code = "INFEASIBLE_TARGET"


class SolverStallError(EvarError):
    code = "SOLVER_STALL"


class SingularGError(EvarError):
    code = "SINGULAR_G"


class AllStartsFailedError(EvarError):
    code = "ALL_STARTS_FAILED"


class DataError(EvarError):
    exit_code = EXIT_DATA


class ParseError(DataError):
    code = "PARSE_ERROR"


class NonPositivePriceError(DataError):
    code = "NON_POSITIVE_PRICE"


class EmptyIntersectionError(DataError):
    code = "EMPTY_INTERSECTION"


class TooFewRowsError(DataError):
    code = "TOO_FEW_ROWS"
