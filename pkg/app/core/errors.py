"""
Exception hierarchy for symbol analysis.
"""

from typing import Any, Dict, Optional


class AnalysisError(Exception):
    """Base error; carries a stable error code, CLI exit code and context."""

    error_code = "ANALYSIS_ERROR"
    exit_code = 1

    def __init__(self, message: str, context: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.context = context or {}

    def to_dict(self) -> Dict[str, Any]:
        return {
            "error_type": type(self).__name__,
            "error_message": self.message,
            "error_code": self.error_code,
            "context": self.context,
        }


class SymbolParseError(AnalysisError):
    """Malformed symbol text or JSON."""

    error_code = "SYMBOL_PARSE_ERROR"


class SearchBoundExceeded(AnalysisError):
    """Generating-set search hit a configured cap; input too large."""

    error_code = "SEARCH_BOUND_EXCEEDED"


class ClassMembershipError(AnalysisError):
    """Symbol is outside the class of bounded composition symbols."""

    error_code = "CLASS_MEMBERSHIP"
    exit_code = 2


class PreconditionError(AnalysisError):
    error_code = "PRECONDITION_VIOLATED"


class NotSupportedError(AnalysisError):
    error_code = "NOT_SUPPORTED"


class ConvergenceError(AnalysisError):
    """Iterative solver did not converge."""

    error_code = "CONVERGENCE_FAILED"


class DimensionMismatchError(AnalysisError):
    error_code = "DIMENSION_MISMATCH"


class InconsistentInputError(AnalysisError):
    error_code = "INCONSISTENT_INPUT"


class SeriesCapMismatchError(AnalysisError):
    error_code = "SERIES_CAP_MISMATCH"


class CertificationError(AnalysisError):
    """Grid certification of Re Phi >= 0 failed."""

    error_code = "CERTIFICATION_FAILED"


class RunCancelledError(AnalysisError):
    """Work stopped because its pipeline timed out."""

    error_code = "RUN_CANCELLED"
