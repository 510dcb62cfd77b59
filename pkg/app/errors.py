from __future__ import annotations

from typing import Any, Dict, Optional


def build_error_payload(
    code: str,
    message: str,
    details: Optional[Dict[str, Any]] = None,
) -> Dict[str, Any]:
    payload: Dict[str, Any] = {"code": code, "message": message}
    if details:
        payload["details"] = dict(details)
    return payload


class SystolicError(Exception):
    code = "SYSTOLIC_ERROR"

    def __init__(self, message: str, *, code: str | None = None, details: Optional[Dict[str, Any]] = None) -> None:
        super().__init__(message)
        self.message = message
        if code is not None:
            self.code = code
        self.details: Dict[str, Any] = dict(details or {})

    def to_payload(self) -> Dict[str, Any]:
        return build_error_payload(self.code, self.message, self.details)


class ComplexValidationError(SystolicError):
    code = "INVALID_COMPLEX"


class DegenerateTriangleError(SystolicError):
    code = "DEGENERATE_TRIANGLE"


class MetricError(SystolicError):
    code = "INVALID_METRIC"


class DegreeMismatchError(SystolicError):
    code = "DEGREE_MISMATCH"


class NotACocycleError(SystolicError):
    code = "NOT_A_COCYCLE"


class TrivialClassError(SystolicError):
    code = "TRIVIAL_CLASS"


class NotACycleError(SystolicError):
    code = "NOT_A_CYCLE"


class NoWitnessError(SystolicError):
    code = "NO_CUP_WITNESS"


class NoNontrivialClassError(SystolicError):
    code = "NO_NONTRIVIAL_CLASS"


class EmptyGridError(SystolicError):
    code = "EMPTY_GRID"


class RealizationError(SystolicError):
    code = "REALIZATION_FAILED"


class OptimizerError(SystolicError):
    code = "OPTIMIZER_ERROR"


class GeneratorError(SystolicError):
    code = "INVALID_PARAMETERS"


class SchemaError(SystolicError):
    code = "SCHEMA_INVALID"
