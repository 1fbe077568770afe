# apdelay/errors.py
from __future__ import annotations

from typing import Any, Optional

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3


class ApdelayError(Exception):
    exit_code = EXIT_USAGE


class BasisMismatch(ApdelayError, ValueError):
    pass


class DimMismatch(ApdelayError, ValueError):
    pass


class ValidationError(ApdelayError, ValueError):
    def __init__(self, message: str, field: str = "") -> None:
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


class ParseError(ApdelayError, ValueError):
    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None, field: str = "") -> None:
        self.line = line
        self.column = column
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column}")
        if field:
            where.append(f"field {field}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(f"{prefix}{message}")


class InsufficientCoverage(ApdelayError, ValueError):
    pass


class IncommensurableTau(ApdelayError, ValueError):
    pass


class OnAxis(ApdelayError, ValueError):
    pass


class AtPole(ApdelayError, ValueError):
    pass


class SpanTooShort(ApdelayError, ValueError):
    pass


class AmbiguousBoundary(ApdelayError, ValueError):
    pass


class WindowTooSmall(ApdelayError, ValueError):
    pass


class AdvanceTermPresent(ApdelayError, ValueError):
    pass


class StepTooLarge(ApdelayError, ValueError):
    pass


class IoError(ApdelayError, OSError):
    pass


class NumericalFailure(ApdelayError, RuntimeError):
    exit_code = EXIT_NUMERICAL


class SingularAtPoint(NumericalFailure):
    def __init__(self, message: str, z: complex = 0j) -> None:
        self.z = z
        super().__init__(message)


class BoundaryRoot(NumericalFailure):
    pass


class NoConvergence(NumericalFailure):
    pass


class EigenvalueOnContour(NumericalFailure):
    pass


class Resonance(ApdelayError, RuntimeError):
    exit_code = EXIT_CHECK_FAILED

    def __init__(self, frequency: Any, condition: float) -> None:
        self.frequency = frequency
        self.condition = float(condition)
        super().__init__(f"Resonance({frequency}): characteristic matrix singular (cond={self.condition:.3e})")


def exit_code_for(exc: BaseException) -> int:
    return int(getattr(exc, "exit_code", EXIT_NUMERICAL))
