"""Exception hierarchy with stable machine-readable codes.

Every error surfaced through the CLI or HTTP API carries a ``code`` string
that clients can match on; messages are for humans only.
"""

from __future__ import annotations


class ChromactlError(Exception):
    """Base class; ``code`` is stable across releases."""

    code = "INTERNAL"
    exit_code = 2

    def __init__(self, message: str, *, code: str | None = None):
        super().__init__(message)
        if code is not None:
            self.code = code

    @property
    def message(self) -> str:
        return str(self)


# --- color literals ---------------------------------------------------------

class MalformedLiteral(ChromactlError):
    code = "MALFORMED_LITERAL"


class UnknownColorName(ChromactlError):
    code = "UNKNOWN_COLOR_NAME"


# --- request parsing --------------------------------------------------------

class NoColorFound(ChromactlError):
    code = "NO_COLOR_FOUND"


class AmbiguousRequest(ChromactlError):
    code = "AMBIGUOUS_REQUEST"


class BadVolume(ChromactlError):
    code = "BAD_VOLUME"


# --- planning ---------------------------------------------------------------

class SimplexViolation(ChromactlError):
    code = "SIMPLEX_VIOLATION"


class FlowOutOfRange(ChromactlError):
    code = "FLOW_OUT_OF_RANGE"


class InfeasibleFlow(ChromactlError):
    code = "INFEASIBLE_FLOW"


class ZeroTarget(ChromactlError):
    code = "ZERO_TARGET"


# --- pump programs ----------------------------------------------------------

class ProgramSyntaxError(ChromactlError):
    code = "SYNTAX_ERROR"

    def __init__(self, message: str, *, line: int = 0, column: int = 0):
        super().__init__(f"{message} (line {line}, col {column})")
        self.line = line
        self.column = column


class DuplicateSetVolume(ChromactlError):
    code = "DUPLICATE_SET_VOLUME"


class UnknownStatement(ChromactlError):
    code = "UNKNOWN_STATEMENT"


# --- device -----------------------------------------------------------------

class DeviceFault(ChromactlError):
    exit_code = 3


class SetpointOutOfRange(DeviceFault):
    code = "SETPOINT_OUT_OF_RANGE"


class DeviceBusy(DeviceFault):
    code = "BUSY"


class UncheckedProgram(DeviceFault):
    code = "UNCHECKED_PROGRAM"


class ReservoirLow(DeviceFault):
    code = "RESERVOIR_LOW"


# --- calibration ------------------------------------------------------------

class InsufficientData(ChromactlError):
    code = "INSUFFICIENT_DATA"


class DegenerateFit(ChromactlError):
    code = "DEGENERATE_FIT"


# --- translation ------------------------------------------------------------

class BackendUnavailable(ChromactlError):
    code = "BACKEND_UNAVAILABLE"
    exit_code = 4
