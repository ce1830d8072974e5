"""The pump-control language: codegen, recursive-descent parsing, and the
static safety checker that gates every program before it may run.

Grammar (exact):

    program   := statement+
    statement := write | setvol
    write     := "Pump" INT "." "write" "(" NUMBER ")" ";"
    setvol    := "setVolume" "(" NUMBER ")" ";"
    INT       := [1-9][0-9]*
    NUMBER    := nonnegative decimal

Whitespace between tokens is ignored. A ``write`` sets a persistent per-pump
voltage setpoint; ``setVolume(V)`` dispenses, running every pump at its
setpoint until the total dispensed volume reaches V ml.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Sequence, Union

from .errors import DuplicateSetVolume, ProgramSyntaxError
from .pumps import PumpModel, flow_rate

if TYPE_CHECKING:
    from .planner import MixPlan

__all__ = [
    "WriteStmt",
    "SetVolumeStmt",
    "PumpProgram",
    "DeviceLimits",
    "Violation",
    "CheckReport",
    "generate_program",
    "render_program",
    "parse_program",
    "check_program",
]


@dataclass(frozen=True)
class WriteStmt:
    pump_index: int  # 1-based
    setpoint: float  # volts

    def render(self) -> str:
        return f"Pump{self.pump_index}.write({_format_number(self.setpoint)});"


@dataclass(frozen=True)
class SetVolumeStmt:
    volume_ml: float

    def render(self) -> str:
        return f"setVolume({_format_number(self.volume_ml)});"


Statement = Union[WriteStmt, SetVolumeStmt]


@dataclass(frozen=True)
class PumpProgram:
    statements: tuple[Statement, ...]

    def __post_init__(self):
        if not self.statements:
            raise ValueError("a program needs at least one statement")

    @property
    def text(self) -> str:
        return render_program(self)


@dataclass(frozen=True)
class DeviceLimits:
    pump_count: int = 3
    v_max: float = 300.0
    reservoir_ml: tuple[float, ...] = (100.0, 100.0, 100.0)
    max_volume_ml: float = 100.0

    def __post_init__(self):
        if self.pump_count < 1 or self.v_max <= 0 or self.max_volume_ml <= 0:
            raise ValueError("device limits must be positive")
        if len(self.reservoir_ml) != self.pump_count:
            raise ValueError("one reservoir size per pump required")
        if any(r <= 0 for r in self.reservoir_ml):
            raise ValueError("device limits must be positive")


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    statement_index: int  # -1 for program-level violations


@dataclass(frozen=True)
class CheckReport:
    ok: bool
    violations: tuple[Violation, ...]

    def __post_init__(self):
        assert self.ok == (not self.violations)


def _format_number(x: float) -> str:
    rounded = round(x, 1)
    if rounded == int(rounded):
        return str(int(rounded))
    return f"{rounded:.1f}"


def generate_program(plan: "MixPlan") -> PumpProgram:
    """One write per pump in index order (setpoints rounded to 0.1 V),
    then a single setVolume with the batch total."""
    statements: list[Statement] = [
        WriteStmt(pump_index=i + 1, setpoint=round(sp, 1))
        for i, sp in enumerate(plan.setpoints)
    ]
    statements.append(SetVolumeStmt(volume_ml=round(sum(plan.volumes_ml), 1)))
    return PumpProgram(statements=tuple(statements))


def render_program(prog: PumpProgram) -> str:
    """Canonical text: one statement per line."""
    return "\n".join(stmt.render() for stmt in prog.statements)


_TOKEN_RE = re.compile(
    r"""
    (?P<WRITE_HEAD>Pump(?P<pump>[1-9][0-9]*)\s*\.\s*write)
  | (?P<SETVOL_HEAD>setVolume)
  | (?P<LPAREN>\()
  | (?P<RPAREN>\))
  | (?P<SEMI>;)
  | (?P<NUMBER>[0-9]+(?:\.[0-9]+)?)
    """,
    re.VERBOSE,
)


def _line_col(text: str, pos: int) -> tuple[int, int]:
    line = text.count("\n", 0, pos) + 1
    col = pos - (text.rfind("\n", 0, pos) + 1) + 1
    return line, col


class _Tokens:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def _skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def at_end(self) -> bool:
        self._skip_ws()
        return self.pos >= len(self.text)

    def error(self, message: str):
        line, col = _line_col(self.text, self.pos)
        raise ProgramSyntaxError(message, line=line, column=col)

    def take(self, kind: str) -> re.Match:
        self._skip_ws()
        m = _TOKEN_RE.match(self.text, self.pos)
        if m is None or m.group(kind) is None:
            self.error(f"expected {kind}")
        self.pos = m.end()
        return m

    def peek_kind(self) -> str | None:
        self._skip_ws()
        m = _TOKEN_RE.match(self.text, self.pos)
        if m is None:
            return None
        for name in ("WRITE_HEAD", "SETVOL_HEAD", "LPAREN", "RPAREN", "SEMI", "NUMBER"):
            if m.group(name) is not None:
                return name
        return None


def parse_program(text: str) -> PumpProgram:
    """Parse canonical (or loosely spaced) program text back into an AST."""
    if not text or text.isspace():
        raise ProgramSyntaxError("empty program", line=1, column=1)
    toks = _Tokens(text)
    statements: list[Statement] = []
    saw_setvol = False
    while not toks.at_end():
        kind = toks.peek_kind()
        if kind == "WRITE_HEAD":
            m = toks.take("WRITE_HEAD")
            pump = int(m.group("pump"))
            toks.take("LPAREN")
            num = toks.take("NUMBER")
            toks.take("RPAREN")
            toks.take("SEMI")
            statements.append(WriteStmt(pump_index=pump, setpoint=float(num.group())))
        elif kind == "SETVOL_HEAD":
            toks.take("SETVOL_HEAD")
            toks.take("LPAREN")
            num = toks.take("NUMBER")
            toks.take("RPAREN")
            toks.take("SEMI")
            if saw_setvol:
                raise DuplicateSetVolume("more than one setVolume statement")
            saw_setvol = True
            statements.append(SetVolumeStmt(volume_ml=float(num.group())))
        else:
            toks.error("expected a Pump write or setVolume statement")
    return PumpProgram(statements=tuple(statements))


def check_program(
    prog: PumpProgram,
    limits: DeviceLimits,
    state,
    models: Sequence[PumpModel],
) -> CheckReport:
    """Static safety check; collects every violation instead of failing fast.

    ``state`` supplies the live baseline: ``state.setpoints`` (volts, applied
    before the program's own writes) and ``state.reservoirs`` (ml remaining).
    """
    violations: list[Violation] = []
    setpoints = list(state.setpoints)
    setvol_indices: list[int] = []
    volume: float | None = None

    for idx, stmt in enumerate(prog.statements):
        if isinstance(stmt, WriteStmt):
            if stmt.pump_index > limits.pump_count:
                violations.append(
                    Violation(
                        "NO_SUCH_PUMP",
                        f"pump {stmt.pump_index} on a {limits.pump_count}-pump device",
                        idx,
                    )
                )
                continue
            if stmt.setpoint > limits.v_max:
                violations.append(
                    Violation(
                        "SETPOINT_OVER_LIMIT",
                        f"setpoint {stmt.setpoint} V above limit {limits.v_max} V",
                        idx,
                    )
                )
                continue
            setpoints[stmt.pump_index - 1] = stmt.setpoint
        else:
            setvol_indices.append(idx)
            volume = stmt.volume_ml

    if not setvol_indices:
        violations.append(
            Violation("MISSING_SET_VOLUME", "program never dispenses", -1)
        )
    elif len(setvol_indices) > 1:
        for idx in setvol_indices[1:]:
            violations.append(
                Violation("DUPLICATE_SET_VOLUME", "only one setVolume allowed", idx)
            )

    if volume is not None and not 0 < volume <= limits.max_volume_ml:
        violations.append(
            Violation(
                "VOLUME_OUT_OF_RANGE",
                f"volume {volume} ml outside (0, {limits.max_volume_ml}]",
                setvol_indices[0],
            )
        )

    flows = [
        flow_rate(model, min(sp, model.v_max))
        for model, sp in zip(models, setpoints)
    ]
    total_flow = sum(flows)
    if setvol_indices and total_flow <= 0:
        violations.append(
            Violation(
                "NO_FLOW",
                "every setpoint is at or below its pump's onset voltage",
                setvol_indices[0],
            )
        )

    if volume is not None and 0 < volume <= limits.max_volume_ml and total_flow > 0:
        for i, q in enumerate(flows):
            needed = q / total_flow * volume
            if needed > state.reservoirs[i]:
                violations.append(
                    Violation(
                        "RESERVOIR_LOW",
                        f"pump {i + 1} needs {needed:.3f} ml, "
                        f"reservoir holds {state.reservoirs[i]:.3f} ml",
                        setvol_indices[0],
                    )
                )

    return CheckReport(ok=not violations, violations=tuple(violations))
