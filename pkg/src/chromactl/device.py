"""Virtual EHD dispensing device.

Executes checked pump programs against the flow model, keeps reservoir
accounting exact, and speaks a line-based ASCII wire protocol:

    SET <pump:int> <volts:decimal>   -> OK | ERR <code>
    DISPENSE <ml:decimal>            -> DONE <secs> <v1> <v2> ... | ERR <code>
    STATE                            -> STATE <busy:0|1> <res1> <res2> ...
    RESET                            -> OK

Dispensing integrates constant per-pump flows with a fixed 10 ms Euler step;
because flows are constant within a run, the step count (and therefore every
volume) has a closed form, which the implementation uses directly. Noise, when
enabled, is one multiplicative Gaussian factor per pump per run, drawn from
the device seed, so identical seeds reproduce bit-identical results.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field

import numpy as np

from .colors import Color
from .errors import DeviceBusy, UncheckedProgram
from .planner import MixConfig, mix_forward
from .pumpcode import (
    CheckReport,
    DeviceLimits,
    PumpProgram,
    SetVolumeStmt,
    WriteStmt,
    check_program,
)
from .pumps import PumpModel, flow_rate

__all__ = [
    "TIME_STEP_S",
    "DeviceState",
    "DispenseResult",
    "execute_program",
    "handle_command",
    "SimulatedDevice",
]

TIME_STEP_S = 0.01
NO_FLOW_TIMEOUT_S = 60.0


@dataclass
class DeviceState:
    setpoints: list[float]
    reservoirs: list[float]
    dispensed: list[float]
    busy: bool = False
    seed: int = 0
    elapsed_s: float = 0.0

    @classmethod
    def fresh(cls, limits: DeviceLimits, seed: int = 0) -> "DeviceState":
        n = limits.pump_count
        return cls(
            setpoints=[0.0] * n,
            reservoirs=list(limits.reservoir_ml),
            dispensed=[0.0] * n,
            seed=seed,
        )


@dataclass(frozen=True)
class DispenseResult:
    volumes_ml: tuple[float, ...]
    total_ml: float
    duration_s: float
    mixed: Color
    faults: tuple[str, ...] = ()


def _realized_color(volumes: np.ndarray, total: float, cfg: MixConfig) -> Color:
    if total <= 0:
        return Color(1.0, 1.0, 1.0)  # nothing dispensed: empty (white) batch
    fractions = volumes / total
    fractions = fractions / fractions.sum()
    return mix_forward(fractions, cfg)


def execute_program(
    prog: PumpProgram,
    state: DeviceState,
    models: list[PumpModel],
    mix_cfg: MixConfig,
    limits: DeviceLimits,
    noise_on: bool = True,
    force: bool = False,
) -> DispenseResult:
    """Run a program: apply writes in order, then integrate the dispense.

    Unless ``force`` is set, the program must pass the static checker first;
    forced runs of unsafe programs abort with the matching runtime fault.
    """
    if not force:
        report = check_program(prog, limits, state, models)
        if not report.ok:
            codes = ", ".join(v.code for v in report.violations)
            raise UncheckedProgram(f"program failed safety checks: {codes}")

    n = len(models)
    volume_target: float | None = None

    for stmt in prog.statements:
        if isinstance(stmt, WriteStmt):
            if stmt.pump_index > n:
                return _faulted(["NO_SUCH_PUMP"], n)
            if stmt.setpoint > models[stmt.pump_index - 1].v_max:
                return _faulted(["SETPOINT_OVER_LIMIT"], n)
            state.setpoints[stmt.pump_index - 1] = stmt.setpoint
        else:
            volume_target = stmt.volume_ml

    if volume_target is None:
        return _faulted([], n)  # writes applied, nothing dispensed

    try:
        state.busy = True
        return _dispense(state, models, mix_cfg, volume_target, noise_on)
    finally:
        state.busy = False


def _dispense(
    state: DeviceState,
    models: list[PumpModel],
    mix_cfg: MixConfig,
    volume_target: float,
    noise_on: bool,
) -> DispenseResult:
    n = len(models)
    faults: list[str] = []
    flows = np.array(
        [flow_rate(m, sp) for m, sp in zip(models, state.setpoints)]
    )
    if noise_on:
        rng = np.random.default_rng(state.seed)
        sigmas = np.array([m.noise_sigma for m in models])
        flows = flows * np.maximum(0.0, rng.normal(1.0, sigmas))

    total_flow = float(flows.sum())
    if total_flow <= 0:
        state.dispensed = [0.0] * n
        return DispenseResult(
            volumes_ml=(0.0,) * n,
            total_ml=0.0,
            duration_s=NO_FLOW_TIMEOUT_S,
            mixed=Color(1.0, 1.0, 1.0),
            faults=("NO_FLOW",),
        )

    # First step where the cumulative total reaches the target. Flows are
    # constant, so the Euler integration collapses to a step count.
    n_stop = max(1, math.ceil(volume_target / (total_flow * TIME_STEP_S) - 1e-9))

    # First step at which any running pump would overdraw its reservoir.
    n_abort = None
    for q, res in zip(flows, state.reservoirs):
        if q > 0:
            pump_limit = math.floor(res / (q * TIME_STEP_S) + 1e-9) + 1
            if n_abort is None or pump_limit < n_abort:
                n_abort = pump_limit

    if n_abort is not None and n_abort <= n_stop:
        steps = n_abort - 1
        faults.append("RESERVOIR_EMPTY")
    else:
        steps = n_stop

    duration = steps * TIME_STEP_S
    volumes = flows * duration
    total = float(volumes.sum())

    state.reservoirs = [
        res - v for res, v in zip(state.reservoirs, volumes.tolist())
    ]
    state.dispensed = volumes.tolist()
    state.elapsed_s += duration

    return DispenseResult(
        volumes_ml=tuple(volumes.tolist()),
        total_ml=total,
        duration_s=duration,
        mixed=_realized_color(volumes, total, mix_cfg),
        faults=tuple(faults),
    )


def _faulted(codes: list[str], pump_count: int) -> DispenseResult:
    return DispenseResult(
        volumes_ml=(0.0,) * pump_count,
        total_ml=0.0,
        duration_s=0.0,
        mixed=Color(1.0, 1.0, 1.0),
        faults=tuple(codes),
    )


def _fmt_volumes(volumes) -> str:
    return " ".join(f"{v:.3f}" for v in volumes)


def handle_command(
    line: str,
    state: DeviceState,
    models: list[PumpModel],
    limits: DeviceLimits,
    mix_cfg: MixConfig,
    noise_on: bool = True,
) -> str:
    """Process one protocol line; replies never raise across the wire."""
    parts = line.strip().split()
    if not parts:
        return "ERR BAD_COMMAND"
    cmd = parts[0]

    if cmd == "SET":
        if len(parts) != 3:
            return "ERR BAD_COMMAND"
        try:
            pump = int(parts[1])
            volts = float(parts[2])
        except ValueError:
            return "ERR BAD_COMMAND"
        if pump < 1 or pump > limits.pump_count:
            return "ERR NO_SUCH_PUMP"
        if volts < 0 or not math.isfinite(volts):
            return "ERR BAD_COMMAND"
        if volts > limits.v_max:
            return "ERR SETPOINT_OVER_LIMIT"
        state.setpoints[pump - 1] = volts
        return "OK"

    if cmd == "DISPENSE":
        if len(parts) != 2:
            return "ERR BAD_COMMAND"
        try:
            volume = float(parts[1])
        except ValueError:
            return "ERR BAD_COMMAND"
        if not 0 < volume <= limits.max_volume_ml:
            return "ERR BAD_COMMAND"
        prog = PumpProgram(statements=(SetVolumeStmt(volume_ml=volume),))
        report = check_program(prog, limits, state, models)
        if not report.ok:
            code = report.violations[0].code
            if code == "RESERVOIR_LOW":
                code = "RESERVOIR_EMPTY"
            return f"ERR {code}"
        result = execute_program(
            prog, state, models, mix_cfg, limits, noise_on=noise_on, force=True
        )
        if result.faults:
            return f"ERR {result.faults[0]}"
        return f"DONE {result.duration_s:g} {_fmt_volumes(result.volumes_ml)}"

    if cmd == "STATE":
        busy = 1 if state.busy else 0
        return f"STATE {busy} {_fmt_volumes(state.reservoirs)}"

    if cmd == "RESET":
        state.setpoints = [0.0] * limits.pump_count
        state.dispensed = [0.0] * limits.pump_count
        return "OK"

    return "ERR BAD_COMMAND"


class SimulatedDevice:
    """One logical owner of mutable device state; commands serialize
    through a lock, concurrent submitters get DeviceBusy / ERR BUSY."""

    def __init__(
        self,
        models: list[PumpModel],
        limits: DeviceLimits,
        mix_cfg: MixConfig,
        noise_on: bool = True,
        seed: int = 0,
    ):
        if len(models) != limits.pump_count:
            raise ValueError("one model per pump required")
        self.models = models
        self.limits = limits
        self.mix_cfg = mix_cfg
        self.noise_on = noise_on
        self.state = DeviceState.fresh(limits, seed=seed)
        self._lock = threading.Lock()

    def command(self, line: str) -> str:
        if not self._lock.acquire(blocking=False):
            return "ERR BUSY"
        try:
            return handle_command(
                line, self.state, self.models, self.limits, self.mix_cfg, self.noise_on
            )
        finally:
            self._lock.release()

    def execute(self, prog: PumpProgram, force: bool = False) -> DispenseResult:
        if not self._lock.acquire(blocking=False):
            raise DeviceBusy("device is executing another command")
        try:
            self.state.busy = True
            return execute_program(
                prog,
                self.state,
                self.models,
                self.mix_cfg,
                self.limits,
                noise_on=self.noise_on,
                force=force,
            )
        finally:
            self.state.busy = False
            self._lock.release()

    def check(self, prog: PumpProgram) -> CheckReport:
        return check_program(prog, self.limits, self.state, self.models)

    def run_timed(self, duration_s: float) -> tuple[float, ...]:
        """Run all pumps at their setpoints for a fixed time; used by
        calibration sweeps. Returns per-pump dispensed volumes."""
        if duration_s <= 0:
            raise ValueError("duration must be positive")
        if not self._lock.acquire(blocking=False):
            raise DeviceBusy("device is executing another command")
        try:
            self.state.busy = True
            flows = np.array(
                [flow_rate(m, sp) for m, sp in zip(self.models, self.state.setpoints)]
            )
            if self.noise_on:
                rng = np.random.default_rng(self.state.seed)
                sigmas = np.array([m.noise_sigma for m in self.models])
                flows = flows * np.maximum(0.0, rng.normal(1.0, sigmas))
            steps = max(1, round(duration_s / TIME_STEP_S))
            volumes = flows * (steps * TIME_STEP_S)
            self.state.reservoirs = [
                res - v for res, v in zip(self.state.reservoirs, volumes.tolist())
            ]
            self.state.dispensed = volumes.tolist()
            self.state.elapsed_s += steps * TIME_STEP_S
            return tuple(volumes.tolist())
        finally:
            self.state.busy = False
            self._lock.release()

    def reset(self) -> None:
        self.command("RESET")

    def refill(self) -> None:
        """Top reservoirs back up to capacity (operator swaps cartridges)."""
        self.state.reservoirs = list(self.limits.reservoir_ml)
