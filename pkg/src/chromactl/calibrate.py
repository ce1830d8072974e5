"""Pump calibration: voltage sweeps and closed-form model fitting.

The flow law Q = k*(V - V0)^2 linearizes as sqrt(Q) = a*V + b with
k = a^2 and V0 = -b/a, so an ordinary least-squares fit on the positive-flow
samples recovers the parameters exactly from noiseless sweeps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .device import SimulatedDevice
from .errors import DegenerateFit, InsufficientData, ReservoirLow
from .pumps import PumpModel

__all__ = ["SweepSample", "FitResult", "default_sweep_setpoints", "run_sweep", "fit_model"]

SWEEP_DWELL_S = 2.0
SWEEP_POINTS = 8


@dataclass(frozen=True)
class SweepSample:
    setpoint: float
    measured_flow: float  # ml/s

    def __post_init__(self):
        if self.measured_flow < 0:
            raise ValueError("measured flow cannot be negative")


@dataclass(frozen=True)
class FitResult:
    model: PumpModel
    rms_residual: float  # ml/s
    samples_used: int


def default_sweep_setpoints(v_max: float, points: int = SWEEP_POINTS) -> list[float]:
    """Evenly spaced sweep in [v_max/3, 0.95*v_max], above typical onsets."""
    return list(np.linspace(v_max / 3.0, 0.95 * v_max, points))


def run_sweep(
    pump: int,
    setpoints: list[float],
    device: SimulatedDevice,
    dwell_s: float = SWEEP_DWELL_S,
) -> list[SweepSample]:
    """Dispense from one pump at each setpoint for a fixed dwell time and
    record volume/time as the measured flow. Leaves the device reset."""
    v_max = device.limits.v_max
    if any(not 0 <= sp <= v_max for sp in setpoints):
        raise ValueError(f"sweep setpoints must lie in [0, {v_max}]")
    model = device.models[pump - 1]
    worst_case = sum(model.k * (sp - model.v0) ** 2 * dwell_s for sp in setpoints)
    if worst_case > device.state.reservoirs[pump - 1]:
        raise ReservoirLow(
            f"sweep would need up to {worst_case:.1f} ml from pump {pump}"
        )

    samples = []
    base_seed = device.state.seed
    try:
        for i, sp in enumerate(setpoints):
            # independent noise draw per sweep point, still seed-deterministic
            device.state.seed = (base_seed * 1000003 + pump * 1009 + i) % (2**63)
            reply = device.command("RESET")
            assert reply == "OK", reply
            reply = device.command(f"SET {pump} {sp}")
            assert reply == "OK", reply
            volumes = device.run_timed(dwell_s)
            samples.append(
                SweepSample(setpoint=sp, measured_flow=volumes[pump - 1] / dwell_s)
            )
    finally:
        device.state.seed = base_seed
        device.command("RESET")
    return samples


def fit_model(
    samples: list[SweepSample],
    v_max: float = 300.0,
    noise_sigma: float = 0.02,
) -> FitResult:
    """Least squares of sqrt(Q) on V over the positive-flow samples.

    Below-onset samples carry no slope information and would bias the
    linearization, so they are excluded.
    """
    positive = [s for s in samples if s.measured_flow > 0]
    if len(positive) < 2:
        raise InsufficientData(
            f"need at least 2 positive-flow samples, got {len(positive)}"
        )
    volts = np.array([s.setpoint for s in positive])
    roots = np.sqrt(np.array([s.measured_flow for s in positive]))
    slope, intercept = np.polyfit(volts, roots, 1)
    if slope <= 0:
        raise DegenerateFit(f"non-increasing sweep (slope {slope:.3e})")

    k = float(slope) ** 2
    v0 = float(np.clip(-intercept / slope, 0.0, np.nextafter(v_max, 0.0)))
    model = PumpModel(k=k, v0=v0, v_max=v_max, noise_sigma=noise_sigma)

    predicted = k * np.maximum(0.0, volts - v0) ** 2
    measured = np.array([s.measured_flow for s in positive])
    rms = float(np.sqrt(np.mean((predicted - measured) ** 2)))
    return FitResult(model=model, rms_residual=rms, samples_used=len(positive))
