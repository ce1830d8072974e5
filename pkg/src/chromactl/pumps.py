"""Per-pump flow model: quadratic-above-onset EHD flow law and its inverse.

Flow is zero at or below the onset voltage and grows as the square of the
overdrive: ``Q = k * max(0, V - V0)**2``. The law is smooth, monotone, and
invertible in closed form, which keeps calibration a linear regression.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import FlowOutOfRange, SetpointOutOfRange

__all__ = ["PumpModel", "flow_rate", "max_flow", "setpoint_for_flow", "DEFAULT_PUMP_MODEL"]


@dataclass(frozen=True)
class PumpModel:
    """Calibration parameters of one pump."""

    k: float = 1e-4  # gain, ml/s/V^2
    v0: float = 100.0  # onset voltage, V
    v_max: float = 300.0
    noise_sigma: float = 0.02  # relative flow noise std-dev per run

    def __post_init__(self):
        if not self.k > 0:
            raise ValueError(f"gain must be positive, got {self.k}")
        if not 0 <= self.v0 < self.v_max:
            raise ValueError(f"need 0 <= v0 < v_max, got v0={self.v0}, v_max={self.v_max}")


DEFAULT_PUMP_MODEL = PumpModel()


def flow_rate(model: PumpModel, setpoint: float) -> float:
    """Flow in ml/s at a voltage setpoint; zero at or below onset."""
    if not 0 <= setpoint <= model.v_max:
        raise SetpointOutOfRange(
            f"setpoint {setpoint} outside [0, {model.v_max}]"
        )
    overdrive = setpoint - model.v0
    return model.k * overdrive * overdrive if overdrive > 0 else 0.0


def max_flow(model: PumpModel) -> float:
    """Flow at full drive voltage."""
    return model.k * (model.v_max - model.v0) ** 2


def setpoint_for_flow(model: PumpModel, q: float) -> float:
    """Inverse of :func:`flow_rate`; q = 0 maps to 0 V (pump idle)."""
    if q < 0 or q > max_flow(model) * (1 + 1e-12):
        raise FlowOutOfRange(
            f"flow {q} ml/s outside [0, {max_flow(model)}] for this pump"
        )
    if q == 0:
        return 0.0
    return min(model.v_max, model.v0 + math.sqrt(q / model.k))
