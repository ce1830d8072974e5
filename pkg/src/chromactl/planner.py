"""Mix planning: from a target color to per-pump fractions, flows, and timing.

The forward mixing model is clipped-linear subtractive: a pump running a
fraction ``f`` of the batch contributes ink density ``min(1, s * f)`` on its
channel, and the mixed color is the complement of the densities. Pumps 1-3
carry cyan, magenta, and yellow ink; an optional pump 4 is a clear diluent
that contributes no density.

Planning inverts this model. In the diluent regime the inverse is exact and
closed-form; otherwise a coarse simplex grid search with local refinement
finds the nearest achievable color, with a deterministic lexicographic
tie-break. Out-of-gamut targets are never an error: the plan carries the
nearest achievable color and the residual distance.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .colors import Color, color_distance, rgb_to_density
from .errors import InfeasibleFlow, SimplexViolation, ZeroTarget
from .pumps import PumpModel, max_flow, setpoint_for_flow
from .request import NormalizedRequest

__all__ = ["MixConfig", "MixPlan", "mix_forward", "project_to_simplex", "plan_mix"]

_INK_CHANNELS = 3
_CLIP_EPS = 1e-12


@dataclass(frozen=True)
class MixConfig:
    """Planner configuration; defaults match the 3-pump CMY device."""

    pump_count: int = 3  # 3 inks, or 4 with a clear diluent pump
    ink_strength: float = 3.0  # density per unit fraction before clipping
    reference_flow: float = 0.2  # ml/s for the largest-fraction pump
    grid_coarse: int = 50
    grid_fine: int = 500

    def __post_init__(self):
        if self.pump_count not in (3, 4):
            raise ValueError(f"pump_count must be 3 or 4, got {self.pump_count}")
        if not self.ink_strength > 0:
            raise ValueError("ink_strength must be positive")
        if not self.reference_flow > 0:
            raise ValueError("reference_flow must be positive")
        if self.grid_fine % self.grid_coarse != 0:
            raise ValueError("grid_fine must be a multiple of grid_coarse")

    @property
    def has_diluent(self) -> bool:
        return self.pump_count == 4


@dataclass(frozen=True)
class MixPlan:
    """Everything the code generator and simulator need for one batch."""

    fractions: tuple[float, ...]
    volumes_ml: tuple[float, ...]
    setpoints: tuple[float, ...]
    flows: tuple[float, ...]
    duration_s: float
    predicted: Color
    residual: float


def _fractions_to_color(f: np.ndarray, strength: float) -> np.ndarray:
    """Vectorized forward model; f has shape (..., pump_count)."""
    density = np.minimum(1.0, strength * f[..., :_INK_CHANNELS])
    return 1.0 - density


def mix_forward(fractions, cfg: MixConfig) -> Color:
    """Color produced by running the pumps at the given batch fractions."""
    f = np.asarray(fractions, dtype=float)
    if f.shape != (cfg.pump_count,):
        raise SimplexViolation(
            f"expected {cfg.pump_count} fractions, got shape {f.shape}"
        )
    if np.any(f < -1e-12) or abs(float(f.sum()) - 1.0) > 1e-9:
        raise SimplexViolation(f"fractions not on the simplex: {fractions}")
    rgb = _fractions_to_color(f, cfg.ink_strength)
    return Color(float(rgb[0]), float(rgb[1]), float(rgb[2]))


def project_to_simplex(u) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-and-threshold)."""
    v = np.asarray(u, dtype=float)
    if not np.all(np.isfinite(v)):
        raise ValueError(f"non-finite input {u}")
    n = v.size
    sorted_desc = np.sort(v)[::-1]
    cumsum = np.cumsum(sorted_desc) - 1.0
    rho = np.nonzero(sorted_desc * np.arange(1, n + 1) > cumsum)[0][-1]
    theta = cumsum[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


@lru_cache(maxsize=8)
def _simplex_lattice(n_parts: int, resolution: int) -> np.ndarray:
    """All fraction vectors with components in multiples of 1/resolution,
    in lexicographically ascending order (so argmin picks the lex-smallest
    among ties)."""
    counts = []
    if n_parts == 3:
        for i in range(resolution + 1):
            for j in range(resolution + 1 - i):
                counts.append((i, j, resolution - i - j))
    elif n_parts == 4:
        for i in range(resolution + 1):
            for j in range(resolution + 1 - i):
                for k in range(resolution + 1 - i - j):
                    counts.append((i, j, k, resolution - i - j - k))
    else:
        raise ValueError(f"unsupported pump count {n_parts}")
    return np.asarray(counts, dtype=float) / resolution


def _window_lattice(
    center: np.ndarray, n_parts: int, fine: int, halfwidth: int
) -> np.ndarray:
    """Fine-lattice points within +-halfwidth fine steps of center, lex order."""
    center_counts = np.rint(center * fine).astype(int)
    lows = np.maximum(center_counts - halfwidth, 0)
    highs = np.minimum(center_counts + halfwidth, fine)
    points = []
    if n_parts == 3:
        for i in range(lows[0], highs[0] + 1):
            for j in range(lows[1], highs[1] + 1):
                k = fine - i - j
                if lows[2] <= k <= highs[2]:
                    points.append((i, j, k))
    else:
        for i in range(lows[0], highs[0] + 1):
            for j in range(lows[1], highs[1] + 1):
                for k in range(lows[2], highs[2] + 1):
                    l = fine - i - j - k
                    if lows[3] <= l <= highs[3]:
                        points.append((i, j, k, l))
    if not points:
        return center.reshape(1, -1)
    return np.asarray(points, dtype=float) / fine


def _grid_best(
    candidates: np.ndarray, target_rgb: np.ndarray, strength: float
) -> tuple[np.ndarray, float]:
    rgb = _fractions_to_color(candidates, strength)
    dist2 = np.einsum("ij,ij->i", rgb - target_rgb, rgb - target_rgb)
    idx = int(np.argmin(dist2))  # first occurrence = lex-smallest tie
    return candidates[idx], float(dist2[idx])


def _exact_candidates(density: np.ndarray, cfg: MixConfig) -> list[np.ndarray]:
    """Closed-form fraction vectors on the clipped faces of the gamut.

    For each choice of channels driven to full density, the unclipped
    channels get exactly d/s and the leftover simplex mass is split over
    the clipped ones. When the target is in gamut one of these candidates
    (or the diluent solution) hits it exactly; otherwise they refine the
    grid search on the gamut boundary."""
    s = cfg.ink_strength
    out = []
    if cfg.has_diluent and float(density.sum()) / s <= 1.0 + _CLIP_EPS:
        f_ink = density / s
        f = np.append(f_ink, max(0.0, 1.0 - float(f_ink.sum())))
        out.append(project_to_simplex(f))
        return out
    for mask in range(1, 2**_INK_CHANNELS):
        clipped = np.array([(mask >> ch) & 1 == 1 for ch in range(_INK_CHANNELS)])
        f = np.zeros(cfg.pump_count)
        f[:_INK_CHANNELS][~clipped] = density[~clipped] / s
        leftover = 1.0 - float(f.sum())
        if leftover >= 0.0:
            f[:_INK_CHANNELS][clipped] = leftover / int(clipped.sum())
            out.append(f)
    return out


def _search_fractions(target: Color, cfg: MixConfig) -> np.ndarray:
    target_rgb = np.asarray(target.as_tuple())
    density = 1.0 - target_rgb

    coarse = _simplex_lattice(cfg.pump_count, cfg.grid_coarse)
    best_f, best_d2 = _grid_best(coarse, target_rgb, cfg.ink_strength)

    halfwidth = cfg.grid_fine // cfg.grid_coarse
    window = _window_lattice(best_f, cfg.pump_count, cfg.grid_fine, halfwidth)
    best_f, best_d2 = _grid_best(window, target_rgb, cfg.ink_strength)

    for cand in _exact_candidates(density, cfg):
        rgb = _fractions_to_color(cand, cfg.ink_strength)
        d2 = float(np.sum((rgb - target_rgb) ** 2))
        if d2 < best_d2 or (d2 == best_d2 and tuple(cand) < tuple(best_f)):
            best_f, best_d2 = cand, d2
    return best_f


def plan_mix(
    req: NormalizedRequest, cfg: MixConfig, models: list[PumpModel]
) -> MixPlan:
    """Plan fractions, flows, setpoints, and duration for one request.

    The largest-fraction pump runs at the configured reference flow; the
    rest scale down to preserve the fraction ratios exactly.
    """
    if len(models) != cfg.pump_count:
        raise ValueError(f"need {cfg.pump_count} pump models, got {len(models)}")

    target = req.target
    density = np.asarray(rgb_to_density(target).as_tuple())
    if cfg.has_diluent and float(density.sum()) / cfg.ink_strength <= 1.0:
        exact = _exact_candidates(density, cfg)[0]
        fractions = exact
    else:
        fractions = _search_fractions(target, cfg)

    f_max = float(fractions.max())
    if f_max <= 0:
        raise ZeroTarget("all pump fractions are zero")  # unreachable on the simplex

    flows = np.where(fractions > 0, fractions / f_max * cfg.reference_flow, 0.0)
    for i, (model, q) in enumerate(zip(models, flows)):
        if q > max_flow(model):
            raise InfeasibleFlow(
                f"pump {i + 1} needs {q:.4f} ml/s, above its maximum {max_flow(model):.4f}"
            )
    setpoints = [setpoint_for_flow(model, float(q)) for model, q in zip(models, flows)]

    total_flow = float(flows.sum())
    duration = req.volume_ml / total_flow
    volumes = fractions * req.volume_ml
    predicted = mix_forward(fractions, cfg)

    return MixPlan(
        fractions=tuple(float(x) for x in fractions),
        volumes_ml=tuple(float(x) for x in volumes),
        setpoints=tuple(setpoints),
        flows=tuple(float(x) for x in flows),
        duration_s=duration,
        predicted=predicted,
        residual=color_distance(predicted, target),
    )
