"""Application configuration: one INI-style file shared by CLI and service.

Sections:

    [mix]     pump_count, ink_strength, reference_flow, grid_coarse, grid_fine
    [limits]  v_max, max_volume_ml, reservoir_ml (comma-separated, per pump)
    [run]     match_threshold, default_volume_ml, noise_on, history_path, seed
    [pump.N]  k, v0, v_max, noise_sigma          (N = 1..pump_count)

Every key has a default, so an empty or missing file yields a working
3-pump device. Calibration writes fitted pump sections back here.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

from .planner import MixConfig
from .pumpcode import DeviceLimits
from .pumps import PumpModel

__all__ = ["AppConfig", "load_config", "save_config"]

DEFAULT_MATCH_THRESHOLD = 0.1
DEFAULT_VOLUME_ML = 5.0
DEFAULT_HISTORY_PATH = "chromactl-history.jsonl"


@dataclass
class AppConfig:
    mix: MixConfig = field(default_factory=MixConfig)
    limits: DeviceLimits = field(default_factory=DeviceLimits)
    pump_models: list[PumpModel] = field(
        default_factory=lambda: [PumpModel(), PumpModel(), PumpModel()]
    )
    match_threshold: float = DEFAULT_MATCH_THRESHOLD
    default_volume_ml: float = DEFAULT_VOLUME_ML
    noise_on: bool = True
    history_path: str = DEFAULT_HISTORY_PATH
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.match_threshold < 3**0.5:
            raise ValueError("match_threshold must lie in (0, sqrt(3))")
        if len(self.pump_models) != self.mix.pump_count:
            raise ValueError("one pump model per pump required")
        if self.limits.pump_count != self.mix.pump_count:
            raise ValueError("limits and mix config disagree on pump count")


def load_config(path: str | Path | None) -> AppConfig:
    """Read configuration; missing file or keys fall back to defaults."""
    parser = configparser.ConfigParser()
    if path is not None and Path(path).exists():
        parser.read(path)

    def get(section, key, cast, default):
        if parser.has_option(section, key):
            raw = parser.get(section, key)
            if cast is bool:
                return raw.strip().lower() in ("1", "true", "yes", "on")
            return cast(raw)
        return default

    pump_count = get("mix", "pump_count", int, 3)
    mix = MixConfig(
        pump_count=pump_count,
        ink_strength=get("mix", "ink_strength", float, 3.0),
        reference_flow=get("mix", "reference_flow", float, 0.2),
        grid_coarse=get("mix", "grid_coarse", int, 50),
        grid_fine=get("mix", "grid_fine", int, 500),
    )

    if parser.has_option("limits", "reservoir_ml"):
        reservoirs = tuple(
            float(v) for v in parser.get("limits", "reservoir_ml").split(",")
        )
    else:
        reservoirs = (100.0,) * pump_count
    limits = DeviceLimits(
        pump_count=pump_count,
        v_max=get("limits", "v_max", float, 300.0),
        reservoir_ml=reservoirs,
        max_volume_ml=get("limits", "max_volume_ml", float, 100.0),
    )

    models = []
    for i in range(1, pump_count + 1):
        section = f"pump.{i}"
        models.append(
            PumpModel(
                k=get(section, "k", float, 1e-4),
                v0=get(section, "v0", float, 100.0),
                v_max=get(section, "v_max", float, limits.v_max),
                noise_sigma=get(section, "noise_sigma", float, 0.02),
            )
        )

    return AppConfig(
        mix=mix,
        limits=limits,
        pump_models=models,
        match_threshold=get("run", "match_threshold", float, DEFAULT_MATCH_THRESHOLD),
        default_volume_ml=get("run", "default_volume_ml", float, DEFAULT_VOLUME_ML),
        noise_on=get("run", "noise_on", bool, True),
        history_path=get("run", "history_path", str, DEFAULT_HISTORY_PATH),
        seed=get("run", "seed", int, 0),
    )


def save_config(cfg: AppConfig, path: str | Path) -> None:
    parser = configparser.ConfigParser()
    parser["mix"] = {
        "pump_count": str(cfg.mix.pump_count),
        "ink_strength": repr(cfg.mix.ink_strength),
        "reference_flow": repr(cfg.mix.reference_flow),
        "grid_coarse": str(cfg.mix.grid_coarse),
        "grid_fine": str(cfg.mix.grid_fine),
    }
    parser["limits"] = {
        "v_max": repr(cfg.limits.v_max),
        "max_volume_ml": repr(cfg.limits.max_volume_ml),
        "reservoir_ml": ",".join(repr(r) for r in cfg.limits.reservoir_ml),
    }
    parser["run"] = {
        "match_threshold": repr(cfg.match_threshold),
        "default_volume_ml": repr(cfg.default_volume_ml),
        "noise_on": "true" if cfg.noise_on else "false",
        "history_path": cfg.history_path,
        "seed": str(cfg.seed),
    }
    for i, model in enumerate(cfg.pump_models, start=1):
        parser[f"pump.{i}"] = {
            "k": repr(model.k),
            "v0": repr(model.v0),
            "v_max": repr(model.v_max),
            "noise_sigma": repr(model.noise_sigma),
        }
    with open(path, "w", encoding="utf-8") as fh:
        parser.write(fh)
