"""Pipeline glue: requests in, dispensed colors and run records out.

Holds the simulated device, routes every mutation through it, persists an
append-only run history, and provides the two evaluation harnesses (color
chart match rate, repeat-reliability) used by the acceptance suite.
"""

from __future__ import annotations

import dataclasses
import itertools
import json
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .colors import Color, Modifier, color_distance
from .config import AppConfig
from .device import DispenseResult, SimulatedDevice
from .errors import ChromactlError
from .planner import MixPlan
from .pumpcode import render_program
from .translate import LlmBackend, RuleBasedBackend, Translation

__all__ = ["RunRecord", "Orchestrator", "build_chart"]

CHART_SEED = 12345
CHART_SIZE = 90


@dataclass(frozen=True)
class RunRecord:
    id: int
    timestamp: float
    request_text: str
    target: Color
    plan: MixPlan
    program_text: str
    result: DispenseResult
    achieved: Color
    matched: bool
    provenance: str
    translation_latency_s: float
    seed: int

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "timestamp": self.timestamp,
            "request_text": self.request_text,
            "target": list(self.target.as_tuple()),
            "plan": {
                "fractions": list(self.plan.fractions),
                "volumes_ml": list(self.plan.volumes_ml),
                "setpoints": list(self.plan.setpoints),
                "flows": list(self.plan.flows),
                "duration_s": self.plan.duration_s,
                "predicted": list(self.plan.predicted.as_tuple()),
                "residual": self.plan.residual,
            },
            "program_text": self.program_text,
            "result": {
                "volumes_ml": list(self.result.volumes_ml),
                "total_ml": self.result.total_ml,
                "duration_s": self.result.duration_s,
                "mixed": list(self.result.mixed.as_tuple()),
                "faults": list(self.result.faults),
            },
            "achieved": list(self.achieved.as_tuple()),
            "matched": self.matched,
            "provenance": self.provenance,
            "translation_latency_s": self.translation_latency_s,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunRecord":
        plan = MixPlan(
            fractions=tuple(d["plan"]["fractions"]),
            volumes_ml=tuple(d["plan"]["volumes_ml"]),
            setpoints=tuple(d["plan"]["setpoints"]),
            flows=tuple(d["plan"]["flows"]),
            duration_s=d["plan"]["duration_s"],
            predicted=Color(*d["plan"]["predicted"]),
            residual=d["plan"]["residual"],
        )
        result = DispenseResult(
            volumes_ml=tuple(d["result"]["volumes_ml"]),
            total_ml=d["result"]["total_ml"],
            duration_s=d["result"]["duration_s"],
            mixed=Color(*d["result"]["mixed"]),
            faults=tuple(d["result"]["faults"]),
        )
        return cls(
            id=d["id"],
            timestamp=d["timestamp"],
            request_text=d["request_text"],
            target=Color(*d["target"]),
            plan=plan,
            program_text=d["program_text"],
            result=result,
            achieved=Color(*d["achieved"]),
            matched=d["matched"],
            provenance=d["provenance"],
            translation_latency_s=d["translation_latency_s"],
            seed=d["seed"],
        )


def build_chart(pump_count: int, seed: int = CHART_SEED) -> list[Color]:
    """The 90-target evaluation chart, all targets inside the device gamut.

    3-pump mode: colors need a zero channel to be exactly mixable, so the
    chart is 45 two-channel grid colors (15 per zero channel), the 6 pure
    and secondary corners, and 39 seeded random one-zero-channel colors.
    4-pump mode the gamut is the whole cube, so 90 seeded cube points.
    """
    rng = np.random.default_rng(seed)
    targets: list[Color] = []
    if pump_count == 3:
        levels = [0.25, 0.5, 0.75, 1.0]
        for zero_ch in range(3):
            pairs = [p for p in itertools.product(levels, levels) if p != (1.0, 1.0)]
            for u, v in pairs:
                chans = [u, v]
                chans.insert(zero_ch, 0.0)
                targets.append(Color(*chans))
        targets += [
            Color(1, 0, 0), Color(0, 1, 0), Color(0, 0, 1),
            Color(0, 1, 1), Color(1, 0, 1), Color(1, 1, 0),
        ]
        while len(targets) < CHART_SIZE:
            zero_ch = int(rng.integers(3))
            u, v = rng.uniform(0.05, 1.0, size=2)
            chans = [float(u), float(v)]
            chans.insert(zero_ch, 0.0)
            targets.append(Color(*chans))
    else:
        while len(targets) < CHART_SIZE:
            r, g, b = rng.uniform(0.0, 1.0, size=3)
            targets.append(Color(float(r), float(g), float(b)))
    return targets[:CHART_SIZE]


class Orchestrator:
    def __init__(self, config: AppConfig, history_dir: str | Path | None = None):
        self.config = config
        self.device = SimulatedDevice(
            models=list(config.pump_models),
            limits=config.limits,
            mix_cfg=config.mix,
            noise_on=config.noise_on,
            seed=config.seed,
        )
        self.rule_backend = RuleBasedBackend()
        base = Path(history_dir) if history_dir is not None else Path(".")
        self.history_path = (
            Path(config.history_path)
            if Path(config.history_path).is_absolute()
            else base / config.history_path
        )
        self._history_lock = threading.Lock()
        self._next_id = self._scan_next_id()

    # --- history ------------------------------------------------------------

    def _scan_next_id(self) -> int:
        last = 0
        if self.history_path.exists():
            with open(self.history_path, encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        last = max(last, json.loads(line)["id"])
        return last + 1

    def _persist(self, record: RunRecord) -> None:
        with open(self.history_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(record.to_dict(), sort_keys=True) + "\n")

    def history(self, limit: int | None = None) -> list[RunRecord]:
        if not self.history_path.exists():
            return []
        with open(self.history_path, encoding="utf-8") as fh:
            records = [
                RunRecord.from_dict(json.loads(line))
                for line in fh
                if line.strip()
            ]
        return records[-limit:] if limit else records

    def find_run(self, run_id: int) -> RunRecord | None:
        for record in self.history():
            if record.id == run_id:
                return record
        return None

    # --- pipeline -----------------------------------------------------------

    def _backend(self, name: str | None):
        if name in (None, "rule", "rule_based"):
            return self.rule_backend
        if name == "llm":
            return LlmBackend()
        raise ChromactlError(f"unknown backend {name!r}", code="UNKNOWN_BACKEND")

    def mix(
        self,
        text: str,
        volume_ml: float | None = None,
        backend: str | None = None,
        noise_on: bool | None = None,
        seed: int | None = None,
    ) -> RunRecord:
        """Translate, check, execute, persist. Errors surface with stable
        codes and leave no history entry behind."""
        cfg = self.config
        request_text = text if volume_ml is None else f"{volume_ml:g} ml of {text}"
        translation: Translation = self._backend(backend).translate(
            request_text,
            cfg.mix,
            self.device.models,
            cfg.limits,
            self.device.state,
            cfg.default_volume_ml,
        )
        plan = translation.plan
        if plan is None:
            # llm-path program without a plan: re-plan for bookkeeping
            fallback = self.rule_backend.translate(
                request_text,
                cfg.mix,
                self.device.models,
                cfg.limits,
                self.device.state,
                cfg.default_volume_ml,
            )
            plan = fallback.plan

        from .request import normalize_request, parse_request

        target = normalize_request(
            parse_request(request_text), cfg.default_volume_ml
        ).target

        if seed is not None:
            self.device.state.seed = seed
        if noise_on is not None:
            previous_noise = self.device.noise_on
            self.device.noise_on = noise_on
        try:
            result = self.device.execute(translation.program)
        finally:
            if noise_on is not None:
                self.device.noise_on = previous_noise

        achieved = result.mixed
        record = RunRecord(
            id=0,
            timestamp=time.time(),
            request_text=request_text,
            target=target,
            plan=plan,
            program_text=render_program(translation.program),
            result=result,
            achieved=achieved,
            matched=color_distance(achieved, target) <= cfg.match_threshold,
            provenance=translation.provenance,
            translation_latency_s=translation.latency_s,
            seed=self.device.state.seed,
        )
        with self._history_lock:
            record = dataclasses.replace(record, id=self._next_id)
            self._next_id += 1
            self._persist(record)
        return record

    def adjust(self, run_id: int, modifier: Modifier) -> RunRecord:
        """Re-mix a past run's request with one extra trailing modifier."""
        base = self.find_run(run_id)
        if base is None:
            raise ChromactlError(f"no run with id {run_id}", code="NO_SUCH_RUN")
        return self.mix(f"{base.request_text} {modifier.value}", seed=base.seed + 1)

    # --- evaluation harnesses -------------------------------------------------

    def chart_eval(self, noise_on: bool | None = None, seed: int = CHART_SEED) -> dict:
        """Mix every chart target once; report the fraction within the
        match threshold."""
        targets = build_chart(self.config.mix.pump_count)
        records = []
        matches = 0
        for i, target in enumerate(targets):
            text = f"rgb({round(target.r * 255)},{round(target.g * 255)},{round(target.b * 255)})"
            # rgb() literals quantize to 8 bits; compare against the
            # quantized target actually requested
            self.device.refill()
            record = self.mix(text, noise_on=noise_on, seed=seed * 1000 + i)
            records.append(record)
            if record.matched:
                matches += 1
        return {
            "match_rate": matches / len(targets),
            "n_targets": len(targets),
            "records": records,
        }

    def reliability_trials(
        self, text: str, n: int, seed: int = 0, noise_on: bool | None = None
    ) -> dict:
        """Repeat one request n times with fresh seeded noise draws."""
        if n < 1:
            raise ValueError("n must be >= 1")
        latencies = []
        durations = []
        successes = 0
        for i in range(n):
            self.device.refill()
            record = self.mix(text, noise_on=noise_on, seed=seed * 1000003 + i)
            latencies.append(record.translation_latency_s)
            durations.append(record.result.duration_s)
            if record.matched:
                successes += 1
        return {
            "success_rate": successes / n,
            "n": n,
            "translation_latency_s": latencies,
            "dispense_duration_s": durations,
        }
