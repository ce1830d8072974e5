"""HTTP API over the orchestrator; the same pipeline the CLI drives.

All bodies and replies are JSON with stable field names. Errors carry a
machine-readable code: ``{"error": {"code": ..., "message": ...}}``.
"""

from __future__ import annotations

import dataclasses
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import FileResponse, JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .calibrate import default_sweep_setpoints, fit_model, run_sweep
from .colors import NAME_TABLE, Modifier
from .errors import (
    BackendUnavailable,
    ChromactlError,
    DeviceFault,
)
from .orchestrator import Orchestrator
from .pumpcode import parse_program

__all__ = ["create_app"]


class MixBody(BaseModel):
    text: str
    volume_ml: float | None = None
    backend: str | None = None


class ProgramBody(BaseModel):
    text: str


class CalibrateBody(BaseModel):
    pump: int


class AdjustBody(BaseModel):
    run_id: int
    modifier: str


def _error_status(exc: ChromactlError) -> int:
    if isinstance(exc, BackendUnavailable):
        return 503
    if isinstance(exc, DeviceFault):
        return 409
    if exc.code == "NO_SUCH_RUN":
        return 404
    return 400


def create_app(orch: Orchestrator, static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="chromactl")

    @app.exception_handler(ChromactlError)
    async def _chromactl_error(request: Request, exc: ChromactlError):
        return JSONResponse(
            status_code=_error_status(exc),
            content={"error": {"code": exc.code, "message": exc.message}},
        )

    @app.post("/api/mix")
    def api_mix(body: MixBody):
        record = orch.mix(body.text, volume_ml=body.volume_ml, backend=body.backend)
        return record.to_dict()

    @app.post("/api/program/check")
    def api_check(body: ProgramBody):
        program = parse_program(body.text)
        report = orch.device.check(program)
        return {
            "ok": report.ok,
            "violations": [dataclasses.asdict(v) for v in report.violations],
        }

    @app.post("/api/program/execute")
    def api_execute(body: ProgramBody):
        program = parse_program(body.text)
        result = orch.device.execute(program)
        return {
            "volumes_ml": list(result.volumes_ml),
            "total_ml": result.total_ml,
            "duration_s": result.duration_s,
            "mixed": list(result.mixed.as_tuple()),
            "faults": list(result.faults),
        }

    @app.get("/api/state")
    def api_state():
        state = orch.device.state
        cfg = orch.config
        return {
            "busy": state.busy,
            "setpoints": list(state.setpoints),
            "reservoirs": list(state.reservoirs),
            "dispensed": list(state.dispensed),
            "elapsed_s": state.elapsed_s,
            "config": {
                "pump_count": cfg.mix.pump_count,
                "ink_strength": cfg.mix.ink_strength,
                "match_threshold": cfg.match_threshold,
                "default_volume_ml": cfg.default_volume_ml,
                "noise_on": cfg.noise_on,
                "v_max": cfg.limits.v_max,
            },
        }

    @app.post("/api/calibrate")
    def api_calibrate(body: CalibrateBody):
        if not 1 <= body.pump <= orch.config.limits.pump_count:
            raise ChromactlError(
                f"no pump {body.pump}", code="NO_SUCH_PUMP"
            )
        setpoints = default_sweep_setpoints(orch.config.limits.v_max)
        samples = run_sweep(body.pump, setpoints, orch.device)
        fit = fit_model(
            samples,
            v_max=orch.config.limits.v_max,
            noise_sigma=orch.device.models[body.pump - 1].noise_sigma,
        )
        orch.device.models[body.pump - 1] = fit.model
        orch.config.pump_models[body.pump - 1] = fit.model
        return {
            "pump": body.pump,
            "k": fit.model.k,
            "v0": fit.model.v0,
            "v_max": fit.model.v_max,
            "rms_residual": fit.rms_residual,
            "samples_used": fit.samples_used,
        }

    @app.get("/api/history")
    def api_history(limit: int = 20):
        return [r.to_dict() for r in orch.history(limit=limit)]

    @app.post("/api/adjust")
    def api_adjust(body: AdjustBody):
        try:
            modifier = Modifier(body.modifier)
        except ValueError:
            raise ChromactlError(
                f"unknown modifier {body.modifier!r}", code="UNKNOWN_MODIFIER"
            )
        record = orch.adjust(body.run_id, modifier)
        return record.to_dict()

    @app.get("/api/colors")
    def api_colors():
        return {
            "names": {
                name: list(color.as_tuple()) for name, color in NAME_TABLE.items()
            },
            "modifiers": [m.value for m in Modifier],
            "gamut": {
                "pump_count": orch.config.mix.pump_count,
                "ink_strength": orch.config.mix.ink_strength,
                "note": (
                    "3-pump gamut: colors with at least one zero RGB channel; "
                    "4-pump (diluent) gamut: the full unit cube"
                ),
            },
        }

    if static_dir is not None and Path(static_dir).is_dir():
        index = Path(static_dir) / "index.html"

        @app.get("/")
        def root():
            return FileResponse(index)

        app.mount("/static", StaticFiles(directory=str(static_dir)), name="static")

    return app
