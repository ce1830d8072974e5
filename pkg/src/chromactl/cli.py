"""Command-line entry point.

Exit codes: 0 success, 2 validation error, 3 device fault, 4 backend
unavailable.
"""

from __future__ import annotations

import argparse
import json
import statistics
import sys

from .calibrate import default_sweep_setpoints, fit_model, run_sweep
from .config import load_config, save_config
from .errors import ChromactlError
from .orchestrator import Orchestrator
from .pumpcode import parse_program, render_program
from .translate import generate_dataset, write_dataset


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chromactl",
        description="Natural-language color mixing on a simulated EHD pump device",
    )
    parser.add_argument("--config", default=None, help="path to the INI config file")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_request_flags(p):
        p.add_argument("text")
        p.add_argument("--volume", type=float, default=None, metavar="ML")
        p.add_argument("--backend", choices=["rule", "llm"], default="rule")

    p = sub.add_parser("mix", help="translate, check, and dispense a request")
    add_request_flags(p)
    p.add_argument("--no-noise", action="store_true")
    p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("plan", help="show the mix plan for a request")
    add_request_flags(p)

    p = sub.add_parser("gen", help="print the pump program for a request")
    add_request_flags(p)

    p = sub.add_parser("check", help="statically check a program file")
    p.add_argument("file")

    p = sub.add_parser("simulate", help="execute a program file on the simulator")
    p.add_argument("file")
    p.add_argument("--no-noise", action="store_true")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--force", action="store_true", help="skip the safety checker")

    p = sub.add_parser("calibrate", help="sweep and fit pump models")
    p.add_argument("--pump", type=int, default=None, help="one pump (default: all)")

    p = sub.add_parser("dataset", help="export the fine-tuning dataset")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("eval", help="run an evaluation harness")
    eval_sub = p.add_subparsers(dest="eval_command", required=True)
    pc = eval_sub.add_parser("chart", help="90-target chart match rate")
    pc.add_argument("--no-noise", action="store_true")
    pr = eval_sub.add_parser("reliability", help="repeat one request n times")
    pr.add_argument("text")
    pr.add_argument("--n", type=int, default=200)
    pr.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("serve", help="start the HTTP API and web console")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--static-dir", default=None)

    return parser


def _print_record(record) -> None:
    print(json.dumps(record.to_dict(), indent=2, sort_keys=True))


def _run(args, orch: Orchestrator) -> int:
    if args.command == "mix":
        record = orch.mix(
            args.text,
            volume_ml=args.volume,
            backend=args.backend,
            noise_on=False if args.no_noise else None,
            seed=args.seed,
        )
        _print_record(record)
        return 0

    if args.command in ("plan", "gen"):
        translation = orch._backend(args.backend).translate(
            args.text if args.volume is None else f"{args.volume:g} ml of {args.text}",
            orch.config.mix,
            orch.device.models,
            orch.config.limits,
            orch.device.state,
            orch.config.default_volume_ml,
        )
        if args.command == "gen":
            print(render_program(translation.program))
        else:
            plan = translation.plan
            print(
                json.dumps(
                    {
                        "fractions": list(plan.fractions),
                        "volumes_ml": list(plan.volumes_ml),
                        "setpoints": list(plan.setpoints),
                        "flows": list(plan.flows),
                        "duration_s": plan.duration_s,
                        "predicted": list(plan.predicted.as_tuple()),
                        "residual": plan.residual,
                    },
                    indent=2,
                )
            )
        return 0

    if args.command == "check":
        with open(args.file, encoding="utf-8") as fh:
            program = parse_program(fh.read())
        report = orch.device.check(program)
        for v in report.violations:
            print(f"{v.code}: {v.message} (statement {v.statement_index})")
        print("OK" if report.ok else "REJECTED")
        return 0 if report.ok else 2

    if args.command == "simulate":
        with open(args.file, encoding="utf-8") as fh:
            program = parse_program(fh.read())
        if args.seed is not None:
            orch.device.state.seed = args.seed
        if args.no_noise:
            orch.device.noise_on = False
        result = orch.device.execute(program, force=args.force)
        print(
            json.dumps(
                {
                    "volumes_ml": list(result.volumes_ml),
                    "total_ml": result.total_ml,
                    "duration_s": result.duration_s,
                    "mixed": list(result.mixed.as_tuple()),
                    "faults": list(result.faults),
                }
            )
        )
        return 3 if result.faults else 0

    if args.command == "calibrate":
        pumps = (
            [args.pump]
            if args.pump
            else list(range(1, orch.config.limits.pump_count + 1))
        )
        for pump in pumps:
            setpoints = default_sweep_setpoints(orch.config.limits.v_max)
            samples = run_sweep(pump, setpoints, orch.device)
            fit = fit_model(
                samples,
                v_max=orch.config.limits.v_max,
                noise_sigma=orch.device.models[pump - 1].noise_sigma,
            )
            orch.device.models[pump - 1] = fit.model
            orch.config.pump_models[pump - 1] = fit.model
            print(
                f"pump {pump}: k={fit.model.k:.6e} v0={fit.model.v0:.3f} "
                f"rms={fit.rms_residual:.3e} ({fit.samples_used} samples)"
            )
        if args.config:
            save_config(orch.config, args.config)
            print(f"saved fitted models to {args.config}")
        return 0

    if args.command == "dataset":
        records = generate_dataset(
            args.n,
            args.seed,
            orch.config.mix,
            orch.device.models,
            orch.config.limits,
            orch.device.state,
            orch.config.default_volume_ml,
        )
        write_dataset(records, args.out)
        print(f"wrote {len(records)} records to {args.out}")
        return 0

    if args.command == "eval":
        if args.eval_command == "chart":
            outcome = orch.chart_eval(noise_on=False if args.no_noise else None)
            print(
                f"match_rate {outcome['match_rate']:.4f} "
                f"over {outcome['n_targets']} targets"
            )
        else:
            outcome = orch.reliability_trials(args.text, args.n, seed=args.seed)
            lat = outcome["translation_latency_s"]
            print(
                f"success_rate {outcome['success_rate']:.4f} over {outcome['n']} runs; "
                f"translation latency mean {statistics.mean(lat) * 1000:.1f} ms, "
                f"max {max(lat) * 1000:.1f} ms; "
                f"dispense duration mean {statistics.mean(outcome['dispense_duration_s']):.2f} s"
            )
        return 0

    if args.command == "serve":
        import uvicorn

        from .api import create_app

        static = args.static_dir
        if static is None:
            from pathlib import Path

            candidate = Path(__file__).resolve().parents[2] / "frontend" / "dist"
            static = str(candidate) if candidate.is_dir() else None
        app = create_app(orch, static_dir=static)
        uvicorn.run(app, host=args.host, port=args.port)
        return 0

    raise AssertionError(f"unhandled command {args.command}")


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    config = load_config(args.config)
    orch = Orchestrator(config)
    try:
        return _run(args, orch)
    except ChromactlError as exc:
        print(f"error [{exc.code}]: {exc.message}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"error [FILE_NOT_FOUND]: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
