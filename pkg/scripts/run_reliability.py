#!/usr/bin/env python3
"""Repeat-reliability experiment: one request, n seeded noisy runs.

Reports the success rate plus translation-latency and dispense-duration
statistics. Equivalent to ``chromactl eval reliability`` with extra detail.
"""

import argparse
import statistics
import tempfile
import time

from chromactl.config import AppConfig, load_config
from chromactl.orchestrator import Orchestrator


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("text", nargs="?", default="make 5 ml of cyan")
    parser.add_argument("--n", type=int, default=200)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--config", default=None, help="INI config file")
    args = parser.parse_args()

    config = load_config(args.config) if args.config else AppConfig()
    with tempfile.TemporaryDirectory() as scratch:
        orch = Orchestrator(config, history_dir=scratch)
        t0 = time.perf_counter()
        out = orch.reliability_trials(args.text, args.n, seed=args.seed)
        elapsed = time.perf_counter() - t0

    lat = out["translation_latency_s"]
    dur = out["dispense_duration_s"]
    print(f"request: {args.text!r}")
    print(f"success_rate {out['success_rate']:.4f} over {out['n']} runs ({elapsed:.2f}s)")
    print(
        f"translation latency: mean {statistics.mean(lat) * 1000:.2f} ms, "
        f"max {max(lat) * 1000:.2f} ms"
    )
    print(
        f"dispense duration:  mean {statistics.mean(dur):.2f} s, "
        f"max {max(dur):.2f} s (virtual time)"
    )


if __name__ == "__main__":
    main()
