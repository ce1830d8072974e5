#!/usr/bin/env python3
"""Chart-match experiment: mix every chart target and report the match rate.

Runs the 90-target in-gamut chart once with flow noise and once without,
printing both rates and the wall-clock budget. Equivalent to
``chromactl eval chart`` but keeps per-target residuals for inspection.
"""

import argparse
import json
import tempfile
import time
from pathlib import Path

from chromactl.colors import color_distance
from chromactl.config import AppConfig, load_config
from chromactl.orchestrator import Orchestrator


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--config", default=None, help="INI config file")
    parser.add_argument("--out", default=None, help="write per-target JSON here")
    args = parser.parse_args()

    config = load_config(args.config) if args.config else AppConfig()
    rows = []
    timings = {}
    for label, noise_on in (("noisy", True), ("noise-off", False)):
        with tempfile.TemporaryDirectory() as scratch:
            orch = Orchestrator(config, history_dir=scratch)
            t0 = time.perf_counter()
            outcome = orch.chart_eval(noise_on=noise_on)
            timings[label] = time.perf_counter() - t0
        print(
            f"{label:>9}: match_rate {outcome['match_rate']:.4f} "
            f"over {outcome['n_targets']} targets in {timings[label]:.2f}s"
        )
        for record in outcome["records"]:
            rows.append(
                {
                    "mode": label,
                    "request": record.request_text,
                    "residual": color_distance(record.achieved, record.target),
                    "matched": record.matched,
                }
            )

    if args.out:
        Path(args.out).write_text(json.dumps(rows, indent=2) + "\n")
        print(f"wrote {len(rows)} rows to {args.out}")


if __name__ == "__main__":
    main()
