#!/usr/bin/env python3
"""Calibration recovery study over random ground-truth pump models.

For each trial a pump with hidden (k, V0) is swept, the quadratic flow law
is fitted by ordinary least squares on sqrt(Q), and the recovered parameters
are compared to the hidden truth. Runs a noiseless identifiability pass and
a noisy Monte-Carlo pass.
"""

import argparse

import numpy as np

from chromactl.calibrate import default_sweep_setpoints, fit_model, run_sweep
from chromactl.device import SimulatedDevice
from chromactl.planner import MixConfig
from chromactl.pumpcode import DeviceLimits
from chromactl.pumps import PumpModel


def sweep_device(model: PumpModel, noise_on: bool, seed: int) -> SimulatedDevice:
    limits = DeviceLimits(pump_count=3, v_max=model.v_max, reservoir_ml=(5000.0,) * 3)
    return SimulatedDevice([model] * 3, limits, MixConfig(), noise_on=noise_on, seed=seed)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--trials", type=int, default=100)
    parser.add_argument("--sigma", type=float, default=0.02)
    parser.add_argument("--seed", type=int, default=8)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)

    worst_rel = 0.0
    for _ in range(args.trials):
        true = PumpModel(k=float(rng.uniform(5e-5, 3e-4)), v0=float(rng.uniform(30, 160)))
        device = sweep_device(true, noise_on=False, seed=0)
        fit = fit_model(run_sweep(1, default_sweep_setpoints(true.v_max), device))
        worst_rel = max(
            worst_rel,
            abs(fit.model.k - true.k) / true.k,
            abs(fit.model.v0 - true.v0) / true.v0,
        )
    print(f"noiseless: worst relative error {worst_rel:.2e} over {args.trials} models")

    within = 0
    errors = []
    for t in range(args.trials):
        true = PumpModel(
            k=float(rng.uniform(5e-5, 3e-4)),
            v0=float(rng.uniform(30, 160)),
            noise_sigma=args.sigma,
        )
        device = sweep_device(true, noise_on=True, seed=t)
        fit = fit_model(run_sweep(1, default_sweep_setpoints(true.v_max), device))
        rel_k = abs(fit.model.k - true.k) / true.k
        rel_v0 = abs(fit.model.v0 - true.v0) / true.v0
        errors.append(max(rel_k, rel_v0))
        if rel_k < 0.05 and rel_v0 < 0.05:
            within += 1
    print(
        f"sigma={args.sigma}: {within}/{args.trials} trials within 5%; "
        f"median relative error {np.median(errors):.3%}"
    )


if __name__ == "__main__":
    main()
