import numpy as np
import pytest

from chromactl.calibrate import (
    SweepSample,
    default_sweep_setpoints,
    fit_model,
    run_sweep,
)
from chromactl.device import SimulatedDevice
from chromactl.errors import DegenerateFit, InsufficientData, ReservoirLow
from chromactl.planner import MixConfig, plan_mix
from chromactl.pumpcode import DeviceLimits
from chromactl.pumps import PumpModel, flow_rate

from test_planner import make_request
from chromactl.colors import Color


def make_device(model: PumpModel, noise_on=False, seed=0, reservoir=5000.0):
    limits = DeviceLimits(
        pump_count=3, v_max=model.v_max, reservoir_ml=(reservoir,) * 3
    )
    return SimulatedDevice(
        [model] * 3, limits, MixConfig(), noise_on=noise_on, seed=seed
    )


class TestRunSweep:
    def test_below_onset_flows_are_zero(self, models3):
        device = make_device(models3[0])
        samples = run_sweep(1, [0.0, 50.0], device)
        assert [s.measured_flow for s in samples] == [0.0, 0.0]

    def test_single_point(self, models3):
        device = make_device(models3[0])
        samples = run_sweep(1, [150.0], device)
        assert samples[0].measured_flow == pytest.approx(0.25, abs=1e-12)

    def test_matches_forward_model(self, models3):
        model = models3[0]
        device = make_device(model)
        setpoints = [120.0, 160.0, 200.0, 240.0, 280.0]
        samples = run_sweep(1, setpoints, device)
        for s in samples:
            assert s.measured_flow == pytest.approx(
                flow_rate(model, s.setpoint), abs=1e-9
            )

    def test_leaves_device_reset_and_reservoirs_decreased(self, models3):
        device = make_device(models3[0])
        before = list(device.state.reservoirs)
        samples = run_sweep(1, [150.0, 200.0], device, dwell_s=2.0)
        assert device.state.setpoints == [0.0, 0.0, 0.0]
        swept = sum(s.measured_flow * 2.0 for s in samples)
        assert before[0] - device.state.reservoirs[0] == pytest.approx(
            swept, abs=1e-9
        )

    def test_reservoir_guard(self, models3):
        device = make_device(models3[0], reservoir=0.1)
        with pytest.raises(ReservoirLow):
            run_sweep(1, [280.0] * 8, device)

    def test_rejects_out_of_range_setpoints(self, models3):
        device = make_device(models3[0])
        with pytest.raises(ValueError):
            run_sweep(1, [350.0], device)


class TestFitModel:
    def test_exact_recovery_from_linear_data(self):
        true = PumpModel(k=1e-4, v0=100.0)
        samples = [
            SweepSample(v, flow_rate(true, v)) for v in [120, 150, 180, 210, 240]
        ]
        fit = fit_model(samples)
        assert fit.model.k == pytest.approx(true.k, rel=1e-9)
        assert fit.model.v0 == pytest.approx(true.v0, rel=1e-9)
        assert fit.rms_residual < 1e-12
        assert fit.samples_used == 5

    def test_two_sample_hand_regression(self):
        # sqrt flows 0.5 and 1.0: slope (1-0.5)/50 = 0.01, intercept -1
        fit = fit_model([SweepSample(150, 0.25), SweepSample(200, 1.0)])
        assert fit.model.k == pytest.approx(1e-4, rel=1e-12)
        assert fit.model.v0 == pytest.approx(100.0, rel=1e-12)

    def test_insufficient_data(self):
        with pytest.raises(InsufficientData):
            fit_model([SweepSample(150, 0.25), SweepSample(80, 0.0)])

    def test_degenerate_fit(self):
        with pytest.raises(DegenerateFit):
            fit_model([SweepSample(150, 1.0), SweepSample(200, 0.25)])

    def test_below_onset_samples_excluded(self):
        true = PumpModel(k=2e-4, v0=120.0)
        samples = [SweepSample(v, flow_rate(true, v)) for v in [50, 80, 150, 200, 250]]
        fit = fit_model(samples)
        assert fit.samples_used == 3
        assert fit.model.v0 == pytest.approx(120.0, rel=1e-9)

    def test_noiseless_identifiability_random_models(self):
        rng = np.random.default_rng(21)
        for _ in range(20):
            true = PumpModel(
                k=float(rng.uniform(5e-5, 3e-4)), v0=float(rng.uniform(30, 160))
            )
            device = make_device(true)
            samples = run_sweep(1, default_sweep_setpoints(true.v_max), device)
            fit = fit_model(samples)
            assert fit.model.k == pytest.approx(true.k, rel=1e-6)
            assert fit.model.v0 == pytest.approx(true.v0, rel=1e-6)

    def test_noisy_recovery_within_five_percent_mostly(self):
        rng = np.random.default_rng(33)
        ok = 0
        trials = 100
        for t in range(trials):
            true = PumpModel(
                k=float(rng.uniform(5e-5, 3e-4)),
                v0=float(rng.uniform(30, 160)),
                noise_sigma=0.02,
            )
            device = make_device(true, noise_on=True, seed=t)
            samples = run_sweep(1, default_sweep_setpoints(true.v_max), device)
            fit = fit_model(samples)
            if (
                abs(fit.model.k - true.k) / true.k < 0.05
                and abs(fit.model.v0 - true.v0) / true.v0 < 0.05
            ):
                ok += 1
        assert ok >= 95


class TestFitThenPlan:
    def test_plan_with_fitted_model_runs_true_device(self, mix_cfg):
        true = PumpModel(k=1.7e-4, v0=85.0)
        device = make_device(true)
        fitted = []
        for pump in (1, 2, 3):
            samples = run_sweep(pump, default_sweep_setpoints(true.v_max), device)
            fit = fit_model(samples)
            assert fit.rms_residual < 1e-6
            fitted.append(fit.model)

        plan = plan_mix(make_request(Color(1.0, 0.6, 0.0)), mix_cfg, fitted)
        realized = [flow_rate(true, sp) if sp > 0 else 0.0 for sp in plan.setpoints]
        total = sum(realized)
        for q, f in zip(realized, plan.fractions):
            assert q / total == pytest.approx(f, abs=1e-3)
