import math

import pytest
from hypothesis import given, strategies as st

from chromactl.device import (
    TIME_STEP_S,
    DeviceState,
    SimulatedDevice,
    execute_program,
    handle_command,
)
from chromactl.errors import DeviceBusy, SetpointOutOfRange, UncheckedProgram
from chromactl.planner import MixConfig
from chromactl.pumpcode import DeviceLimits, parse_program
from chromactl.pumps import PumpModel, flow_rate, setpoint_for_flow


def program_for_flows(models, flows, volume):
    lines = [
        f"Pump{i + 1}.write({setpoint_for_flow(m, q)});"
        for i, (m, q) in enumerate(zip(models, flows))
    ]
    lines.append(f"setVolume({volume});")
    return parse_program("\n".join(lines))


class TestFlowRate:
    def test_zero_at_onset(self):
        model = PumpModel()
        assert flow_rate(model, model.v0) == 0.0

    def test_zero_below_onset(self):
        assert flow_rate(PumpModel(), 0.0) == 0.0

    def test_reference_point(self):
        assert flow_rate(PumpModel(), 144.72) == pytest.approx(0.2, abs=1e-3)

    def test_out_of_range(self):
        with pytest.raises(SetpointOutOfRange):
            flow_rate(PumpModel(), 301.0)
        with pytest.raises(SetpointOutOfRange):
            flow_rate(PumpModel(), -1.0)

    @given(
        st.floats(min_value=0, max_value=300),
        st.floats(min_value=0, max_value=300),
    )
    def test_monotone(self, v1, v2):
        model = PumpModel()
        if v1 > v2:
            v1, v2 = v2, v1
        assert flow_rate(model, v1) <= flow_rate(model, v2)


class TestExecute:
    def test_closed_form_dispense(self, models3, limits, mix_cfg):
        state = DeviceState.fresh(limits)
        prog = program_for_flows(models3, [0.2, 0.12, 0.08], 5.0)
        result = execute_program(
            prog, state, models3, mix_cfg, limits, noise_on=False
        )
        assert result.duration_s == pytest.approx(12.5, abs=TIME_STEP_S)
        assert result.volumes_ml == pytest.approx((2.5, 1.5, 1.0), abs=1e-6)
        # cross-check against v_i = q_i * T
        for v, q in zip(result.volumes_ml, (0.2, 0.12, 0.08)):
            assert v == pytest.approx(q * result.duration_s, abs=1e-9)
        assert not result.faults

    def test_total_within_one_step(self, models3, limits, mix_cfg):
        state = DeviceState.fresh(limits)
        prog = program_for_flows(models3, [0.2, 0.07, 0.033], 3.123)
        result = execute_program(
            prog, state, models3, mix_cfg, limits, noise_on=False
        )
        step_volume = sum((0.2, 0.07, 0.033)) * TIME_STEP_S
        assert 3.123 - 1e-9 <= result.total_ml <= 3.123 + step_volume + 1e-9

    def test_volume_conservation_exact(self, models3, limits, mix_cfg):
        state = DeviceState.fresh(limits)
        before = list(state.reservoirs)
        prog = program_for_flows(models3, [0.2, 0.12, 0.08], 5.0)
        result = execute_program(
            prog, state, models3, mix_cfg, limits, noise_on=False
        )
        for res_before, res_after, v in zip(
            before, state.reservoirs, result.volumes_ml
        ):
            assert res_after == res_before - v  # exact float equality

    def test_realized_fractions_match_flows(self, models3, limits, mix_cfg):
        state = DeviceState.fresh(limits)
        flows = [0.2, 0.12, 0.08]
        prog = program_for_flows(models3, flows, 5.0)
        result = execute_program(
            prog, state, models3, mix_cfg, limits, noise_on=False
        )
        total_q = sum(flows)
        for v, q in zip(result.volumes_ml, flows):
            assert v / result.total_ml == pytest.approx(q / total_q, abs=1e-6)

    def test_seeded_reproducibility(self, models3, limits, mix_cfg):
        prog = program_for_flows(models3, [0.2, 0.12, 0.08], 5.0)
        results = []
        for _ in range(2):
            state = DeviceState.fresh(limits, seed=99)
            results.append(
                execute_program(prog, state, models3, mix_cfg, limits, noise_on=True)
            )
        assert results[0] == results[1]

    def test_different_seeds_differ(self, models3, limits, mix_cfg):
        prog = program_for_flows(models3, [0.2, 0.12, 0.08], 5.0)
        a = execute_program(
            prog, DeviceState.fresh(limits, seed=1), models3, mix_cfg, limits
        )
        b = execute_program(
            prog, DeviceState.fresh(limits, seed=2), models3, mix_cfg, limits
        )
        assert a.volumes_ml != b.volumes_ml

    def test_unchecked_program_rejected(self, models3, limits, mix_cfg):
        state = DeviceState.fresh(limits)
        prog = parse_program("Pump1.write(400);\nsetVolume(5);")
        with pytest.raises(UncheckedProgram):
            execute_program(prog, state, models3, mix_cfg, limits)

    def test_forced_over_limit_faults(self, models3, limits, mix_cfg):
        state = DeviceState.fresh(limits)
        prog = parse_program("Pump1.write(400);\nsetVolume(5);")
        result = execute_program(
            prog, state, models3, mix_cfg, limits, force=True
        )
        assert result.faults == ("SETPOINT_OVER_LIMIT",)

    def test_forced_bad_pump_faults(self, models3, limits, mix_cfg):
        state = DeviceState.fresh(limits)
        prog = parse_program("Pump7.write(150);\nsetVolume(5);")
        result = execute_program(
            prog, state, models3, mix_cfg, limits, force=True
        )
        assert result.faults == ("NO_SUCH_PUMP",)

    def test_forced_no_flow_times_out(self, models3, limits, mix_cfg):
        state = DeviceState.fresh(limits)
        prog = parse_program(
            "Pump1.write(0);\nPump2.write(0);\nPump3.write(0);\nsetVolume(5);"
        )
        result = execute_program(
            prog, state, models3, mix_cfg, limits, noise_on=False, force=True
        )
        assert result.faults == ("NO_FLOW",)
        assert result.total_ml == 0.0
        assert result.duration_s > 0  # timed out, not instant

    def test_reservoir_empty_aborts(self, models3, limits, mix_cfg):
        state = DeviceState.fresh(limits)
        state.reservoirs[0] = 1.0
        prog = program_for_flows(models3, [0.2, 0.0, 0.0], 5.0)
        result = execute_program(
            prog, state, models3, mix_cfg, limits, noise_on=False, force=True
        )
        assert "RESERVOIR_EMPTY" in result.faults
        assert result.volumes_ml[0] <= 1.0
        assert state.reservoirs[0] >= 0.0


class TestWireProtocol:
    def test_set_ok(self, device):
        assert device.command("SET 1 144.7") == "OK"
        assert device.state.setpoints[0] == 144.7

    def test_set_over_limit(self, device):
        assert device.command("SET 1 999") == "ERR SETPOINT_OVER_LIMIT"

    def test_set_bad_pump(self, device):
        assert device.command("SET 9 100") == "ERR NO_SUCH_PUMP"

    def test_dispense_line_format(self, device, models3):
        for i, q in enumerate([0.2, 0.12, 0.08]):
            sp = setpoint_for_flow(models3[i], q)
            assert device.command(f"SET {i + 1} {sp}") == "OK"
        assert device.command("DISPENSE 5.0") == "DONE 12.5 2.500 1.500 1.000"

    def test_dispense_no_flow(self, device):
        assert device.command("DISPENSE 5.0") == "ERR NO_FLOW"

    def test_dispense_reservoir_empty(self, device):
        device.state.reservoirs = [0.5, 0.5, 0.5]
        device.command("SET 1 144.72")
        assert device.command("DISPENSE 5.0") == "ERR RESERVOIR_EMPTY"

    def test_state_line(self, device):
        assert device.command("STATE") == "STATE 0 100.000 100.000 100.000"

    def test_reset(self, device):
        device.command("SET 1 150")
        assert device.command("RESET") == "OK"
        assert device.state.setpoints == [0.0, 0.0, 0.0]
        assert device.state.reservoirs == [100.0, 100.0, 100.0]

    @pytest.mark.parametrize(
        "line", ["", "FROB", "SET 1", "SET x y", "DISPENSE", "DISPENSE -1", "SET 1 -5"]
    )
    def test_bad_commands(self, device, line):
        assert device.command(line) == "ERR BAD_COMMAND"

    def test_wire_matches_direct_execution(self, models3, limits, mix_cfg):
        flows = [0.2, 0.12, 0.08]
        wire = SimulatedDevice(models3, limits, mix_cfg, noise_on=False)
        for i, q in enumerate(flows):
            wire.command(f"SET {i + 1} {setpoint_for_flow(models3[i], q)}")
        reply = wire.command("DISPENSE 5.0")

        direct_state = DeviceState.fresh(limits)
        prog = program_for_flows(models3, flows, 5.0)
        result = execute_program(
            prog, direct_state, models3, mix_cfg, limits, noise_on=False
        )
        expected = "DONE {:g} {}".format(
            result.duration_s, " ".join(f"{v:.3f}" for v in result.volumes_ml)
        )
        assert reply == expected
        assert wire.state.reservoirs == direct_state.reservoirs


class TestDeviceOwnership:
    def test_busy_while_locked(self, device):
        assert device._lock.acquire(blocking=False)
        try:
            assert device.command("STATE") == "ERR BUSY"
            with pytest.raises(DeviceBusy):
                device.execute(parse_program("setVolume(1);"), force=True)
        finally:
            device._lock.release()

    def test_run_timed_volume(self, device, models3):
        device.command(f"SET 1 {setpoint_for_flow(models3[0], 0.25)}")
        volumes = device.run_timed(2.0)
        assert volumes[0] == pytest.approx(0.5, abs=1e-9)
        assert volumes[1] == volumes[2] == 0.0
