import pytest

from chromactl.config import AppConfig
from chromactl.device import DeviceState, SimulatedDevice
from chromactl.orchestrator import Orchestrator
from chromactl.planner import MixConfig
from chromactl.pumpcode import DeviceLimits
from chromactl.pumps import PumpModel


@pytest.fixture
def mix_cfg():
    return MixConfig()


@pytest.fixture
def models3():
    return [PumpModel(), PumpModel(), PumpModel()]


@pytest.fixture
def limits():
    return DeviceLimits()


@pytest.fixture
def fresh_state(limits):
    return DeviceState.fresh(limits)


@pytest.fixture
def device(models3, limits, mix_cfg):
    return SimulatedDevice(models3, limits, mix_cfg, noise_on=False)


@pytest.fixture
def make_orchestrator(tmp_path):
    def _make(**overrides) -> Orchestrator:
        config = AppConfig(**overrides)
        return Orchestrator(config, history_dir=tmp_path)

    return _make
