"""chromactl: natural-language color requests compiled to pump programs and
executed on a simulated 3-pump EHD dispensing device."""

from .colors import Color, DensityVec, Modifier, color_distance, parse_color_literal
from .config import AppConfig, load_config, save_config
from .device import DeviceState, DispenseResult, SimulatedDevice, execute_program
from .orchestrator import Orchestrator, RunRecord, build_chart
from .planner import MixConfig, MixPlan, mix_forward, plan_mix, project_to_simplex
from .pumpcode import (
    CheckReport,
    DeviceLimits,
    PumpProgram,
    check_program,
    generate_program,
    parse_program,
    render_program,
)
from .pumps import PumpModel, flow_rate, setpoint_for_flow
from .request import ColorRequest, NormalizedRequest, normalize_request, parse_request
from .translate import (
    DatasetRecord,
    LlmBackend,
    RuleBasedBackend,
    generate_dataset,
    translate,
)

__version__ = "0.1.0"
