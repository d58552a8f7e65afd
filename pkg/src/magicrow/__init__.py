"""Single-row MAGIC crossbar toolkit.

Pipeline: parse a SIMPLER-style mapping (mapping) -> compile the drive
timeline (schedule) -> either export a Spectre-compatible testbench tree
(netlist) or run the built-in transient engine (sim) -> verify against the
logic oracle (oracle) and report per-device, per-phase energy (energy).
"""

from .device import VteamParams, VariationSpec, calibrate, default_params
from .mapping import ExecutionPlan, parse_plan, validate_plan
from .schedule import (
    InputPattern,
    PatternKind,
    Schedule,
    TimingConfig,
    VoltageConfig,
    build_schedule,
    make_pattern,
)
from .sim import SimOptions, run_transient

__version__ = "0.1.0"

__all__ = [
    "ExecutionPlan",
    "InputPattern",
    "PatternKind",
    "Schedule",
    "SimOptions",
    "TimingConfig",
    "VariationSpec",
    "VoltageConfig",
    "VteamParams",
    "build_schedule",
    "calibrate",
    "default_params",
    "make_pattern",
    "parse_plan",
    "run_transient",
    "validate_plan",
    "__version__",
]
