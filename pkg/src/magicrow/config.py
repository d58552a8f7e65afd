"""Run configuration: one sectioned key=value document covering the four
knob groups (array, voltage, simulation, variation), overridable by CLI
flags.

Example:

    [array]
    row_size = 512
    params = default

    [voltage]
    v_input = 2.0
    v_init = 2.0
    v_op = 1.0
    v_read = 0.2
    pulse_width = 1.3e-9
    rise = 1e-12
    fall = 1e-12
    gap = 0.5e-9

    [simulation]
    dt = 1e-12
    trace_decimation = 10
    engine = auto

    [variation]
    seed = 7
    sigma_r_on = 0.05
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field

from .device import VariationSpec, VteamParams, resolve_params
from .schedule import TimingConfig, VoltageConfig
from .sim import SimOptions


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class ArrayConfig:
    row_size: int | None = None  # pad the plan onto this many columns
    params: str = "default"  # preset name or parameter-file path


@dataclass(frozen=True)
class RunConfig:
    array: ArrayConfig = field(default_factory=ArrayConfig)
    timing: TimingConfig = field(default_factory=TimingConfig)
    volts: VoltageConfig = field(default_factory=VoltageConfig)
    sim: SimOptions = field(default_factory=SimOptions)
    variation: VariationSpec | None = None
    analysis: str = "tran"

    def device_params(self) -> VteamParams:
        return resolve_params(self.array.params)


_TIMING_KEYS = {f.name for f in dataclasses.fields(TimingConfig)}
_VOLT_KEYS = {f.name for f in dataclasses.fields(VoltageConfig)}
_SIM_KEYS = {f.name for f in dataclasses.fields(SimOptions)}


def _take(section, key, cast, default):
    if key not in section:
        return default
    try:
        return cast(section[key])
    except ValueError as e:
        raise ConfigError(f"bad value for {key!r}: {section[key]!r}") from e


def load_run_config(path) -> RunConfig:
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    known = {"array", "voltage", "simulation", "variation"}
    for name in parser.sections():
        if name not in known:
            raise ConfigError(f"unknown config section [{name}]")

    array = ArrayConfig()
    if parser.has_section("array"):
        sec = parser["array"]
        for key in sec:
            if key not in ("row_size", "params"):
                raise ConfigError(f"unknown key {key!r} in [array]")
        array = ArrayConfig(
            row_size=_take(sec, "row_size", int, None),
            params=sec.get("params", "default"),
        )

    timing_kwargs, volt_kwargs = {}, {}
    if parser.has_section("voltage"):
        sec = parser["voltage"]
        for key in sec:
            if key in _TIMING_KEYS:
                timing_kwargs[key] = _take(sec, key, float, None)
            elif key in _VOLT_KEYS:
                volt_kwargs[key] = _take(sec, key, float, None)
            else:
                raise ConfigError(f"unknown key {key!r} in [voltage]")

    sim_kwargs = {}
    analysis = "tran"
    if parser.has_section("simulation"):
        sec = parser["simulation"]
        for key in sec:
            if key == "analysis":
                analysis = sec[key]
            elif key == "dt":
                sim_kwargs["dt"] = _take(sec, key, float, None)
            elif key == "trace_decimation":
                sim_kwargs["trace_decimation"] = _take(sec, key, int, None)
            elif key == "switch_control_threshold":
                sim_kwargs["switch_control_threshold"] = _take(sec, key, float, None)
            elif key == "engine":
                sim_kwargs["engine"] = sec[key]
            else:
                raise ConfigError(f"unknown key {key!r} in [simulation]")
    if analysis not in ("tran",):
        raise ConfigError(f"unsupported analysis {analysis!r}: only 'tran' is implemented")

    variation = None
    if parser.has_section("variation"):
        sec = parser["variation"]
        seed = _take(sec, "seed", int, 0)
        sigma = {}
        for key in sec:
            if key == "seed":
                continue
            if not key.startswith("sigma_"):
                raise ConfigError(f"unknown key {key!r} in [variation]")
            sigma[key[len("sigma_"):]] = _take(sec, key, float, 0.0)
        variation = VariationSpec(sigma=sigma, seed=seed)
        try:
            variation.validate()
        except Exception as e:
            raise ConfigError(str(e)) from e

    return RunConfig(
        array=array,
        timing=TimingConfig(**timing_kwargs),
        volts=VoltageConfig(**volt_kwargs),
        sim=SimOptions(**sim_kwargs),
        variation=variation,
        analysis=analysis,
    )
