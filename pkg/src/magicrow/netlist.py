"""Spectre-compatible artifact tree for the exported testbench.

Emits one file per block, aggregated by main.scs:

    crossbar.scs   -- row subcircuit (one device per column) + instantiation
    switches.scs   -- relay per row/column pin, voltage-controlled
    sources.scs    -- PWL-file-driven sources for every drive/control pin
    simparams.scs  -- model include, input/variation parameters, saves, tran
    energy.ocn     -- per-device energy integral expressions + total
    pwl/*.txt      -- the waveform files (r0, c<i>, s<i>)

Texts are deterministic: identical inputs re-emit byte-identical files, and
the committed goldens rely on that. Structural fidelity to the Spectre
netlist dialect is guaranteed; acceptance by any particular simulator
version is not (nothing here runs one).

The device's third terminal (n<i>) observes state and carries no current;
it only appears in instance pin lists and save directives.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from .device import _VARIATION_FIELDS, VariationSpec, VteamParams, sample_varied_params
from .mapping import ExecutionPlan
from .schedule import InputPattern, Schedule, render_pwl


class EmitError(Exception):
    pass


@dataclass(frozen=True)
class EmitConfig:
    output_dir: str = "out"
    model_include_path: str = "./models/vteam.va"
    subckt_name: str = "crossbar_sub"
    instance_prefix: str = "crossbar0"
    node_prefix: str = "sub0"
    switch_open_resistance: float = 1e12
    switch_closed_resistance: float = 1.0
    sim_step: float = 1e-12

    def validate(self) -> None:
        if not self.switch_open_resistance > 100 * self.switch_closed_resistance:
            raise EmitError("switch open resistance must dwarf the closed resistance")


def _num(x: float) -> str:
    return str(float(x))


def _ohms(x: float) -> str:
    """Engineering notation with Spectre SI suffixes ('1T'); plain floats below 1k."""
    for suffix, scale in (("T", 1e12), ("G", 1e9), ("M", 1e6), ("K", 1e3)):
        if x >= scale:
            return f"{x / scale:g}{suffix}"
    return _num(x)


def _volts_of_bit(bit: int, v_input: float) -> str:
    v = v_input * bit
    return str(int(v)) if float(v).is_integer() else _num(v)


def variation_assignments(
    nominal: VteamParams, spec: VariationSpec | None, n_columns: int
) -> tuple[dict, tuple]:
    """Per-device sampled values for every varied field, plus the field names.

    Returns ({'var_<field>_<device>': value}, varied_field_names); empty when
    variation is off.
    """
    if spec is None or not spec.is_active:
        return {}, ()
    varied = tuple(f for f in _VARIATION_FIELDS if spec.sigma.get(f, 0.0) > 0)
    assignments = {}
    for d in range(n_columns):
        sampled = sample_varied_params(nominal, spec, d)
        for f in varied:
            assignments[f"var_{f}_{d}"] = getattr(sampled, f)
    return assignments, varied


def emit_crossbar_subckt(
    n_columns: int,
    params: VteamParams,
    config: EmitConfig,
    varied_fields: tuple = (),
) -> str:
    """Row subcircuit with pins r0, c0..c(n-1), plus its instantiation."""
    if n_columns < 1:
        raise EmitError("need at least one column")
    pins = " ".join(f"c{i}" for i in range(n_columns))
    lines = ["// memristor row: one device from each column pin to the shared row"]
    lines.append(f"subckt {config.subckt_name} r0 {pins}")
    for i in range(n_columns):
        assigns = []
        for f in _VARIATION_FIELDS:
            if f in varied_fields:
                assigns.append(f"{f}=var_{f}_{i}")
            else:
                assigns.append(f"{f}={_num(getattr(params, f))}")
        lines.append(f"I{i} (r0 c{i} n{i}) VTEAM_model " + " ".join(assigns))
    lines.append(f"ends {config.subckt_name}")
    lines.append("// call the subcircuit for the peripherals")
    nodes = " ".join(
        [f"{config.node_prefix}_r0"]
        + [f"{config.node_prefix}_c{i}" for i in range(n_columns)]
    )
    lines.append(f"{config.instance_prefix} ({nodes}) {config.subckt_name}")
    return "\n".join(lines) + "\n"


def emit_switches(n_columns: int, config: EmitConfig) -> str:
    """n+1 relays: W0 grounds the row, W(i+1) gates column i's drive pin."""
    if n_columns < 1:
        raise EmitError("need at least one column")
    config.validate()
    tail = (
        f"relay ropen={_ohms(config.switch_open_resistance)} "
        f"rclosed={_num(config.switch_closed_resistance)}"
    )
    np_ = config.node_prefix
    lines = ["// relays isolate idle rows and columns each cycle"]
    lines.append(f"W0 (0 {np_}_r0 v_r0 0) {tail}")
    for i in range(n_columns):
        lines.append(f"W{i + 1} (v_c{i} {np_}_c{i} v_s{i} 0) {tail}")
    return "\n".join(lines) + "\n"


def emit_sources(n_columns: int, pwl_dir: str, config: EmitConfig) -> str:
    """One PWL vsource per control/drive pin: v_r0, v_c<i>, v_s<i>."""
    lines = ["// drive and switch-control sources, waveforms in PWL files"]
    lines.append(f'V0 (v_r0 0) vsource type=pwl file = "{pwl_dir}/r0.txt"')
    for i in range(n_columns):
        lines.append(f'V{i + 1} (v_c{i} 0) vsource type=pwl file = "{pwl_dir}/c{i}.txt"')
    for i in range(n_columns):
        lines.append(
            f'V{n_columns + 1 + i} (v_s{i} 0) vsource type=pwl file = "{pwl_dir}/s{i}.txt"'
        )
    return "\n".join(lines) + "\n"


def emit_sim_params(
    schedule: Schedule,
    pattern: InputPattern,
    variation_params: dict | None,
    config: EmitConfig,
) -> str:
    """Model include, parameters line, per-device saves, and the tran line."""
    lines = [f'ahdl_include "{config.model_include_path}"']
    assigns = [
        f"in{k}={_volts_of_bit(bit, schedule.volts.v_input)}"
        for k, bit in enumerate(pattern.bits)
    ]
    for name, value in (variation_params or {}).items():
        assigns.append(f"{name}={_num(value)}")
    if assigns:
        lines.append("parameters " + " ".join(assigns))
    lines.append("// save every device current for the energy analysis")
    for i in range(schedule.n_columns):
        lines.append(f"save {config.instance_prefix}.I{i}:n")
    step = _num(config.sim_step)
    lines.append(f"tran tran stop={_num(schedule.total_time)} step={step} maxstep={step}")
    return "\n".join(lines) + "\n"


def emit_energy_ocn(n_columns: int, schedule: Schedule, config: EmitConfig) -> str:
    """Per-device energy integrals over the full run, plus the total."""
    t_end = _num(schedule.total_time)
    np_ = config.node_prefix
    lines = ["; per-device dissipation: integral of terminal voltage * current"]
    names = []
    for i in range(n_columns):
        name = f"energy_I{i}"
        names.append(name)
        lines.append(
            f'{name} = integ((VT("/{np_}_c{i}") - VT("/{np_}_r0")) * '
            f'IT("/{config.instance_prefix}.I{i}:n") 0.0 {t_end})'
        )
    lines.append("energy_total = " + " + ".join(names))
    lines.append('printf("energy_total = %g J\\n" energy_total)')
    return "\n".join(lines) + "\n"


def emit_main(config: EmitConfig) -> str:
    lines = [
        "simulator lang=spectre",
        'include "crossbar.scs"',
        'include "switches.scs"',
        'include "sources.scs"',
        'include "simparams.scs"',
    ]
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class EmitManifest:
    netlist_files: tuple
    pwl_files: tuple

    @property
    def all_files(self) -> tuple:
        return (*self.netlist_files, *self.pwl_files)


def render_tree(
    plan: ExecutionPlan,
    pattern: InputPattern,
    schedule: Schedule,
    params: VteamParams,
    config: EmitConfig,
    variation: VariationSpec | None = None,
) -> dict:
    """All file texts keyed by tree-relative path (no disk I/O)."""
    n = plan.row_size
    if schedule.n_columns != n:
        raise EmitError("schedule column count must equal the plan row size")
    var_assigns, varied_fields = variation_assignments(params, variation, n)
    texts = {
        "crossbar.scs": emit_crossbar_subckt(n, params, config, varied_fields),
        "switches.scs": emit_switches(n, config),
        "sources.scs": emit_sources(n, "./pwl", config),
        "simparams.scs": emit_sim_params(schedule, pattern, var_assigns, config),
        "energy.ocn": emit_energy_ocn(n, schedule, config),
        "main.scs": emit_main(config),
        "pwl/r0.txt": render_pwl(schedule.row_ground_switch_waveform),
    }
    for i in range(n):
        texts[f"pwl/c{i}.txt"] = render_pwl(schedule.column_waveforms[i])
        texts[f"pwl/s{i}.txt"] = render_pwl(schedule.column_switch_waveforms[i])
    return texts


def emit_tree(
    plan: ExecutionPlan,
    pattern: InputPattern,
    schedule: Schedule,
    params: VteamParams,
    config: EmitConfig,
    variation: VariationSpec | None = None,
) -> EmitManifest:
    """Write the whole artifact tree under config.output_dir."""
    texts = render_tree(plan, pattern, schedule, params, config, variation)
    problems = lint_tree(texts)
    if problems:
        raise EmitError("netlist lint failed: " + "; ".join(problems))
    out = Path(config.output_dir)
    (out / "pwl").mkdir(parents=True, exist_ok=True)
    netlist_files = []
    pwl_files = []
    for rel, text in texts.items():
        target = out / rel
        with open(target, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        (pwl_files if rel.startswith("pwl/") else netlist_files).append(target)
    return EmitManifest(netlist_files=tuple(netlist_files), pwl_files=tuple(pwl_files))


_VSOURCE_RE = re.compile(r"^V\d+\s+\((\S+)\s+0\)\s+vsource\b")
_RELAY_RE = re.compile(r"^W\d+\s+\((\S+)\s+(\S+)\s+(\S+)\s+0\)\s+relay\b")
_INSTANCE_RE = re.compile(r"^(\S+)\s+\(([^)]*)\)\s+(\S+)\s*$")


def lint_tree(texts: dict) -> list[str]:
    """No-dangling-nets check over the emitted texts.

    Every net a relay touches must be driven exactly once, either by a PWL
    source or by the crossbar instantiation's pin list.
    """
    defined: dict[str, int] = {}

    def define(net):
        defined[net] = defined.get(net, 0) + 1

    for line in texts.get("sources.scs", "").splitlines():
        m = _VSOURCE_RE.match(line)
        if m:
            define(m.group(1))
    for line in texts.get("crossbar.scs", "").splitlines():
        if line.startswith(("//", "subckt", "ends", "I")):
            continue
        m = _INSTANCE_RE.match(line)
        if m:
            for net in m.group(2).split():
                define(net)

    problems = []
    referenced = set()
    for line in texts.get("switches.scs", "").splitlines():
        m = _RELAY_RE.match(line)
        if not m:
            continue
        for net in m.groups():
            if net == "0":
                continue
            referenced.add(net)
            if net not in defined:
                problems.append(f"relay net {net!r} is never driven")
    for net, count in defined.items():
        if count > 1:
            problems.append(f"net {net!r} is driven {count} times")
    return problems
