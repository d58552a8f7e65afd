"""Compile an execution plan into a drive timeline.

Every cycle occupies one fixed-period window (rise + pulse top + fall + idle
gap). The timeline is: one Load cycle, one cycle per sequence entry, then one
Read cycle per device:

  * Load   -- input columns holding a 1 are pulsed at v_input in parallel
              (their switches and the row-ground switch close); 0-inputs are
              left untouched, devices power up in HRS.
  * Init   -- the first sequence Init: listed columns pulsed at v_init,
              row grounded. Later Init entries are tagged Reinit.
  * Exec   -- NOT/NOR: operand columns pulsed at v_op, the output column held
              at 0 V through its closed switch, row-ground switch left open
              so the row node floats to the divider voltage.
  * Read   -- one device per cycle at v_read, row grounded; sequential so
              each sensed current is unambiguous.

Output is a `Schedule`: phase windows tiling [0, total_time), one drive
waveform per column, one control waveform per column switch, and the
row-ground switch control waveform. The same waveforms are both rendered to
PWL text files for the exported testbench and sampled directly by the
built-in transient engine, so the two describe the identical experiment.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum, IntEnum

import numpy as np

from .mapping import ExecutionPlan, InitOp, op_operands, op_output


class ScheduleError(Exception):
    pass


@dataclass(frozen=True)
class TimingConfig:
    """Pulse shape and cycle spacing, seconds."""

    pulse_width: float = 1.3e-9
    rise: float = 1e-12
    fall: float = 1e-12
    gap: float = 0.5e-9

    def validate(self) -> None:
        if self.pulse_width <= 0 or self.rise <= 0 or self.fall <= 0:
            raise ScheduleError("pulse_width, rise and fall must all be > 0")
        if self.gap < 0:
            raise ScheduleError("gap must be >= 0")

    @property
    def cycle_period(self) -> float:
        return self.rise + self.pulse_width + self.fall + self.gap


@dataclass(frozen=True)
class VoltageConfig:
    """Drive levels, volts."""

    v_input: float = 2.0
    v_init: float = 2.0
    v_op: float = 1.0
    v_read: float = 0.2
    v_switch_on: float = 2.0
    v_switch_off: float = 0.0

    def validate(self) -> None:
        if not (self.v_read < self.v_op < self.v_init):
            raise ScheduleError(
                f"need v_read < v_op < v_init, got {self.v_read}, {self.v_op}, {self.v_init}"
            )
        if not (self.v_switch_on > self.v_switch_off):
            raise ScheduleError("v_switch_on must exceed v_switch_off")


@dataclass(frozen=True)
class Waveform:
    """Piecewise-linear (time, value) samples; linearly interpolated between."""

    points: tuple[tuple[float, float], ...]

    def validate(self) -> None:
        if not self.points:
            raise ScheduleError("waveform needs at least one point")
        if self.points[0][0] != 0.0:
            raise ScheduleError("waveform must start at t = 0")
        times = [t for t, _ in self.points]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ScheduleError("waveform times must be strictly increasing")

    def value_at(self, t: float) -> float:
        times = np.array([p[0] for p in self.points])
        values = np.array([p[1] for p in self.points])
        return float(np.interp(t, times, values))

    def sample(self, times) -> np.ndarray:
        xs = np.array([p[0] for p in self.points])
        ys = np.array([p[1] for p in self.points])
        return np.interp(times, xs, ys)

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return tuple(p[0] for p in self.points)


def _quantize(t: float) -> float:
    """Snap times onto a 1 fs grid: kills float-sum artifacts in breakpoints
    so rendered PWL files stay clean and phase/waveform boundaries agree."""
    return round(t * 1e15) / 1e15


class _WaveBuilder:
    """Accumulates trapezoid pulses over a constant baseline."""

    def __init__(self, baseline: float = 0.0):
        self.baseline = baseline
        self.points: list[tuple[float, float]] = [(0.0, baseline)]

    def _append(self, t: float, v: float):
        t = _quantize(t)
        last_t, last_v = self.points[-1]
        if t == last_t:
            if v != last_v:
                raise ScheduleError(f"conflicting waveform values at t={t}: {last_v} vs {v}")
            return  # drop duplicate corner at a cycle join
        if t < last_t:
            raise ScheduleError("pulses must be appended in time order")
        self.points.append((t, v))

    def add_pulse(self, t_start: float, timing: TimingConfig, amplitude: float):
        if amplitude == self.baseline:
            return  # flat: the baseline already covers it
        t0 = t_start
        self._append(t0, self.baseline)
        self._append(t0 + timing.rise, amplitude)
        self._append(t0 + timing.rise + timing.pulse_width, amplitude)
        self._append(t0 + timing.rise + timing.pulse_width + timing.fall, self.baseline)

    def finish(self, total_time: float) -> Waveform:
        self._append(total_time, self.baseline)
        wave = Waveform(points=tuple(self.points))
        wave.validate()
        return wave


class PhaseKind(IntEnum):
    LOAD = 0
    INIT = 1
    REINIT = 2
    EXEC = 3
    READ = 4

    @property
    def label(self) -> str:
        return self.name.lower()


PHASE_KINDS = tuple(PhaseKind)


@dataclass(frozen=True)
class PhaseWindow:
    kind: PhaseKind
    cycle_index: int
    t_start: float
    t_end: float
    touched_devices: tuple[int, ...]
    tag: str  # "load", the sequence T-label, or "read<i>"


@dataclass(frozen=True)
class Schedule:
    """The compiled timeline; immutable, safe to share between runs."""

    n_columns: int
    phases: tuple[PhaseWindow, ...]
    column_waveforms: tuple[Waveform, ...]
    row_ground_switch_waveform: Waveform
    column_switch_waveforms: tuple[Waveform, ...]
    total_time: float
    timing: TimingConfig
    volts: VoltageConfig

    def phases_of_kind(self, kind: PhaseKind) -> tuple[PhaseWindow, ...]:
        return tuple(p for p in self.phases if p.kind == kind)

    def read_measurement_time(self, phase: PhaseWindow) -> float:
        """Mid-flat-top instant of a phase: steady-state sampling point."""
        return phase.t_start + self.timing.rise + 0.5 * self.timing.pulse_width


@dataclass(frozen=True)
class InputPattern:
    bits: tuple[int, ...]
    name: str = ""

    def __post_init__(self):
        for b in self.bits:
            if b not in (0, 1):
                raise ScheduleError(f"pattern bits must be 0/1, got {b!r}")


class PatternKind(Enum):
    ALL_ZEROS = "I1"
    ALL_ONES = "I2"
    ALTERNATING = "I3"


def make_pattern(kind: PatternKind, n_inputs: int) -> InputPattern:
    """The three canonical stimulus patterns: all 0s, all 1s, alternating from 1."""
    if n_inputs < 0:
        raise ScheduleError("n_inputs must be >= 0")
    if kind == PatternKind.ALL_ZEROS:
        bits = (0,) * n_inputs
    elif kind == PatternKind.ALL_ONES:
        bits = (1,) * n_inputs
    else:
        bits = tuple((i + 1) % 2 for i in range(n_inputs))
    return InputPattern(bits=bits, name=kind.value)


def parse_pattern(text: str, n_inputs: int) -> InputPattern:
    """CLI pattern syntax: I1 | I2 | I3 | a literal bit string like '10'."""
    for kind in PatternKind:
        if text.upper() == kind.value:
            return make_pattern(kind, n_inputs)
    if text and all(c in "01" for c in text):
        bits = tuple(int(c) for c in text)
        if len(bits) != n_inputs:
            raise ScheduleError(
                f"pattern {text!r} has {len(bits)} bits but the plan has {n_inputs} inputs"
            )
        return InputPattern(bits=bits, name=text)
    raise ScheduleError(f"bad pattern {text!r}: expected I1, I2, I3 or a 0/1 string")


@dataclass(frozen=True)
class _CycleSpec:
    kind: PhaseKind
    drives: dict  # device -> amplitude (V); only listed columns are driven
    closed_switches: frozenset
    row_grounded: bool
    touched: tuple[int, ...]
    tag: str


def _cycle_specs(plan: ExecutionPlan, pattern: InputPattern, volts: VoltageConfig):
    specs = []
    driven_inputs = tuple(
        sig.device for sig, bit in zip(plan.inputs, pattern.bits) if bit == 1
    )
    specs.append(
        _CycleSpec(
            kind=PhaseKind.LOAD,
            drives={d: volts.v_input for d in driven_inputs},
            closed_switches=frozenset(driven_inputs),
            row_grounded=True,
            touched=driven_inputs,
            tag="load",
        )
    )
    for i, (label, op) in enumerate(plan.sequence):
        if isinstance(op, InitOp):
            targets = tuple(t.device for t in op.targets)
            specs.append(
                _CycleSpec(
                    kind=PhaseKind.INIT if i == 0 else PhaseKind.REINIT,
                    drives={d: volts.v_init for d in targets},
                    closed_switches=frozenset(targets),
                    row_grounded=True,
                    touched=targets,
                    tag=label,
                )
            )
        else:
            ins = tuple(s.device for s in op_operands(op))
            out = op_output(op).device
            drives = {d: volts.v_op for d in ins}
            drives[out] = 0.0
            specs.append(
                _CycleSpec(
                    kind=PhaseKind.EXEC,
                    drives=drives,
                    closed_switches=frozenset((*ins, out)),
                    row_grounded=False,
                    touched=(*ins, out),
                    tag=label,
                )
            )
    for d in range(plan.row_size):
        specs.append(
            _CycleSpec(
                kind=PhaseKind.READ,
                drives={d: volts.v_read},
                closed_switches=frozenset((d,)),
                row_grounded=True,
                touched=(d,),
                tag=f"read{d}",
            )
        )
    return specs


def build_schedule(
    plan: ExecutionPlan,
    pattern: InputPattern,
    timing: TimingConfig | None = None,
    volts: VoltageConfig | None = None,
) -> Schedule:
    """Compile plan + stimulus into the full drive/control timeline.

    total_time = (1 + len(sequence) + row_size) * cycle_period.
    """
    timing = timing or TimingConfig()
    volts = volts or VoltageConfig()
    timing.validate()
    volts.validate()
    if len(pattern.bits) != len(plan.inputs):
        raise ScheduleError(
            f"pattern has {len(pattern.bits)} bits but the plan has {len(plan.inputs)} inputs"
        )

    specs = _cycle_specs(plan, pattern, volts)
    period = timing.cycle_period
    total_time = _quantize(len(specs) * period)
    n = plan.row_size

    col_builders = [_WaveBuilder(0.0) for _ in range(n)]
    sw_builders = [_WaveBuilder(volts.v_switch_off) for _ in range(n)]
    row_builder = _WaveBuilder(volts.v_switch_off)
    phases = []

    for ci, spec in enumerate(specs):
        t0 = _quantize(ci * period)
        for dev, amp in spec.drives.items():
            col_builders[dev].add_pulse(t0, timing, amp)
        for dev in spec.closed_switches:
            sw_builders[dev].add_pulse(t0, timing, volts.v_switch_on)
        if spec.row_grounded:
            row_builder.add_pulse(t0, timing, volts.v_switch_on)
        phases.append(
            PhaseWindow(
                kind=spec.kind,
                cycle_index=ci,
                t_start=t0,
                t_end=_quantize((ci + 1) * period),
                touched_devices=spec.touched,
                tag=spec.tag,
            )
        )

    return Schedule(
        n_columns=n,
        phases=tuple(phases),
        column_waveforms=tuple(b.finish(total_time) for b in col_builders),
        row_ground_switch_waveform=row_builder.finish(total_time),
        column_switch_waveforms=tuple(b.finish(total_time) for b in sw_builders),
        total_time=total_time,
        timing=timing,
        volts=volts,
    )


def _fmt(x: float) -> str:
    """Shortest round-trip float text ('0.0', '1e-12', '1.302e-09')."""
    return str(float(x))


def render_pwl(waveform: Waveform) -> str:
    """One 'time value' pair per line, as PWL source file content."""
    waveform.validate()
    return "".join(f"{_fmt(t)} {_fmt(v)}\n" for t, v in waveform.points)
