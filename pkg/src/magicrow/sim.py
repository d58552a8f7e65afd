"""Built-in transient simulation of the single-row crossbar.

The network is the one the emitted netlist describes: every column node
reaches its drive pin through a two-state relay resistance and the shared
row node through its device; the row node reaches ground through the
row relay. Column nodes eliminate onto the row node in closed form, so one
step costs O(n). Drives and relay controls are sampled from the same
waveforms the PWL files are rendered from -- the in-house run and the
exported testbench describe the identical experiment.

Devices all start at the lower state bound (fresh HRS, the power-up
default); ones loaded as logic 1 are SET during the Load phase. Energy is
accumulated online at full rate even when the stored trace is decimated.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from . import _engine
from .device import VteamParams, params_arrays
from .mapping import ExecutionPlan
from .schedule import PhaseKind, Schedule, Waveform

N_PHASE_KINDS = len(PhaseKind)


class SimulationError(Exception):
    pass


@dataclass(frozen=True)
class SimOptions:
    dt: float = 1e-12
    trace_decimation: int = 10
    switch_control_threshold: float = 1.0
    engine: str = "auto"  # auto | jit | python

    def validate(self) -> None:
        if self.dt <= 0:
            raise SimulationError(f"dt must be > 0, got {self.dt}")
        if self.trace_decimation < 1:
            raise SimulationError("trace_decimation must be >= 1")


@dataclass(frozen=True)
class NetworkSnapshot:
    """One solved operating point of the resistive network."""

    row_voltage: float
    column_voltages: np.ndarray
    device_voltages: np.ndarray  # V(column) - V(row), per device
    device_currents: np.ndarray  # positive from column into row
    row_switch_current: float

    @property
    def kcl_residual(self) -> float:
        """|sum of device currents - current leaving through the row switch|."""
        return abs(float(np.sum(self.device_currents)) - self.row_switch_current)


def solve_timestep(
    device_resistances,
    column_drives,
    switch_closed,
    row_switch_closed: bool,
    open_resistance: float = 1e12,
    closed_resistance: float = 1.0,
) -> NetworkSnapshot:
    """Solve the crossbar's resistive network for one instant.

    `column_drives` holds the source voltage per column; None entries mean
    an undriven pin, which is electrically a 0 V source behind the (open)
    switch. `switch_closed` is one flag per column.
    """
    res = np.asarray(device_resistances, dtype=np.float64)
    if np.any(res <= 0):
        raise SimulationError("device resistances must be > 0")
    n = res.shape[0]
    drives = np.array(
        [0.0 if v is None else float(v) for v in column_drives], dtype=np.float64
    )
    if drives.shape[0] != n or len(switch_closed) != n:
        raise SimulationError("drives/switch flags must match the device count")
    sw = np.where(np.asarray(switch_closed, dtype=bool), closed_resistance, open_resistance)
    row_res = closed_resistance if row_switch_closed else open_resistance

    series = sw + res
    inv_series = 1.0 / series
    v_row = float(np.sum(drives * inv_series) / (1.0 / row_res + np.sum(inv_series)))
    i_dev = (drives - v_row) * inv_series
    v_dev = i_dev * res
    return NetworkSnapshot(
        row_voltage=v_row,
        column_voltages=v_row + v_dev,
        device_voltages=v_dev,
        device_currents=i_dev,
        row_switch_current=v_row / row_res,
    )


@dataclass(frozen=True)
class SimTrace:
    """Recorded time series plus the run's final and read-phase outcomes."""

    times: np.ndarray  # decimated sample instants
    w: np.ndarray  # [samples, devices]
    v: np.ndarray  # device voltage
    i: np.ndarray  # device current
    read_currents: np.ndarray  # per device, at its read phase's flat-top midpoint
    read_times: np.ndarray
    read_threshold_currents: np.ndarray  # per device: v_read / sqrt(r_on*r_off)
    final_w: np.ndarray
    final_states: tuple  # to-logic bits after the full run
    dt: float
    decimation: int


def read_states(trace: SimTrace) -> tuple:
    """Per-device bits from the read-phase currents (1 iff at/above threshold)."""
    return tuple(
        1 if trace.read_currents[d] >= trace.read_threshold_currents[d] else 0
        for d in range(trace.read_currents.shape[0])
    )


@dataclass(frozen=True)
class RawEnergy:
    """Online-accumulated energy, J, before report packaging.

    device_kind is indexed [device, PhaseKind]; switch_kind/source_kind hold
    relay dissipation and source-delivered energy per phase kind; window
    holds the device-energy total of each phase window in timeline order.
    """

    device_kind: np.ndarray
    switch_kind: np.ndarray
    source_kind: np.ndarray
    window: np.ndarray
    window_kinds: tuple
    window_tags: tuple
    window_starts: np.ndarray
    sample_times: np.ndarray
    cumulative: np.ndarray  # running device-energy integral at sample_times


@dataclass(frozen=True)
class SimResult:
    trace: SimTrace
    energy: RawEnergy
    max_kcl_residual: float
    schedule: Schedule
    options: SimOptions


def _step_index(t: float, dt: float) -> int:
    """First step at or after time t, robust to float representation."""
    x = t / dt
    r = round(x)
    if abs(x - r) < 1e-6:
        return int(r)
    return int(math.ceil(x))


def _segment_tables(schedule: Schedule, dt: float, n_steps: int):
    """Cut the timeline where any waveform bends or a phase starts.

    Within a segment every waveform is linear, so the kernel only needs a
    (value, slope) pair per segment and column.
    """
    waves: list[Waveform] = [
        *schedule.column_waveforms,
        *schedule.column_switch_waveforms,
        schedule.row_ground_switch_waveform,
    ]
    cuts = [np.array([p.t_start for p in schedule.phases])]
    for wv in waves:
        cuts.append(np.array(wv.breakpoints))
    bounds = np.unique(np.concatenate([*cuts, np.array([0.0, schedule.total_time])]))
    bounds = bounds[(bounds >= 0.0) & (bounds < schedule.total_time)]
    starts = bounds
    ends = np.append(bounds[1:], schedule.total_time)

    k_start = np.array([_step_index(t, dt) for t in starts], dtype=np.int64)
    k_end = np.array([_step_index(t, dt) for t in ends], dtype=np.int64)
    k_end[-1] = n_steps
    keep = k_end > k_start
    starts, ends, k_start, k_end = starts[keep], ends[keep], k_start[keep], k_end[keep]
    n_seg = starts.shape[0]
    n = schedule.n_columns

    col_a = np.empty((n_seg, n))
    col_b = np.empty((n_seg, n))
    sw_a = np.empty((n_seg, n))
    sw_b = np.empty((n_seg, n))
    span = ends - starts
    for j, wv in enumerate(schedule.column_waveforms):
        v0 = wv.sample(starts)
        v1 = wv.sample(ends)
        col_a[:, j] = v0
        col_b[:, j] = (v1 - v0) / span
    for j, wv in enumerate(schedule.column_switch_waveforms):
        v0 = wv.sample(starts)
        v1 = wv.sample(ends)
        sw_a[:, j] = v0
        sw_b[:, j] = (v1 - v0) / span
    rv0 = schedule.row_ground_switch_waveform.sample(starts)
    rv1 = schedule.row_ground_switch_waveform.sample(ends)
    row_a = rv0
    row_b = (rv1 - rv0) / span

    flat = (
        np.all(col_b == 0.0, axis=1) & np.all(sw_b == 0.0, axis=1) & (row_b == 0.0)
    ).astype(np.uint8)

    phase_starts = np.array([p.t_start for p in schedule.phases])
    win = np.searchsorted(phase_starts, starts, side="right") - 1
    kind = np.array([schedule.phases[w].kind for w in win], dtype=np.int64)

    return {
        "k_start": k_start,
        "k_end": k_end,
        "t0": starts,
        "flat": flat,
        "kind": kind,
        "window": win.astype(np.int64),
        "col_a": col_a,
        "col_b": col_b,
        "sw_a": sw_a,
        "sw_b": sw_b,
        "row_a": row_a,
        "row_b": row_b,
    }


def run_transient(
    plan: ExecutionPlan,
    schedule: Schedule,
    params_per_device: list[VteamParams],
    opts: SimOptions | None = None,
    switch_open_resistance: float = 1e12,
    switch_closed_resistance: float = 1.0,
) -> SimResult:
    """Simulate the whole schedule and return trace + online energy."""
    opts = opts or SimOptions()
    opts.validate()
    if schedule.n_columns != plan.row_size:
        raise SimulationError(
            f"schedule has {schedule.n_columns} columns but the plan row size is {plan.row_size}"
        )
    if len(params_per_device) != plan.row_size:
        raise SimulationError(
            f"need one parameter set per device: got {len(params_per_device)} "
            f"for row size {plan.row_size}"
        )
    for p in params_per_device:
        p.validate()

    dt = opts.dt
    n_steps = int(round(schedule.total_time / dt))
    if n_steps < 1:
        raise SimulationError("schedule shorter than one timestep")
    seg = _segment_tables(schedule, dt, n_steps)
    pa = params_arrays(params_per_device)
    n = plan.row_size

    read_phases = schedule.phases_of_kind(PhaseKind.READ)
    meas = []
    for ph in read_phases:
        t = schedule.read_measurement_time(ph)
        k = min(max(_step_index(t, dt), _step_index(ph.t_start, dt)), n_steps - 1)
        meas.append((k, ph.touched_devices[0], t))
    meas.sort()
    meas_k = np.array([m[0] for m in meas], dtype=np.int64)
    meas_dev = np.array([m[1] for m in meas], dtype=np.int64)
    read_times = np.zeros(n)
    for k, d, t in meas:
        read_times[d] = t

    dec = opts.trace_decimation
    n_samp = (n_steps - 1) // dec + 1
    trace_times = np.zeros(n_samp)
    trace_w = np.zeros((n_samp, n))
    trace_v = np.zeros((n_samp, n))
    trace_i = np.zeros((n_samp, n))
    cum_energy = np.zeros(n_samp)
    energy_dev_kind = np.zeros((n, N_PHASE_KINDS))
    energy_switch_kind = np.zeros(N_PHASE_KINDS)
    energy_source_kind = np.zeros(N_PHASE_KINDS)
    window_energy = np.zeros(len(schedule.phases))
    read_currents = np.zeros(n)
    w = pa["w_min"].copy()  # fresh HRS everywhere at t = 0

    kernel = _engine.get_kernel(opts.engine)
    max_resid = kernel(
        dt,
        n_steps,
        seg["k_start"],
        seg["k_end"],
        seg["t0"],
        seg["flat"],
        seg["kind"],
        seg["window"],
        seg["col_a"],
        seg["col_b"],
        seg["sw_a"],
        seg["sw_b"],
        seg["row_a"],
        seg["row_b"],
        pa["v_set"],
        pa["v_reset"],
        pa["k_set"],
        pa["k_reset"],
        pa["alpha_set"],
        pa["alpha_reset"],
        pa["w_min"],
        pa["w_max"],
        pa["r_on"],
        pa["r_off"],
        switch_open_resistance,
        switch_closed_resistance,
        opts.switch_control_threshold,
        w,
        dec,
        meas_k,
        meas_dev,
        trace_times,
        trace_w,
        trace_v,
        trace_i,
        cum_energy,
        energy_dev_kind,
        energy_switch_kind,
        energy_source_kind,
        window_energy,
        read_currents,
    )

    r_threshold = np.sqrt(pa["r_on"] * pa["r_off"])
    read_threshold_currents = schedule.volts.v_read / r_threshold
    # final logic via the resistance threshold, same rule as device.to_logic
    final_res = pa["r_on"] + (pa["r_off"] - pa["r_on"]) * (pa["w_max"] - w) / (
        pa["w_max"] - pa["w_min"]
    )
    final_states = tuple(int(final_res[d] <= r_threshold[d]) for d in range(n))

    trace = SimTrace(
        times=trace_times,
        w=trace_w,
        v=trace_v,
        i=trace_i,
        read_currents=read_currents,
        read_times=read_times,
        read_threshold_currents=read_threshold_currents,
        final_w=w,
        final_states=final_states,
        dt=dt,
        decimation=dec,
    )
    energy = RawEnergy(
        device_kind=energy_dev_kind,
        switch_kind=energy_switch_kind,
        source_kind=energy_source_kind,
        window=window_energy,
        window_kinds=tuple(p.kind for p in schedule.phases),
        window_tags=tuple(p.tag for p in schedule.phases),
        window_starts=np.array([p.t_start for p in schedule.phases]),
        sample_times=trace_times,
        cumulative=cum_energy,
    )
    return SimResult(
        trace=trace,
        energy=energy,
        max_kcl_residual=float(max_resid),
        schedule=schedule,
        options=opts,
    )


def export_trace_csv(trace: SimTrace, path) -> None:
    """Decimated trace as rows of time,device,w,v,i."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time", "device", "w", "v", "i"])
        n_samp, n = trace.w.shape
        for s in range(n_samp):
            t = trace.times[s]
            for d in range(n):
                writer.writerow(
                    [str(t), d, str(trace.w[s, d]), str(trace.v[s, d]), str(trace.i[s, d])]
                )


def export_summary_json(trace: SimTrace, path, extra: dict | None = None) -> None:
    """Final logic states and the read-phase measurements."""
    bits = read_states(trace)
    doc = {
        "final_states": list(trace.final_states),
        "read": [
            {
                "device": d,
                "time": trace.read_times[d],
                "current": trace.read_currents[d],
                "threshold_current": trace.read_threshold_currents[d],
                "bit": bits[d],
            }
            for d in range(trace.read_currents.shape[0])
        ],
    }
    if extra:
        doc.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")
