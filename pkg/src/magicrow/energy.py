"""Energy reporting: package the online-accumulated per-device integrals
into phase-attributed reports, compare against the coarse per-gate
estimator, and serialize.

Device energy is the time integral of terminal voltage times current,
rectangle rule on the solver grid, attributed to the phase window each step
falls in. Relay dissipation and source-delivered energy are tracked
separately so the books balance: sum(source) = sum(device) + sum(switch).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .mapping import ExecutionPlan
from .schedule import PHASE_KINDS, PhaseKind
from .sim import SimResult

PHASE_LABELS = tuple(k.label for k in PHASE_KINDS)


@dataclass(frozen=True)
class EnergyReport:
    """Per-device, per-phase energy (J) for one run."""

    device_energy: np.ndarray  # [device, PhaseKind]
    switch_energy: np.ndarray  # [PhaseKind]
    source_energy: np.ndarray  # [PhaseKind]
    window_energy: np.ndarray  # device total per phase window, timeline order
    window_kinds: tuple
    window_tags: tuple
    window_starts: np.ndarray
    sample_times: np.ndarray
    cumulative: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __eq__(self, other):
        if not isinstance(other, EnergyReport):
            return NotImplemented
        return (
            np.array_equal(self.device_energy, other.device_energy)
            and np.array_equal(self.switch_energy, other.switch_energy)
            and np.array_equal(self.source_energy, other.source_energy)
            and np.array_equal(self.window_energy, other.window_energy)
            and self.window_kinds == other.window_kinds
            and self.window_tags == other.window_tags
            and np.array_equal(self.window_starts, other.window_starts)
            and np.array_equal(self.sample_times, other.sample_times)
            and np.array_equal(self.cumulative, other.cumulative)
            and self.metadata == other.metadata
        )

    @property
    def n_devices(self) -> int:
        return self.device_energy.shape[0]

    @property
    def per_phase_totals(self) -> np.ndarray:
        return self.device_energy.sum(axis=0)

    @property
    def per_device_totals(self) -> np.ndarray:
        return self.device_energy.sum(axis=1)

    @property
    def grand_total(self) -> float:
        return float(self.device_energy.sum())

    def phase_total(self, kind: PhaseKind) -> float:
        return float(self.device_energy[:, kind].sum())

    @property
    def switch_overhead(self) -> float:
        return float(self.switch_energy.sum())

    @property
    def source_total(self) -> float:
        return float(self.source_energy.sum())


def integrate_energy(result: SimResult, metadata: dict | None = None) -> EnergyReport:
    """Package a run's online accumulators into a report.

    The integration itself happened at full rate inside run_transient; this
    only attaches metadata and freezes the arrays.
    """
    raw = result.energy
    return EnergyReport(
        device_energy=raw.device_kind.copy(),
        switch_energy=raw.switch_kind.copy(),
        source_energy=raw.source_kind.copy(),
        window_energy=raw.window.copy(),
        window_kinds=tuple(int(k) for k in raw.window_kinds),
        window_tags=tuple(raw.window_tags),
        window_starts=raw.window_starts.copy(),
        sample_times=raw.sample_times.copy(),
        cumulative=raw.cumulative.copy(),
        metadata=dict(metadata or {}),
    )


@dataclass(frozen=True)
class CoarseEstimate:
    """Average-energy-per-gate times gate-count approximation."""

    e_not_avg: float
    e_nor_avg: float
    count_not: int
    count_nor: int

    @property
    def total(self) -> float:
        return self.count_not * self.e_not_avg + self.count_nor * self.e_nor_avg


def coarse_estimate(plan: ExecutionPlan, e_not_avg: float, e_nor_avg: float) -> CoarseEstimate:
    if e_not_avg < 0 or e_nor_avg < 0:
        raise ValueError("per-gate average energies must be >= 0")
    return CoarseEstimate(
        e_not_avg=e_not_avg,
        e_nor_avg=e_nor_avg,
        count_not=plan.not_count,
        count_nor=plan.nor_count,
    )


@dataclass(frozen=True)
class EnergyComparison:
    """Fine-grained vs coarse totals, and what the coarse method misses."""

    fine_exec_total: float
    coarse_total: float
    uncovered: float  # load + init + reinit + read: invisible to the coarse method

    @property
    def ratio(self):
        if self.coarse_total == 0:
            return None
        return self.fine_exec_total / self.coarse_total


def compare(report: EnergyReport, coarse: CoarseEstimate) -> EnergyComparison:
    exec_total = report.phase_total(PhaseKind.EXEC)
    return EnergyComparison(
        fine_exec_total=exec_total,
        coarse_total=coarse.total,
        uncovered=report.grand_total - exec_total,
    )


def export_report_csv(report: EnergyReport, path) -> None:
    """Rows of (device, phase, energy_J), every phase kind per device."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["device", "phase", "energy_J"])
        for d in range(report.n_devices):
            for kind in PHASE_KINDS:
                writer.writerow([d, kind.label, str(report.device_energy[d, kind])])


def export_cumulative_csv(report: EnergyReport, path) -> None:
    """Time series rows of (time, cumulative_J, phase)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time", "cumulative_J", "phase"])
        if report.sample_times.size == 0:
            return
        wins = np.searchsorted(report.window_starts, report.sample_times, side="right") - 1
        wins = np.clip(wins, 0, len(report.window_kinds) - 1)
        for s in range(report.sample_times.shape[0]):
            writer.writerow(
                [
                    str(float(report.sample_times[s])),
                    str(float(report.cumulative[s])),
                    PhaseKind(report.window_kinds[wins[s]]).label,
                ]
            )


def export_report_json(report: EnergyReport, path) -> None:
    doc = {
        "metadata": report.metadata,
        "phase_labels": list(PHASE_LABELS),
        "device_energy": [[float(x) for x in row] for row in report.device_energy],
        "switch_energy": [float(x) for x in report.switch_energy],
        "source_energy": [float(x) for x in report.source_energy],
        "window_energy": [float(x) for x in report.window_energy],
        "window_kinds": list(report.window_kinds),
        "window_tags": list(report.window_tags),
        "window_starts": [float(x) for x in report.window_starts],
        "sample_times": [float(x) for x in report.sample_times],
        "cumulative": [float(x) for x in report.cumulative],
        "totals": {
            "grand_total": report.grand_total,
            "per_phase": {
                kind.label: float(report.per_phase_totals[kind]) for kind in PHASE_KINDS
            },
            "switch_overhead": report.switch_overhead,
            "source_total": report.source_total,
        },
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_report_json(path) -> EnergyReport:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    return EnergyReport(
        device_energy=np.array(doc["device_energy"], dtype=np.float64).reshape(
            -1, len(PHASE_KINDS)
        ),
        switch_energy=np.array(doc["switch_energy"], dtype=np.float64),
        source_energy=np.array(doc["source_energy"], dtype=np.float64),
        window_energy=np.array(doc["window_energy"], dtype=np.float64),
        window_kinds=tuple(doc["window_kinds"]),
        window_tags=tuple(doc["window_tags"]),
        window_starts=np.array(doc["window_starts"], dtype=np.float64),
        sample_times=np.array(doc["sample_times"], dtype=np.float64),
        cumulative=np.array(doc["cumulative"], dtype=np.float64),
        metadata=doc["metadata"],
    )
