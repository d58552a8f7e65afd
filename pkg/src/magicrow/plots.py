"""Report figures, rendered straight to files (headless backend)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .energy import EnergyReport
from .schedule import PHASE_KINDS, PhaseKind

_PHASE_COLORS = {
    PhaseKind.LOAD: "#4c72b0",
    PhaseKind.INIT: "#dd8452",
    PhaseKind.REINIT: "#c44e52",
    PhaseKind.EXEC: "#55a868",
    PhaseKind.READ: "#8172b3",
}

# keep window shading readable: beyond this many windows only reinit
# windows are highlighted
_MAX_SHADED_WINDOWS = 64


def save_cumulative_energy_figure(report: EnergyReport, path) -> None:
    """Cumulative device energy over time with phase windows shaded."""
    fig, ax = plt.subplots(figsize=(9, 4.5))
    t = report.sample_times * 1e9
    ax.plot(t, report.cumulative * 1e12, color="black", lw=1.2)
    starts = report.window_starts
    ends = np.append(starts[1:], report.sample_times[-1] if t.size else 0.0)
    shade_all = len(starts) <= _MAX_SHADED_WINDOWS
    seen = set()
    for ws, we, kind in zip(starts, ends, report.window_kinds):
        k = PhaseKind(kind)
        if not shade_all and k != PhaseKind.REINIT:
            continue
        label = k.label if k not in seen else None
        seen.add(k)
        ax.axvspan(ws * 1e9, we * 1e9, color=_PHASE_COLORS[k], alpha=0.18, label=label)
    ax.set_xlabel("time (ns)")
    ax.set_ylabel("cumulative energy (pJ)")
    title = report.metadata.get("plan", "")
    pattern = report.metadata.get("pattern", "")
    ax.set_title(f"cumulative device energy {title} {pattern}".strip())
    if seen:
        ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_phase_breakdown_figure(report: EnergyReport, path) -> None:
    """Per-phase energy totals as a log-scale bar chart."""
    totals = report.per_phase_totals
    fig, ax = plt.subplots(figsize=(6, 4))
    labels = [k.label for k in PHASE_KINDS]
    colors = [_PHASE_COLORS[k] for k in PHASE_KINDS]
    floor = 1e-18
    ax.bar(labels, np.maximum(totals, floor) * 1e12, color=colors)
    ax.set_yscale("log")
    ax.set_ylabel("energy (pJ)")
    title = report.metadata.get("plan", "")
    ax.set_title(f"energy by phase {title}".strip())
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_energy_table_figure(rows: list[dict], path) -> None:
    """Grouped exec/init/total bars per circuit and pattern (log scale)."""
    if not rows:
        fig, ax = plt.subplots(figsize=(5, 3))
        ax.set_title("no circuits")
        fig.savefig(path, dpi=150)
        plt.close(fig)
        return
    circuits = [r["circuit"] for r in rows]
    patterns = sorted({key.split("_")[0] for r in rows for key in r if key.endswith("_total_J")})
    fig, ax = plt.subplots(figsize=(max(6, 1.6 * len(circuits) * len(patterns)), 4.5))
    x = np.arange(len(circuits), dtype=float)
    width = 0.8 / max(1, 3 * len(patterns))
    floor = 1e-18
    offset = 0
    for pat in patterns:
        for part, alpha in (("exec", 1.0), ("init", 0.7), ("total", 0.4)):
            vals = [max(float(r.get(f"{pat}_{part}_J", 0.0)), floor) * 1e12 for r in rows]
            ax.bar(x + offset * width, vals, width, alpha=alpha, label=f"{pat} {part}")
            offset += 1
    ax.set_xticks(x + 0.4)
    ax.set_xticklabels(circuits)
    ax.set_yscale("log")
    ax.set_ylabel("energy (pJ)")
    ax.legend(fontsize=7, ncol=3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
