"""Plain-text run reports: bound tables, replay summaries, comparisons."""

from __future__ import annotations

import io

import numpy as np

from .boxes import BoxSet
from .rccd import RolloutResult
from .scenario import DESIGN_KEYS

UNITS = {
    "C_c": "kJ/K",
    "C_h": "kJ/K",
    "T_f": "C",
    "R_s": "K/kW",
    "M_f0": "kg",
    "M_r0": "kg",
    "T_h0": "C",
    "T_c0": "C",
    "T_r0": "C",
    "mdot_f0": "kg/s",
    "mdot_r0": "kg/s",
}

STATE_LABELS = ("M_f", "M_r", "T_h", "T_c", "T_r")


def _num(v: float) -> str:
    return f"{v:.4g}"


def design_table(bounds: BoxSet, columns: dict[str, np.ndarray], J_values: dict[str, float]) -> str:
    """Bounds-and-optima table, one column of optima per algorithm."""
    names = list(columns)
    widths = [16, 6, 12, 12] + [max(10, len(n) + 2) for n in names]
    headers = ["Design variable", "Units", "Lower bound", "Upper bound"] + names
    buf = io.StringIO()

    def row(cells):
        buf.write("  ".join(str(c).ljust(w) for c, w in zip(cells, widths)).rstrip() + "\n")

    row(headers)
    row(["-" * w for w in widths])
    for i, key in enumerate(DESIGN_KEYS):
        cells = [key, UNITS[key], _num(bounds.lower[i]), _num(bounds.upper[i])]
        cells += [_num(float(columns[n][i])) for n in names]
        row(cells)
    row(["-" * w for w in widths])
    cells = ["J_sys = M_sys", "kg", "", ""] + [_num(J_values[n]) for n in names]
    row(cells)
    return buf.getvalue()


def violation_summary(rollout: RolloutResult, label: str) -> str:
    """Count, worst excess, and step indices of state-box violations."""
    viol = rollout.state_violation
    buf = io.StringIO()
    buf.write(f"{label}: ")
    if viol.size == 0 or not np.any(viol > 0):
        buf.write("no state-constraint violations\n")
        return buf.getvalue()
    step_mask = np.any(viol > 0, axis=1)
    buf.write(f"{int(step_mask.sum())} violating steps, max excess {np.max(viol):.4g}\n")
    for j, name in enumerate(STATE_LABELS):
        col = viol[:, j]
        if np.any(col > 0):
            ks = np.flatnonzero(col > 0) + 1
            shown = ", ".join(map(str, ks[:12])) + (", ..." if ks.size > 12 else "")
            buf.write(f"  {name}: {ks.size} steps (k = {shown}), max excess {np.max(col):.4g}\n")
    return buf.getvalue()


def compare_report(
    bounds: BoxSet,
    columns: dict[str, np.ndarray],
    J_values: dict[str, float],
    replay_summaries: list[str],
) -> str:
    buf = io.StringIO()
    buf.write("Optimal system designs\n\n")
    buf.write(design_table(bounds, columns, J_values))
    if {"OL CCD", "rCCD"} <= set(J_values):
        gap = (J_values["rCCD"] - J_values["OL CCD"]) / J_values["OL CCD"] * 100.0
        buf.write(f"\nObjective gap (rCCD vs OL CCD): {gap:+.2f}%\n")
    if replay_summaries:
        buf.write("\nReplay violation tallies\n")
        for s in replay_summaries:
            buf.write("  " + s.replace("\n", "\n  ").rstrip() + "\n")
    return buf.getvalue()
