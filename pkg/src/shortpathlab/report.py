"""Figure rendering for the report path.

Reads the delimited outputs the CLI produces (sweep/ensemble CSVs) and
renders matplotlib figures to files next to them: worst-case scaling fits,
phase-transition quartiles per n, and overlap-vs-b sweeps.
"""

from __future__ import annotations

import math
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .errors import ValidationError
from .experiment import fit_exponent


def _float(row, col):
    v = row.get(col, "")
    return float(v) if v not in ("", None) else math.nan


def render_scaling_figure(rows, out_path: str,
                          response_column: str = "inv_overlap_opt") -> str:
    """Scatter of the response against feasible size, log-log, with the
    worst-case OLS fit line and its 95% CI band on the exponent."""
    fit = fit_exponent(rows, response_column=response_column)
    sizes = np.array([_float(r, "M") for r in rows])
    if response_column == "inv_overlap_opt":
        resp = np.array([1.0 / _float(r, "overlap_opt") for r in rows])
    elif response_column == "inv_overlap_init":
        resp = np.array([1.0 / _float(r, "overlap_init") for r in rows])
    else:
        resp = np.array([_float(r, response_column) for r in rows])

    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    ax.scatter(sizes, resp, s=8, alpha=0.35, color="tab:blue", label="instances")
    xs = np.array(sorted({p[0] for p in fit.points}))
    ax.plot(2.0**xs, 2.0 ** (fit.intercept + fit.exponent * xs), color="tab:red",
            label=f"worst-case fit, exponent {fit.exponent:.3f} "
                  f"[{fit.ci95[0]:.3f}, {fit.ci95[1]:.3f}]")
    wx = [2.0 ** p[0] for p in fit.points]
    wy = [2.0 ** p[1] for p in fit.points]
    ax.scatter(wx, wy, s=30, color="tab:red", zorder=3)
    ax.set_xscale("log", base=2)
    ax.set_yscale("log", base=2)
    ax.set_xlabel("feasible-space size")
    ax.set_ylabel(response_column.replace("_", " "))
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path


def render_phase_figure(rows, out_path: str) -> str:
    """Quartiles of phase-transition b per n."""
    by_n: dict[int, list[float]] = {}
    for r in rows:
        pb = r.get("phase_b", "")
        if pb in ("", None):
            continue
        by_n.setdefault(int(r["n"]), []).append(float(pb))
    if not by_n:
        raise ValidationError("no phase_b column values to plot")
    ns = sorted(by_n)
    q1 = [np.percentile(by_n[n], 25) for n in ns]
    q2 = [np.percentile(by_n[n], 50) for n in ns]
    q3 = [np.percentile(by_n[n], 75) for n in ns]
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    ax.fill_between(ns, q1, q3, alpha=0.25, color="tab:blue", label="interquartile")
    ax.plot(ns, q2, marker="o", color="tab:blue", label="median")
    ax.set_xlabel("n")
    ax.set_ylabel("phase-transition b")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path


def render_sweep_figure(rows, out_path: str) -> str:
    """Overlap with the initial state and with the optimum versus b."""
    pts = sorted((float(r["b"]), float(r["overlap_init"]), float(r["overlap_opt"]))
                 for r in rows)
    if not pts:
        raise ValidationError("no rows to plot")
    bs = [p[0] for p in pts]
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    ax.plot(bs, [p[1] for p in pts], marker=".", label="overlap with initial state")
    ax.plot(bs, [p[2] for p in pts], marker=".", label="overlap with optimum")
    ax.axhline(0.99, color="gray", lw=0.8, ls=":")
    ax.set_xlabel("b")
    ax.set_ylabel("overlap")
    ax.set_ylim(-0.02, 1.02)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path


def render_report(csv_path: str, out_dir: str | None = None,
                  kinds: tuple[str, ...] = ("scaling", "phase", "sweep")) -> list[str]:
    """Render every figure the CSV supports; returns the written paths."""
    from .experiment import load_rows

    rows = load_rows(csv_path)
    if not rows:
        raise ValidationError(f"{csv_path} has no data rows")
    out_dir = out_dir or os.path.dirname(os.path.abspath(csv_path))
    os.makedirs(out_dir, exist_ok=True)
    stem = os.path.splitext(os.path.basename(csv_path))[0]
    written = []
    if "scaling" in kinds:
        try:
            written.append(render_scaling_figure(
                rows, os.path.join(out_dir, f"{stem}_scaling.png")))
        except ValidationError:
            pass
    if "phase" in kinds:
        try:
            written.append(render_phase_figure(
                rows, os.path.join(out_dir, f"{stem}_phase.png")))
        except ValidationError:
            pass
    if "sweep" in kinds:
        try:
            written.append(render_sweep_figure(
                rows, os.path.join(out_dir, f"{stem}_sweep.png")))
        except ValidationError:
            pass
    return written
