"""Matplotlib renderings of distance records: D_psi horizontal, D_n vertical."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .metrics import DistanceRecord, MetricConvention  # noqa: E402

SCATTER_GID = "distance-points"

_STYLE = {
    "font.size": 11,
    "axes.linewidth": 0.8,
    "xtick.direction": "in",
    "ytick.direction": "in",
    "svg.fonttype": "none",
    # Fixed salt so SVG element ids do not change between runs.
    "svg.hashsalt": "qmetrics",
}


def _axis_labels(ax, convention: MetricConvention | None):
    suffix = ""
    if convention is not None and convention.mode == "unit_normalized":
        suffix = " (normalised)"
    ax.set_xlabel(r"$D_\psi$" + suffix)
    ax.set_ylabel(r"$D_n$" + suffix)


def _save(fig, path: Path) -> None:
    # Drop timestamps/version stamps so re-runs give identical files.
    metadata = {".svg": {"Date": None}, ".png": {"Software": None}}.get(path.suffix)
    fig.savefig(path, metadata=metadata)
    plt.close(fig)


def distance_figure(
    records: Sequence[DistanceRecord],
    path: str | Path,
    slope: float | None = None,
    title: str = "",
) -> Path:
    """Scatter of the records plus the dashed through-origin line."""
    convention = records[0].convention if records else None
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(4.5, 4.0), layout="constrained")
        if records:
            xs = [r.D_psi for r in records]
            ys = [r.D_n for r in records]
            points = ax.scatter(xs, ys, s=14, marker="x", color="black", linewidths=0.9)
            points.set_gid(SCATTER_GID)
        xmax = convention.max_wavefunction_distance if convention else 1.0
        ymax = convention.max_density_distance if convention else 1.0
        if slope is not None:
            ax.plot([0, xmax], [0, slope * xmax], "k--", lw=1.0, label=f"y = {slope:.3f}x")
            ax.legend(loc="upper left", frameon=False)
        ax.set_xlim(0, xmax * 1.02)
        ax.set_ylim(0, ymax * 1.02)
        _axis_labels(ax, convention)
        if title:
            ax.set_title(title)
        _save(fig, Path(path))
    return Path(path)


def trails_figure(
    trails: Mapping[str, Sequence[DistanceRecord]],
    path: str | Path,
    slope: float,
    title: str = "",
) -> Path:
    """Time trails in red, t = 0 points as black crosses, ground-state line dashed."""
    first = next((t[0] for t in trails.values() if t), None)
    convention = first.convention if first else None
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(4.5, 4.0), layout="constrained")
        for trail in trails.values():
            ax.plot([r.D_psi for r in trail], [r.D_n for r in trail], "-", color="tab:red", lw=0.8, alpha=0.8)
        starts = [t[0] for t in trails.values() if t]
        if starts:
            points = ax.scatter(
                [r.D_psi for r in starts], [r.D_n for r in starts], s=30, marker="x", color="black", zorder=3
            )
            points.set_gid(SCATTER_GID)
        xmax = convention.max_wavefunction_distance if convention else 1.0
        ymax = convention.max_density_distance if convention else 1.0
        ax.plot([0, xmax], [0, slope * xmax], "k--", lw=1.0, label=f"y = {slope:.3f}x")
        ax.legend(loc="upper left", frameon=False)
        ax.set_xlim(0, xmax * 1.02)
        ax.set_ylim(0, ymax * 1.02)
        _axis_labels(ax, convention)
        if title:
            ax.set_title(title)
        _save(fig, Path(path))
    return Path(path)


def potentials_figure(curves: Mapping[str, tuple], path: str | Path) -> Path:
    """Potentials shifted so each ground energy sits at zero (dotted line)."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(5.0, 3.5), layout="constrained")
        for label, (x, v) in curves.items():
            ax.plot(x, v, lw=1.0, label=label)
        ax.axhline(0.0, ls=":", color="black", lw=0.8)
        ax.set_xlabel("x (a.u.)")
        ax.set_ylabel(r"$V(x) - E_0$ (a.u.)")
        ax.set_ylim(-1.0, 1.5)
        _save(fig, Path(path))
    return Path(path)
