"""Convergence-curve and dimension-sweep figures from harness CSV files.

Rendering is deterministic for a given CSV and spec: fixed figure geometry,
fixed colors, constant PNG metadata, no timestamps. Input files are never
modified.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

SCHEMA = ["run_id", "k", "metric", "value", "d", "axis_value", "config_hash", "seed"]
BOUND_METRICS = ("kl_bound_fixed", "kl_bound_varying")
_PNG_METADATA = {"Software": "lapd-plots"}


class PlotDataError(Exception):
    """Raised when the CSV lacks the requested columns, metric, or rows."""


@dataclass(frozen=True)
class PlotSpec:
    """What to draw: which metric, how to group the rows, and where to."""

    csv_path: str
    metric: str
    out_path: str
    group_by: str = "run_id"
    logy: bool = False
    threshold: Optional[float] = None


def read_records(csv_path: str) -> list:
    with open(csv_path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != SCHEMA:
            raise PlotDataError(
                f"unexpected CSV columns {reader.fieldnames}, need {SCHEMA}")
        rows = []
        for raw in reader:
            rows.append({
                "run_id": raw["run_id"],
                "k": int(raw["k"]),
                "metric": raw["metric"],
                "value": float(raw["value"]),
                "d": int(raw["d"]),
                "axis_value": raw["axis_value"],
            })
    return rows


def _series(rows, metric, group_by):
    """{group label: ([k...], [value...])} for one metric, k ascending."""
    groups = {}
    for r in rows:
        if r["metric"] != metric:
            continue
        groups.setdefault(r[group_by], []).append((r["k"], r["value"]))
    return {g: tuple(zip(*sorted(pts))) for g, pts in groups.items()}


def _group_sort_key(label):
    try:
        return (0, float(label))
    except ValueError:
        return (1, label)


def plot_convergence(spec: PlotSpec) -> str:
    """One line per group of (k, metric value); bound metrics present in the
    CSV are overlaid as dashed curves. Returns the output path."""
    rows = read_records(spec.csv_path)
    if spec.group_by not in ("run_id", "axis_value"):
        raise PlotDataError(f"cannot group by column {spec.group_by!r}")
    series = _series(rows, spec.metric, spec.group_by)
    if not series:
        raise PlotDataError(f"metric not present in CSV: {spec.metric!r}")

    fig, ax = plt.subplots(figsize=(7.0, 4.5), dpi=120)
    labels = sorted(series, key=_group_sort_key)
    for idx, label in enumerate(labels):
        ks, vals = series[label]
        color = f"C{idx % 10}"
        name = label if label else "run"
        ax.plot(ks, vals, color=color, label=f"{spec.metric} [{name}]")
        for bound in BOUND_METRICS:
            bseries = _series(rows, bound, spec.group_by)
            if label in bseries:
                bks, bvals = bseries[label]
                ax.plot(bks, bvals, color=color, linestyle="--", alpha=0.8,
                        label=f"{bound} [{name}]")
    if spec.logy:
        ax.set_yscale("log")
    ax.set_xlabel("iteration")
    ax.set_ylabel(spec.metric)
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(spec.out_path, metadata=_PNG_METADATA)
    plt.close(fig)
    return spec.out_path


def iterations_to_threshold(rows, metric, threshold, group_by="axis_value"):
    """First recorded k per group at which the metric falls below threshold."""
    series = _series(rows, metric, group_by)
    if not series:
        raise PlotDataError(f"metric not present in CSV: {metric!r}")
    out = {}
    for label, (ks, vals) in series.items():
        crossing = None
        for k, v in zip(ks, vals):
            if v < threshold:
                crossing = k
                break
        out[label] = crossing
    return out


def plot_dimension_sweep(spec: PlotSpec) -> str:
    """Bar chart of iterations-to-threshold per axis value. Groups that never
    cross are drawn hatched at the largest recorded iteration."""
    if spec.threshold is None:
        raise PlotDataError("dimension sweep needs a threshold")
    rows = read_records(spec.csv_path)
    crossings = iterations_to_threshold(rows, spec.metric, spec.threshold)
    labels = sorted(crossings, key=_group_sort_key)
    max_k = max(r["k"] for r in rows)

    fig, ax = plt.subplots(figsize=(7.0, 4.5), dpi=120)
    heights = [crossings[g] if crossings[g] is not None else max_k for g in labels]
    hatches = ["" if crossings[g] is not None else "//" for g in labels]
    bars = ax.bar(range(len(labels)), heights, color="C0", edgecolor="black")
    for bar, hatch in zip(bars, hatches):
        bar.set_hatch(hatch)
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels([g if g else "run" for g in labels])
    ax.set_xlabel("dimension")
    ax.set_ylabel(f"iterations until {spec.metric} < {spec.threshold:g}")
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(spec.out_path, metadata=_PNG_METADATA)
    plt.close(fig)
    return spec.out_path
