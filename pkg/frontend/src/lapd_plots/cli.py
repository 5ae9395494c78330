"""CLI: render figures from experiment CSVs.

Exit codes: 0 success, 2 bad input (missing metric or malformed CSV).
"""

from __future__ import annotations

import sys

import click

from .plotting import PlotDataError, PlotSpec, plot_convergence, plot_dimension_sweep


@click.group()
def main():
    """Render convergence and dimension-sweep figures from harness CSV."""


@main.command()
@click.argument("csv_path", type=click.Path(exists=True))
@click.option("--metric", required=True, help="Metric name to plot.")
@click.option("--out", "out_path", required=True, type=click.Path(),
              help="Output PNG path.")
@click.option("--logy", is_flag=True, help="Logarithmic value axis.")
@click.option("--group-by", default="run_id", type=click.Choice(["run_id", "axis_value"]),
              show_default=True, help="Column that separates curves.")
def convergence(csv_path, metric, out_path, logy, group_by):
    """One curve of METRIC per group, with bound overlays when present."""
    spec = PlotSpec(csv_path=csv_path, metric=metric, out_path=out_path,
                    group_by=group_by, logy=logy)
    try:
        path = plot_convergence(spec)
    except PlotDataError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    click.echo(f"wrote {path}")


@main.command()
@click.argument("csv_path", type=click.Path(exists=True))
@click.option("--threshold", required=True, type=float,
              help="Value the metric must fall below.")
@click.option("--metric", default="kl_hist1d", show_default=True,
              help="Metric whose crossing time is charted.")
@click.option("--out", "out_path", required=True, type=click.Path(),
              help="Output PNG path.")
def dims(csv_path, threshold, metric, out_path):
    """Bar chart of iterations-to-threshold across the sweep axis."""
    spec = PlotSpec(csv_path=csv_path, metric=metric, out_path=out_path,
                    group_by="axis_value", threshold=threshold)
    try:
        path = plot_dimension_sweep(spec)
    except PlotDataError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    click.echo(f"wrote {path}")


if __name__ == "__main__":
    main()
