"""Command-line front end.

Exit codes: 0 success, 2 config/usage error (message names the offending
field), 3 invariant violation, 1 failed validation suite.
"""

from __future__ import annotations

import sys

import click

from .harness import ConfigError, InvariantError, cmd_run, cmd_sweep
from .validate import SUITES, run_suite


def _run_guarded(fn):
    try:
        return fn()
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(2)
    except InvariantError as exc:
        click.echo(f"invariant violation: {exc}", err=True)
        sys.exit(3)


@click.group()
def main():
    """Langevin sampling experiments: run, sweep, validate."""


@main.command()
@click.argument("config", type=click.Path())
@click.option("--force", is_flag=True, help="Overwrite an existing output file.")
@click.option("--seed", type=int, default=None, help="Override master seed.")
@click.option("--out", type=click.Path(), default=None, help="Override output path.")
def run(config, force, seed, out):
    """Execute one experiment described by CONFIG (JSON) and write CSV."""
    path = _run_guarded(lambda: cmd_run(config, force=force, seed=seed, out=out))
    click.echo(f"wrote {path}")


@main.command()
@click.argument("config", type=click.Path())
@click.option("--axis", required=True,
              type=click.Choice(["dimension", "eta", "schedule"]),
              help="Sweep axis; values come from the config's sweep section.")
@click.option("--force", is_flag=True, help="Overwrite an existing output file.")
@click.option("--seed", type=int, default=None, help="Override master seed.")
@click.option("--out", type=click.Path(), default=None, help="Override output path.")
def sweep(config, axis, force, seed, out):
    """Run one experiment per axis value; concatenated CSV output."""
    path = _run_guarded(lambda: cmd_sweep(config, axis, force=force, seed=seed, out=out))
    click.echo(f"wrote {path}")


@main.command()
@click.argument("suite", type=str)
def validate(suite):
    """Run a named self-check suite (kernel, gradients, schedules, oracle)."""
    if suite not in SUITES:
        click.echo(f"unknown suite: {suite!r} (choose from {', '.join(sorted(SUITES))})",
                   err=True)
        sys.exit(2)
    checks = run_suite(suite)
    failed = 0
    for name, ok, detail in checks:
        status = "PASS" if ok else "FAIL"
        if not ok:
            failed += 1
        click.echo(f"{status}  {name}  ({detail})")
    if failed:
        click.echo(f"{failed} of {len(checks)} checks failed", err=True)
        sys.exit(1)
    click.echo(f"all {len(checks)} checks passed")


if __name__ == "__main__":
    main()
