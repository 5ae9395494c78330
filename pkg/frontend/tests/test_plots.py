"""Figure rendering against CSVs produced by the real sampler CLI.

The sampler is exercised strictly through its command-line interface; these
tests never import the sampler package.
"""

import csv
import json
import subprocess

import pytest
from click.testing import CliRunner

from lapd_plots.cli import main
from lapd_plots.plotting import PlotDataError, PlotSpec, plot_convergence, read_records

RUNNER = CliRunner()

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def run_sampler(*args):
    proc = subprocess.run(["sampler", *args], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr + proc.stdout
    return proc


@pytest.fixture(scope="session")
def quadratic_csv(tmp_path_factory):
    root = tmp_path_factory.mktemp("quad")
    cfg = {
        "target": {"kind": "quadratic", "lambda": 1.0, "dim": 4},
        "sampler": "lapd",
        "schedule": {"kind": "fixed", "epsilon": 0.5},
        "n_chains": 20000,
        "n_steps": 1500,
        "metric_every": 100,
        "master_seed": 7,
        "output_path": "quadratic.csv",
    }
    path = root / "cfg.json"
    path.write_text(json.dumps(cfg))
    run_sampler("run", str(path))
    return root / "quadratic.csv"


@pytest.fixture(scope="session")
def sweep_csv(tmp_path_factory):
    root = tmp_path_factory.mktemp("sweep")
    cfg = {
        "target": {"kind": "mixture", "means": [[1.0], [-1.0]], "alpha_star": 0.1},
        "sampler": "lapd",
        "schedule": {"kind": "varying", "kl0": 0.5},
        "n_chains": 5000,
        "n_steps": 800,
        "metric_every": 25,
        "master_seed": 11,
        "output_path": "sweep.csv",
        "sweep": {"dimension": [2, 8, 32]},
    }
    path = root / "cfg.json"
    path.write_text(json.dumps(cfg))
    run_sampler("sweep", str(path), "--axis", "dimension")
    return root / "sweep.csv"


def test_convergence_figure_with_dominating_bound(quadratic_csv, tmp_path):
    # the rendered data must show the bound curve strictly above the
    # measured curve at every shared iteration
    rows = read_records(str(quadratic_csv))
    exact = {r["k"]: r["value"] for r in rows if r["metric"] == "kl_exact"}
    bound = {r["k"]: r["value"] for r in rows if r["metric"] == "kl_bound_fixed"}
    assert exact and set(bound) == set(exact)
    assert all(bound[k] > exact[k] for k in exact)

    out = tmp_path / "conv.png"
    res = RUNNER.invoke(main, ["convergence", str(quadratic_csv),
                               "--metric", "kl_exact", "--out", str(out), "--logy"])
    assert res.exit_code == 0, res.output
    data = out.read_bytes()
    assert data.startswith(PNG_MAGIC) and len(data) > 1000


def test_dimension_sweep_bar_chart(sweep_csv, tmp_path):
    out = tmp_path / "dims.png"
    res = RUNNER.invoke(main, ["dims", str(sweep_csv),
                               "--threshold", "0.05", "--out", str(out)])
    assert res.exit_code == 0, res.output
    assert out.read_bytes().startswith(PNG_MAGIC)


def test_sweep_convergence_grouped_by_axis(sweep_csv, tmp_path):
    out = tmp_path / "sweep_conv.png"
    res = RUNNER.invoke(main, ["convergence", str(sweep_csv), "--metric", "kl_hist1d",
                               "--group-by", "axis_value", "--out", str(out)])
    assert res.exit_code == 0, res.output
    assert out.read_bytes().startswith(PNG_MAGIC)


def test_output_is_deterministic(quadratic_csv, tmp_path):
    a, b = tmp_path / "a.png", tmp_path / "b.png"
    for out in (a, b):
        res = RUNNER.invoke(main, ["convergence", str(quadratic_csv),
                                   "--metric", "kl_exact", "--out", str(out)])
        assert res.exit_code == 0
    assert a.read_bytes() == b.read_bytes()


def test_input_csv_is_not_modified(quadratic_csv, tmp_path):
    before = quadratic_csv.read_bytes()
    RUNNER.invoke(main, ["convergence", str(quadratic_csv), "--metric", "kl_exact",
                         "--out", str(tmp_path / "x.png")])
    assert quadratic_csv.read_bytes() == before


def test_missing_metric_exits_nonzero_and_names_it(quadratic_csv, tmp_path):
    res = RUNNER.invoke(main, ["convergence", str(quadratic_csv),
                               "--metric", "sliced_w2", "--out", str(tmp_path / "x.png")])
    assert res.exit_code == 2
    assert "sliced_w2" in res.output


def test_single_group_sweep_renders_one_bar(quadratic_csv, tmp_path):
    # a plain run has a single (empty) axis group; still renders
    out = tmp_path / "one.png"
    res = RUNNER.invoke(main, ["dims", str(quadratic_csv), "--metric", "kl_exact",
                               "--threshold", "0.1", "--out", str(out)])
    assert res.exit_code == 0, res.output
    assert out.read_bytes().startswith(PNG_MAGIC)


def test_malformed_csv_rejected(tmp_path):
    bad = tmp_path / "bad.csv"
    with open(bad, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "value"])
        writer.writerow([0, 1.0])
    res = RUNNER.invoke(main, ["convergence", str(bad), "--metric", "kl_exact",
                               "--out", str(tmp_path / "x.png")])
    assert res.exit_code == 2


def test_plot_spec_direct_api(quadratic_csv, tmp_path):
    spec = PlotSpec(csv_path=str(quadratic_csv), metric="coord_var_bias",
                    out_path=str(tmp_path / "v.png"))
    assert plot_convergence(spec) == spec.out_path
    with pytest.raises(PlotDataError, match="no_such"):
        plot_convergence(PlotSpec(csv_path=str(quadratic_csv), metric="no_such",
                                  out_path=str(tmp_path / "w.png")))
