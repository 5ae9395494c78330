"""Config handling, CSV contract, sweeps, and the CLI surface."""

import csv
import json

import pytest
from click.testing import CliRunner

from lapd.cli import main
from lapd.harness import build_plan, config_hash

RUNNER = CliRunner()


def write_config(path, **overrides):
    cfg = {
        "target": {"kind": "quadratic", "lambda": 1.0, "dim": 3},
        "sampler": "lapd",
        "schedule": {"kind": "fixed", "epsilon": 0.5},
        "n_chains": 200,
        "n_steps": 20,
        "metric_every": 10,
        "master_seed": 77,
        "output_path": "out.csv",
    }
    cfg.update(overrides)
    path.write_text(json.dumps(cfg))
    return cfg


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_minimal_run_emits_single_block_at_zero(tmp_path):
    cfg_path = tmp_path / "c.json"
    write_config(cfg_path, n_steps=0)
    res = RUNNER.invoke(main, ["run", str(cfg_path)])
    assert res.exit_code == 0, res.output
    rows = read_rows(tmp_path / "out.csv")
    assert rows and all(r["k"] == "0" for r in rows)
    assert {r["metric"] for r in rows} == {"kl_exact", "kl_bound_fixed", "coord_var_bias"}


def test_csv_schema_and_float_format(tmp_path):
    cfg_path = tmp_path / "c.json"
    write_config(cfg_path)
    assert RUNNER.invoke(main, ["run", str(cfg_path)]).exit_code == 0
    raw = (tmp_path / "out.csv").read_bytes()
    assert raw.split(b"\r\n")[0] == b"run_id,k,metric,value,d,axis_value,config_hash,seed"
    rows = read_rows(tmp_path / "out.csv")
    ks = sorted({int(r["k"]) for r in rows})
    assert ks == [0, 10, 20]
    for r in rows:
        assert r["run_id"] == "run0" and r["d"] == "3" and r["seed"] == "77"
        assert r["axis_value"] == ""
        assert len(r["config_hash"]) == 12
        # 17-significant-digit round trip
        assert f"{float(r['value']):.17g}" == r["value"]


def test_rerun_is_byte_identical(tmp_path):
    cfg_path = tmp_path / "c.json"
    write_config(cfg_path, output_path="a.csv")
    assert RUNNER.invoke(main, ["run", str(cfg_path)]).exit_code == 0
    assert RUNNER.invoke(main, ["run", str(cfg_path), "--out", "b.csv"]).exit_code == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_existing_output_needs_force(tmp_path):
    cfg_path = tmp_path / "c.json"
    write_config(cfg_path)
    assert RUNNER.invoke(main, ["run", str(cfg_path)]).exit_code == 0
    res = RUNNER.invoke(main, ["run", str(cfg_path)])
    assert res.exit_code == 3
    assert RUNNER.invoke(main, ["run", str(cfg_path), "--force"]).exit_code == 0


def test_seed_override_changes_hash_and_values(tmp_path):
    cfg_path = tmp_path / "c.json"
    write_config(cfg_path)
    assert RUNNER.invoke(main, ["run", str(cfg_path), "--out", "a.csv"]).exit_code == 0
    assert RUNNER.invoke(main, ["run", str(cfg_path), "--seed", "78", "--out", "b.csv"]).exit_code == 0
    a, b = read_rows(tmp_path / "a.csv"), read_rows(tmp_path / "b.csv")
    assert a[0]["config_hash"] != b[0]["config_hash"]
    assert {r["seed"] for r in b} == {"78"}


def test_parse_error_names_field(tmp_path):
    cfg_path = tmp_path / "c.json"
    cfg = write_config(cfg_path)
    del cfg["schedule"]["epsilon"]
    cfg_path.write_text(json.dumps(cfg))
    res = RUNNER.invoke(main, ["run", str(cfg_path)])
    assert res.exit_code == 2
    assert "schedule.epsilon" in res.output


def test_corrupted_prior_exits_3(tmp_path):
    cfg_path = tmp_path / "c.json"
    write_config(cfg_path, target={"kind": "mixture", "means": [[1.0], [-1.0]], "m": -0.5})
    res = RUNNER.invoke(main, ["run", str(cfg_path)])
    assert res.exit_code == 3
    assert "constants.m must be > 0" in res.output


def test_invalid_json_exits_2(tmp_path):
    cfg_path = tmp_path / "c.json"
    cfg_path.write_text("{not json")
    res = RUNNER.invoke(main, ["run", str(cfg_path)])
    assert res.exit_code == 2


def test_invariant_violations_exit_3(tmp_path):
    cfg_path = tmp_path / "c.json"
    write_config(cfg_path, n_chains=0)
    res = RUNNER.invoke(main, ["run", str(cfg_path)])
    assert res.exit_code == 3
    assert "n_chains" in res.output


def test_dimension_sweep_preserves_trace(tmp_path):
    cfg_path = tmp_path / "c.json"
    write_config(
        cfg_path,
        target={"kind": "mixture", "means": [[1.0], [-1.0]], "alpha_star": 0.1},
        schedule={"kind": "varying", "kl0": 0.5},
        n_chains=300,
        n_steps=10,
        metric_every=5,
        sweep={"dimension": [2, 8, 32, 128]},
    )
    res = RUNNER.invoke(main, ["sweep", str(cfg_path), "--axis", "dimension"])
    assert res.exit_code == 0, res.output
    rows = read_rows(tmp_path / "out.csv")
    assert sorted({r["axis_value"] for r in rows}, key=int) == ["2", "8", "32", "128"]
    assert sorted({r["run_id"] for r in rows}) == ["run0", "run1", "run2", "run3"]
    # identical geometry across d: the varying bound rows depend only on
    # Tr(H), L, alpha*, so they must agree exactly across the sweep
    by_axis = {}
    for r in rows:
        if r["metric"] == "kl_bound_varying":
            by_axis.setdefault(r["axis_value"], []).append((int(r["k"]), r["value"]))
    series = [sorted(v) for v in by_axis.values()]
    assert all(s == series[0] for s in series[1:])


def test_eta_sweep_axis_column(tmp_path):
    cfg_path = tmp_path / "c.json"
    write_config(cfg_path, n_steps=5, metric_every=5,
                 sweep={"eta": [0.01, 0.005, 0.0025]})
    res = RUNNER.invoke(main, ["sweep", str(cfg_path), "--axis", "eta"])
    assert res.exit_code == 0, res.output
    rows = read_rows(tmp_path / "out.csv")
    got = sorted({float(r["axis_value"]) for r in rows})
    assert got == [0.0025, 0.005, 0.01]


def test_schedule_sweep(tmp_path):
    cfg_path = tmp_path / "c.json"
    write_config(cfg_path, n_steps=5, metric_every=5,
                 schedule={"kind": "fixed", "epsilon": 0.5, "kl0": 1.0},
                 sweep={"schedule": ["fixed", "varying"]})
    res = RUNNER.invoke(main, ["sweep", str(cfg_path), "--axis", "schedule"])
    assert res.exit_code == 0, res.output
    rows = read_rows(tmp_path / "out.csv")
    assert {r["axis_value"] for r in rows} == {"fixed", "varying"}


def test_empty_axis_exits_2(tmp_path):
    cfg_path = tmp_path / "c.json"
    write_config(cfg_path, sweep={"dimension": []})
    res = RUNNER.invoke(main, ["sweep", str(cfg_path), "--axis", "dimension"])
    assert res.exit_code == 2
    assert "sweep.dimension" in res.output


def test_missing_axis_values_exit_2(tmp_path):
    cfg_path = tmp_path / "c.json"
    write_config(cfg_path)
    res = RUNNER.invoke(main, ["sweep", str(cfg_path), "--axis", "eta"])
    assert res.exit_code == 2


def test_means_csv_loading(tmp_path):
    means_path = tmp_path / "means.csv"
    means_path.write_text("1.0,0.0\n-1.0,0.0\n")
    cfg_path = tmp_path / "c.json"
    write_config(cfg_path, n_steps=0,
                 target={"kind": "mixture", "means_csv": "means.csv"})
    res = RUNNER.invoke(main, ["run", str(cfg_path)])
    assert res.exit_code == 0, res.output
    rows = read_rows(tmp_path / "out.csv")
    assert rows[0]["d"] == "2"


def test_unknown_validate_suite_exits_2():
    res = RUNNER.invoke(main, ["validate", "nonsense"])
    assert res.exit_code == 2


def test_validate_schedules_passes():
    res = RUNNER.invoke(main, ["validate", "schedules"])
    assert res.exit_code == 0
    assert "PASS" in res.output and "FAIL" not in res.output


def test_config_hash_ignores_output_path():
    base = {"target": {"kind": "quadratic", "lambda": 1.0, "dim": 2},
            "sampler": "lapd", "schedule": {"kind": "fixed", "epsilon": 0.5},
            "n_chains": 10, "n_steps": 1, "master_seed": 1,
            "output_path": "x.csv"}
    other = dict(base, output_path="elsewhere.csv")
    assert config_hash(base) == config_hash(other)
    assert config_hash(base) != config_hash(dict(base, master_seed=2))


def test_mixture_metrics_include_hist(tmp_path):
    cfg_path = tmp_path / "c.json"
    write_config(
        cfg_path,
        target={"kind": "mixture", "means": [[1.0], [-1.0]], "dim": 4},
        schedule={"kind": "varying", "kl0": 0.5},
        n_chains=500,
        n_steps=4,
        metric_every=2,
        metrics=["kl_exact", "kl_hist1d", "sliced_w2", "coord_var_bias"],
    )
    res = RUNNER.invoke(main, ["run", str(cfg_path)])
    assert res.exit_code == 0, res.output
    rows = read_rows(tmp_path / "out.csv")
    metrics_seen = {r["metric"] for r in rows}
    assert metrics_seen == {"kl_exact", "kl_hist1d", "sliced_w2", "coord_var_bias"}
    # prior-only block starts and stays at its stationary law exactly
    kl_rows = [r for r in rows if r["metric"] == "kl_exact"]
    assert all(float(r["value"]) < 1e-12 for r in kl_rows)


def test_unknown_metric_name_exits_2(tmp_path):
    cfg_path = tmp_path / "c.json"
    write_config(cfg_path, metrics=["kl_exact", "mystery"])
    res = RUNNER.invoke(main, ["run", str(cfg_path)])
    assert res.exit_code == 2
    assert "mystery" in res.output


def test_build_plan_defaults():
    cfg = {"target": {"kind": "quadratic", "lambda": 2.0, "dim": 5},
           "sampler": "ula", "schedule": {"kind": "fixed", "eta": 0.1},
           "n_chains": 10, "n_steps": 3, "master_seed": 4,
           "output_path": "x.csv"}
    plan = build_plan(cfg)
    assert plan.method == "ula"
    assert plan.schedule.eta_hat == 0.1
    assert plan.metric_names[0] == "kl_exact"
