"""Experiment harness: JSON configs in, CSV metric records out.

A config describes one experiment: a target, a sampler, a step-size rule,
the ensemble size and length, and a metric cadence. Runs append nothing:
an existing output file is an error unless forced. Every emitted CSV has
the fixed schema

    run_id,k,metric,value,d,axis_value,config_hash,seed

with floats serialized to 17 significant digits and RFC-4180 quoting, and
metrics are always emitted at k = 0 before any step. ``config_hash`` is a
SHA-256 prefix of the canonicalized effective config (output path excluded,
so the hash is stable across machines).

Dimension sweeps keep the mixture geometry fixed: means are zero-padded
into higher dimensions, which leaves pairwise mean differences -- hence
H^1/2 and all schedule constants -- unchanged, while the d-1 padded
coordinates see only the Gaussian prior. Their law is then tracked exactly
by the Gaussian-chain recursion, which is what makes the dimension
dependence of the two samplers measurable without high-dimensional density
estimation.
"""

from __future__ import annotations

import copy
import csv
import hashlib
import json
import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import metrics as M
from . import rng
from .sampler import ChainState, ScheduleSpec, coupled_eta_tilde, init_chains, run_chain
from .targets import GaussianMixtureTarget, QuadraticTarget

CSV_COLUMNS = ["run_id", "k", "metric", "value", "d", "axis_value", "config_hash", "seed"]

# Draw-batch labels inside the AUX purpose space.
_PROJECTION_BATCH = 1 << 20

_METRIC_NAMES = ("kl_exact", "kl_bound_fixed", "kl_bound_varying",
                 "kl_hist1d", "sliced_w2", "coord_var_bias")


class ConfigError(Exception):
    """Structural config problem: missing field, bad type, unknown value."""


class InvariantError(Exception):
    """Well-formed config whose values violate a domain invariant."""


def _fmt_float(v: float) -> str:
    return f"{v:.17g}"


def _require(cfg: dict, key: str, kind, where: str):
    if key not in cfg:
        raise ConfigError(f"missing field: {where}{key}")
    val = cfg[key]
    if kind is float and isinstance(val, int) and not isinstance(val, bool):
        val = float(val)
    if not isinstance(val, kind) or isinstance(val, bool):
        raise ConfigError(f"field {where}{key} has wrong type")
    return val


@dataclass
class RunPlan:
    """One fully resolved experiment."""

    target: object
    method: str
    schedule: ScheduleSpec
    n_chains: int
    n_steps: int
    metric_every: int
    master_seed: int
    metric_names: list
    init_scale: float
    n_bins: int
    n_projections: int
    kl0: Optional[float]
    config_hash: str
    run_id: str = "run0"
    axis_value: str = ""


def _build_target(cfg: dict, base_dir: str):
    tcfg = _require(cfg, "target", dict, "")
    kind = _require(tcfg, "kind", str, "target.")
    if kind == "quadratic":
        lam = _require(tcfg, "lambda", float, "target.")
        dim = _require(tcfg, "dim", int, "target.")
        m = float(tcfg.get("m", 1.0))
        try:
            return QuadraticTarget(lam=lam, dim=dim, m=m)
        except ValueError as exc:
            raise InvariantError(str(exc)) from exc
    if kind == "mixture":
        if "means_csv" in tcfg:
            path = tcfg["means_csv"]
            if not os.path.isabs(path):
                path = os.path.join(base_dir, path)
            if not os.path.exists(path):
                raise ConfigError(f"field target.means_csv points to a missing file: {path}")
            means = np.loadtxt(path, delimiter=",", ndmin=2)
        else:
            means = np.asarray(_require(tcfg, "means", list, "target."), dtype=np.float64)
            if means.ndim == 1:
                means = means[:, None]
        alpha_star = float(tcfg.get("alpha_star", 0.1))
        m = float(tcfg.get("m", 1.0))
        try:
            target = GaussianMixtureTarget(means, alpha_star=alpha_star, m=m)
            dim = int(tcfg.get("dim", target.dim))
            if dim != target.dim:
                target = target.embedded(dim)
        except ValueError as exc:
            raise InvariantError(str(exc)) from exc
        return target
    raise ConfigError(f"field target.kind has unknown value: {kind!r}")


def _exact_initial_kl(target, init_scale: float) -> float:
    """KL(N(0, s^2 I) || target law) for quadratic targets, in closed form."""
    ratio = init_scale**2 / target.target_variance()
    return target.dim * 0.5 * (ratio - 1.0 - float(np.log(ratio)))


def _build_schedule(cfg: dict, target, init_scale: float) -> tuple[ScheduleSpec, Optional[float]]:
    scfg = _require(cfg, "schedule", dict, "")
    kind = _require(scfg, "kind", str, "schedule.")
    constants = target.constants()
    kl0 = scfg.get("kl0")
    if kl0 is not None:
        kl0 = float(kl0)
    elif target.kind == "quadratic":
        kl0 = _exact_initial_kl(target, init_scale)
    try:
        if kind == "fixed":
            if "eta" in scfg:
                return ScheduleSpec.fixed(constants, eta=float(scfg["eta"])), kl0
            epsilon = _require(scfg, "epsilon", float, "schedule.")
            return ScheduleSpec.fixed(constants, epsilon=epsilon), kl0
        if kind == "varying":
            if kl0 is None:
                raise ConfigError("missing field: schedule.kl0")
            return ScheduleSpec.varying(constants, kl0=kl0), kl0
    except ValueError as exc:
        raise InvariantError(str(exc)) from exc
    raise ConfigError(f"field schedule.kind has unknown value: {kind!r}")


def _default_metrics(target, schedule: ScheduleSpec, kl0: Optional[float]) -> list:
    bound = "kl_bound_fixed" if schedule.kind == "fixed" else "kl_bound_varying"
    names = ["kl_exact"]
    if kl0 is not None or target.kind == "quadratic" or schedule.kind == "varying":
        names.append(bound)
    if target.kind == "mixture":
        names.append("kl_hist1d")
    names.append("coord_var_bias")
    return names


def config_hash(cfg: dict) -> str:
    hashable = {k: v for k, v in cfg.items() if k != "output_path"}
    text = json.dumps(hashable, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:12]


def build_plan(cfg: dict, base_dir: str = ".") -> RunPlan:
    """Validate a config dict and resolve it into a RunPlan."""
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a JSON object")
    target = _build_target(cfg, base_dir)
    method = _require(cfg, "sampler", str, "")
    if method not in ("lapd", "ula"):
        raise ConfigError(f"field sampler has unknown value: {method!r}")
    init_scale = float(cfg.get("init_scale", 1.0))
    if init_scale <= 0:
        raise InvariantError("init_scale must be > 0")
    schedule, kl0 = _build_schedule(cfg, target, init_scale)
    n_chains = _require(cfg, "n_chains", int, "")
    n_steps = _require(cfg, "n_steps", int, "")
    metric_every = int(cfg.get("metric_every", 1))
    master_seed = _require(cfg, "master_seed", int, "")
    if n_chains < 1:
        raise InvariantError("n_chains must be >= 1")
    if n_steps < 0:
        raise InvariantError("n_steps must be >= 0")
    if metric_every < 1:
        raise InvariantError("metric_every must be >= 1")
    if master_seed < 0:
        raise InvariantError("master_seed must be >= 0")
    names = cfg.get("metrics")
    if names is None:
        names = _default_metrics(target, schedule, kl0)
    else:
        if not isinstance(names, list) or not names:
            raise ConfigError("field metrics must be a non-empty list")
        for name in names:
            if name not in _METRIC_NAMES:
                raise ConfigError(f"field metrics has unknown value: {name!r}")
    return RunPlan(
        target=target,
        method=method,
        schedule=schedule,
        n_chains=n_chains,
        n_steps=n_steps,
        metric_every=metric_every,
        master_seed=master_seed,
        metric_names=list(names),
        init_scale=init_scale,
        n_bins=int(cfg.get("n_bins", 64)),
        n_projections=int(cfg.get("n_projections", 128)),
        kl0=kl0,
        config_hash=config_hash(cfg),
    )


class _MetricEngine:
    """Per-run metric evaluator holding the analytic companion state.

    For quadratic targets the whole law is tracked by the exact Gaussian
    recursion; for mixtures the recursion tracks one padded prior-only
    coordinate (exact because those coordinates never see grad f) and the
    embedded coordinate is measured empirically against reference draws.
    """

    def __init__(self, plan: RunPlan):
        self.plan = plan
        t = plan.target
        self._lam = t.lam if t.kind == "quadratic" else 0.0
        self._m = t.m
        self._moments = M.GaussianMoments(mean=0.0, var=plan.init_scale**2)
        self._advanced_to = 0
        if t.kind == "quadratic":
            self._target_var = t.target_variance()
            self._block_size = t.dim
        else:
            self._target_var = 1.0 / t.m
            self._block_size = t.dim - 1
        self._kl0 = plan.kl0
        if t.kind == "quadratic":
            self._kl0 = self._block_size * M.gaussian_kl(
                self._moments, M.GaussianMoments(0.0, self._target_var))
        self._reference = None
        if "kl_hist1d" in plan.metric_names or "sliced_w2" in plan.metric_names:
            stream = rng.Stream(plan.master_seed, rng.REF)
            self._reference = t.sample_target(plan.n_chains, stream)

    def _advance_moments(self, k: int):
        while self._advanced_to < k:
            j = self._advanced_to + 1
            eta = self.plan.schedule.eta(j)
            if self.plan.method == "lapd":
                eta_tilde = coupled_eta_tilde(eta, self._m)
                self._moments = M.gaussian_chain_advance(
                    self._moments, self._lam, self._m, eta, eta_tilde)
            else:
                self._moments = M.ula_chain_advance(
                    self._moments, self._lam, self._m, eta)
            self._advanced_to = j

    def values(self, state: ChainState) -> list:
        """Metric rows (name, value) at the snapshot's step counter."""
        plan = self.plan
        k = state.k
        self._advance_moments(k)
        out = []
        for name in plan.metric_names:
            if name == "kl_exact":
                kl = self._block_size * M.gaussian_kl(
                    self._moments, M.GaussianMoments(0.0, self._target_var))
                out.append((name, kl))
            elif name == "kl_bound_fixed":
                if self._kl0 is None:
                    continue
                out.append((name, M.theorem_fixed_bound(
                    k, self._kl0, plan.schedule.eta_hat, plan.schedule.constants)))
            elif name == "kl_bound_varying":
                k0 = plan.schedule.k0 or 0
                if k < k0:
                    continue
                out.append((name, M.theorem_varying_bound(
                    k, k0, plan.schedule.constants)))
            elif name == "kl_hist1d":
                out.append((name, M.hist_kl_1d(
                    state.positions[:, 0], self._reference[:, 0], plan.n_bins)))
            elif name == "sliced_w2":
                stream = rng.Stream(plan.master_seed, rng.AUX, k0=_PROJECTION_BATCH)
                out.append((name, M.sliced_w2(
                    state.positions, self._reference, plan.n_projections, stream)))
            elif name == "coord_var_bias":
                lo = 0 if plan.target.kind == "quadratic" else 1
                if state.dim - lo < 1:
                    continue
                emp = float(np.mean(np.var(state.positions[:, lo:], axis=0)))
                out.append((name, emp - self._target_var))
        return out


def execute_plan(plan: RunPlan) -> list:
    """Run one experiment; returns CSV rows (lists of strings)."""
    engine = _MetricEngine(plan)
    rows = []
    d = plan.target.dim

    def emit(state: ChainState):
        for name, value in engine.values(state):
            rows.append([plan.run_id, str(state.k), name, _fmt_float(value),
                         str(d), plan.axis_value, plan.config_hash,
                         str(plan.master_seed)])

    state = init_chains(plan.n_chains, d, plan.master_seed, plan.init_scale)
    run_chain(state, plan.target, plan.schedule, plan.n_steps,
              method=plan.method, callback=emit, callback_every=plan.metric_every)
    return rows


def write_csv(path: str, rows: list, force: bool = False):
    if os.path.exists(path) and not force:
        raise InvariantError(f"output file exists (use --force to overwrite): {path}")
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        writer.writerows(rows)


def load_config(path: str) -> dict:
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    with open(path) as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc


def _apply_overrides(cfg: dict, seed: Optional[int], out: Optional[str]) -> dict:
    cfg = copy.deepcopy(cfg)
    if seed is not None:
        cfg["master_seed"] = int(seed)
    if out is not None:
        cfg["output_path"] = out
    return cfg


def cmd_run(config_path: str, force: bool = False, seed: Optional[int] = None,
            out: Optional[str] = None) -> str:
    """Execute one experiment; returns the output CSV path."""
    cfg = _apply_overrides(load_config(config_path), seed, out)
    base_dir = os.path.dirname(os.path.abspath(config_path))
    plan = build_plan(cfg, base_dir)
    path = cfg.get("output_path")
    if not isinstance(path, str) or not path:
        raise ConfigError("missing field: output_path")
    if not os.path.isabs(path):
        path = os.path.join(base_dir, path)
    rows = execute_plan(plan)
    write_csv(path, rows, force=force)
    return path


_SWEEP_AXES = ("dimension", "eta", "schedule")


def _axis_configs(cfg: dict, axis: str) -> list:
    sweep = cfg.get("sweep")
    if not isinstance(sweep, dict) or axis not in sweep:
        raise ConfigError(f"missing field: sweep.{axis}")
    values = sweep[axis]
    if not isinstance(values, list) or not values:
        raise ConfigError(f"field sweep.{axis} must be a non-empty list")
    out = []
    for v in values:
        sub = copy.deepcopy(cfg)
        sub.pop("sweep", None)
        if axis == "dimension":
            if not isinstance(v, int) or isinstance(v, bool):
                raise ConfigError("field sweep.dimension values must be integers")
            sub["target"]["dim"] = v
            axis_text = str(v)
        elif axis == "eta":
            eta = float(v)
            sched = dict(sub.get("schedule", {}))
            sched["kind"] = "fixed"
            sched.pop("epsilon", None)
            sched["eta"] = eta
            sub["schedule"] = sched
            axis_text = _fmt_float(eta)
        else:  # schedule
            if v not in ("fixed", "varying"):
                raise ConfigError(f"field sweep.schedule has unknown value: {v!r}")
            sub["schedule"] = dict(sub["schedule"])
            sub["schedule"]["kind"] = v
            axis_text = str(v)
        out.append((axis_text, sub))
    return out


def cmd_sweep(config_path: str, axis: str, force: bool = False,
              seed: Optional[int] = None, out: Optional[str] = None) -> str:
    """Run one experiment per axis value; concatenated CSV with axis_value."""
    if axis not in _SWEEP_AXES:
        raise ConfigError(f"unknown sweep axis: {axis!r}")
    cfg = _apply_overrides(load_config(config_path), seed, out)
    base_dir = os.path.dirname(os.path.abspath(config_path))
    path = cfg.get("output_path")
    if not isinstance(path, str) or not path:
        raise ConfigError("missing field: output_path")
    if not os.path.isabs(path):
        path = os.path.join(base_dir, path)
    rows = []
    for i, (axis_text, sub_cfg) in enumerate(_axis_configs(cfg, axis)):
        plan = build_plan(sub_cfg, base_dir)
        plan.run_id = f"run{i}"
        plan.axis_value = axis_text
        rows.extend(execute_plan(plan))
    write_csv(path, rows, force=force)
    return path
