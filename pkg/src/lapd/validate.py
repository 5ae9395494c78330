"""Self-check suites behind ``sampler validate <suite>``.

Each suite exercises the invariants of one part of the library against an
independent oracle (finite differences, quadrature, Monte Carlo moments,
the exact Gaussian recursion) and reports one pass/fail line per check.
"""

from __future__ import annotations

import math

import numpy as np

from . import metrics as M
from . import rng
from .kernel import (InterpolatingSde, TransitionKernel, em_simulate,
                     kernel_sample, transition_log_density)
from .sampler import (ScheduleSpec, coupled_eta_tilde, eta_hat_fixed,
                      init_chains, k0_burn_in, run_chain, ula_step)
from .targets import GaussianMixtureTarget, QuadraticTarget, TargetConstants, grad_U

_SEED = 20240915


def _fd_gradient(fn, w, h=1e-5):
    g = np.empty_like(w)
    for i in range(w.size):
        wp = w.copy()
        wm = w.copy()
        wp[i] += h
        wm[i] -= h
        g[i] = (fn(wp) - fn(wm)) / (2 * h)
    return g


def _random_mixture(gen, n_components=3, dim=4):
    means = gen.uniform(-2.0, 2.0, size=(n_components, dim))
    return GaussianMixtureTarget(means, alpha_star=0.2)


def suite_gradients():
    """Finite-difference agreement and the Hessian envelope."""
    gen = np.random.default_rng(_SEED)
    checks = []

    target = _random_mixture(gen)
    worst_g = 0.0
    worst_h = 0.0
    for _ in range(100):
        w = gen.uniform(-3.0, 3.0, size=target.dim)
        fd = _fd_gradient(lambda x: float(target.potential_f(x)), w)
        err = np.linalg.norm(target.grad_f(w) - fd) / (1.0 + np.linalg.norm(fd))
        worst_g = max(worst_g, err)
        hess = target.hessian_f(w)
        fd_h = np.column_stack([
            _fd_gradient(lambda x, i=i: float(target.grad_f(x)[i]), w)
            for i in range(target.dim)])
        herr = np.max(np.abs(hess - 0.5 * (fd_h + fd_h.T))) / (1.0 + np.max(np.abs(fd_h)))
        worst_h = max(worst_h, herr)
    checks.append(("gradients.mixture_grad_fd", worst_g < 1e-6, f"max rel err {worst_g:.2e}"))
    checks.append(("gradients.mixture_hess_fd", worst_h < 1e-5, f"max rel err {worst_h:.2e}"))

    quad = QuadraticTarget(lam=1.5, dim=3)
    w = gen.uniform(-3, 3, size=3)
    fd = _fd_gradient(lambda x: float(quad.potential_f(x)) + 0.5 * quad.m * float(x @ x), w)
    err = np.linalg.norm(grad_U(quad, w) - fd) / (1.0 + np.linalg.norm(fd))
    checks.append(("gradients.quadratic_grad_U_fd", err < 1e-6, f"rel err {err:.2e}"))

    hh = target.h_half()
    lam_max = float(np.linalg.eigvalsh(hh)[-1])
    lo, hi = 0.0, 0.0
    for _ in range(100):
        w = gen.uniform(-3.0, 3.0, size=target.dim)
        ev = np.linalg.eigvalsh(-target.hessian_f(w))
        lo = min(lo, float(ev[0]))
        hi = max(hi, float(ev[-1]))
    ok = lo >= -1e-10 and hi <= lam_max + 1e-10
    checks.append(("gradients.hessian_sandwich", ok,
                   f"eigenvalues in [{lo:.2e}, {hi:.4f}], cap {lam_max:.4f}"))
    return checks


def suite_schedules():
    """Step-size rules: base-step formula, coupling, monotone decay."""
    checks = []
    c = TargetConstants(m=1.0, L=1.0, tr_h=1.0, tr_h_sqrt=1.0, alpha_star=0.5)
    got = eta_hat_fixed(c, 0.1)
    checks.append(("schedules.eta_hat_fixed", abs(got - 0.00078125) < 1e-18,
                   f"eta_hat {got:.8g}"))

    worst = 0.0
    for m in (0.25, 1.0, 3.0):
        for eta in (1e-6, 1e-3, 0.05, 0.7):
            tilde = coupled_eta_tilde(eta, m)
            worst = max(worst, abs(m * tilde / math.expm1(m * eta) - 1.0))
    checks.append(("schedules.coupling_identity", worst < 1e-12, f"max dev {worst:.2e}"))

    spec = ScheduleSpec.varying(c, k0=7)
    etas = [spec.eta(k) for k in range(1, 200)]
    mono = all(etas[i + 1] <= etas[i] + 1e-18 for i in range(7, len(etas) - 1))
    capped = all(e <= spec.eta_hat for e in etas)
    checks.append(("schedules.varying_monotone_capped", mono and capped,
                   f"eta_1 {etas[0]:.6g} -> eta_199 {etas[-1]:.6g}"))

    k0 = k0_burn_in(10.0, TargetConstants(m=1, L=1, tr_h=1, tr_h_sqrt=1, alpha_star=0.5), 0.04)
    checks.append(("schedules.k0_burn_in", k0 == 1, f"k0 {k0}"))
    return checks


def suite_kernel():
    """One-step law: composition identity, normalization, weak order."""
    checks = []
    gen = np.random.default_rng(_SEED + 1)
    target = _random_mixture(gen, n_components=2, dim=3)
    kern = TransitionKernel.coupled(target, eta=math.log(2.0))

    worst = 0.0
    for _ in range(1000):
        w0 = gen.uniform(-3, 3, size=3)
        xi = gen.normal(size=3)
        staged = (w0 - kern.eta_tilde * target.grad_f(w0)) * math.exp(-kern.m * kern.eta)
        staged = staged + math.sqrt(kern.var_scalar) * xi
        direct = kernel_sample(kern, w0, noise=xi)
        worst = max(worst, float(np.max(np.abs(staged - direct))))
    checks.append(("kernel.composition_identity", worst < 1e-12, f"max dev {worst:.2e}"))

    quad = QuadraticTarget(lam=0.7, dim=1)
    k1 = TransitionKernel.coupled(quad, eta=math.log(2.0))
    nodes, weights = np.polynomial.legendre.leggauss(200)
    w0 = np.array([0.4])
    mu = float(k1.mean_map(w0)[0])
    half = 10.0 * math.sqrt(k1.var_scalar)
    x = mu + half * nodes
    dens = np.array([math.exp(transition_log_density(k1, np.array([xi_]), w0)) for xi_ in x])
    mass = float(np.sum(weights * dens) * half)
    checks.append(("kernel.density_normalization", abs(mass - 1.0) < 1e-8,
                   f"quadrature mass {mass:.12f}"))

    sde = InterpolatingSde.coupled(1.0, math.log(2.0), np.array([1.0]))
    w0 = np.array([2.0])
    decay = math.exp(-sde.m * sde.eta)
    exact_mean = decay * w0[0] - (1.0 - decay) / sde.m * sde.anchor_gradient[0]
    errs = []
    ladder = [sde.eta / (2 ** j) for j in range(1, 7)]
    for j, h in enumerate(ladder):
        stream = rng.Stream(_SEED + 2 + j, rng.AUX)
        term = em_simulate(sde, w0, h, 300_000, stream)
        errs.append(abs(float(term.mean()) - exact_mean))
    slope = np.polyfit(np.log(ladder), np.log(errs), 1)[0]
    checks.append(("kernel.em_weak_order", abs(slope - 1.0) < 0.3,
                   f"log-log slope {slope:.3f}"))
    return checks


def suite_oracle():
    """Sampled ensembles against the exact Gaussian recursion."""
    checks = []
    lam, m, eta = 1.0, 1.0, 0.02
    n = 20_000
    quad = QuadraticTarget(lam=lam, dim=4)
    sched = ScheduleSpec.fixed(quad.constants(), eta=eta)
    state = init_chains(n, 4, master_seed=_SEED + 7)
    mom = M.GaussianMoments(mean=0.0, var=1.0)
    worst_z = 0.0
    for _ in range(10):
        run_chain(state, quad, sched, 10)
        for _ in range(10):
            mom = M.gaussian_chain_advance(mom, lam, m, eta, coupled_eta_tilde(eta, m))
        emp_mean = state.positions.mean(axis=0)
        emp_var = state.positions.var(axis=0, ddof=1)
        se_mean = math.sqrt(float(mom.var) / n)
        se_var = float(mom.var) * math.sqrt(2.0 / (n - 1))
        worst_z = max(worst_z, float(np.max(np.abs(emp_mean - mom.mean) / se_mean)))
        worst_z = max(worst_z, float(np.max(np.abs(emp_var - mom.var) / se_var)))
    checks.append(("oracle.lapd_moments_5se", worst_z < 5.0, f"max |z| {worst_z:.2f}"))

    prior = QuadraticTarget(lam=0.0, dim=1)
    n = 200_000
    state = init_chains(n, 1, master_seed=_SEED + 8)
    for _ in range(120):
        ula_step(state, prior, 0.1)
    var = float(state.positions.var(ddof=1))
    expect = 1.0 / (1.0 - 0.1 / 2.0)
    rel = abs(var - expect) / expect
    checks.append(("oracle.ula_prior_bias", rel < 0.02,
                   f"var {var:.5f} vs {expect:.5f} (rel {rel:.3%})"))

    state = init_chains(n, 1, master_seed=_SEED + 9)
    sched = ScheduleSpec.fixed(prior.constants(), eta=0.1)
    run_chain(state, prior, sched, 120)
    var = float(state.positions.var(ddof=1))
    z = abs(var - 1.0) / math.sqrt(2.0 / (n - 1))
    checks.append(("oracle.lapd_prior_unbiased", z < 5.0, f"stationary var {var:.5f}, |z| {z:.2f}"))
    return checks


SUITES = {
    "kernel": suite_kernel,
    "gradients": suite_gradients,
    "schedules": suite_schedules,
    "oracle": suite_oracle,
}


def run_suite(name: str) -> list:
    return SUITES[name]()
