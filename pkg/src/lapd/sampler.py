"""Two-stage Langevin sampler with exact prior diffusion, plus a ULA baseline.

One step of the two-stage sampler advances every chain by

* stage 1 (gradient): ``w <- w - eta_tilde * grad_f(w)``,
* stage 2 (prior diffusion): the Ornstein-Uhlenbeck flow on
  g(w) = (m/2)||w||^2 run exactly for time eta, i.e.
  ``w <- exp(-m*eta)*w + sqrt((1 - exp(-2*m*eta))/m) * xi``.

The stage-1 size is always derived from the stage-2 time through the
coupling ``m * eta_tilde = exp(m * eta) - 1``; it is not independently
configurable. Both the fixed and the decaying step-size rules resolve their
base step from the target's spectral constants.

Chains are independent: chain i draws all of its noise from the counter
stream ``(master_seed, i)``, so ensembles may be partitioned across workers
without changing results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from ._backend import core, num_threads
from .targets import TargetConstants

_SQRT2 = math.sqrt(2.0)


def eta_hat_fixed(c: TargetConstants, epsilon: float) -> float:
    """Largest admissible fixed step for target accuracy epsilon.

    Minimum of ``1/(8m)``, ``1/(8 Tr(H^1/2))``, ``1/(1.5 alpha*)``,
    ``alpha*/(8 sqrt(2) L^2)`` and ``alpha* eps/(64 Tr(H))``; terms whose
    constant is zero are dropped.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be > 0")
    terms = [1.0 / (8.0 * c.m), 1.0 / (1.5 * c.alpha_star)]
    if c.tr_h_sqrt > 0:
        terms.append(1.0 / (8.0 * c.tr_h_sqrt))
    if c.L > 0:
        terms.append(c.alpha_star / (8.0 * _SQRT2 * c.L**2))
    if c.tr_h > 0:
        terms.append(c.alpha_star * epsilon / (64.0 * c.tr_h))
    return min(terms)


def eta_hat_varying(c: TargetConstants) -> float:
    """Base step of the decaying schedule (the fixed rule without its
    accuracy term)."""
    terms = [1.0 / (8.0 * c.m), 1.0 / (1.5 * c.alpha_star)]
    if c.tr_h_sqrt > 0:
        terms.append(1.0 / (8.0 * c.tr_h_sqrt))
    if c.L > 0:
        terms.append(c.alpha_star / (8.0 * _SQRT2 * c.L**2))
    return min(terms)


def k0_burn_in(kl0: float, c: TargetConstants, eta_hat: float) -> int:
    """Burn-in length of the decaying schedule.

    Smallest non-negative integer at least
    ``(9/(8 eta_hat alpha*)) * ln(kl0 alpha* / (123 eta_hat Tr(H)))``.
    """
    if kl0 < 0:
        raise ValueError("kl0 must be >= 0")
    if c.tr_h <= 0:
        raise ValueError("varying schedule undefined for Tr(H) = 0")
    if eta_hat <= 0:
        raise ValueError("eta_hat must be > 0")
    arg = kl0 * c.alpha_star / (123.0 * eta_hat * c.tr_h)
    if arg <= 1.0:
        return 0
    bound = 9.0 / (8.0 * eta_hat * c.alpha_star) * math.log(arg)
    return max(0, math.ceil(bound))


def coupled_eta_tilde(eta: float, m: float) -> float:
    """Stage-1 size from the coupling m*eta_tilde = exp(m*eta) - 1.

    Series-expanded for m*eta < 1e-8 so the m -> 0 limit returns eta.
    """
    x = m * eta
    if x < 1e-8:
        return eta * (1.0 + 0.5 * x)
    return math.expm1(x) / m


@dataclass(frozen=True)
class ScheduleSpec:
    """Resolved step-size rule.

    ``eta_hat`` is the base step: for the fixed rule it is the step itself,
    for the decaying rule steps are ``8*eta_hat/(9 + 3*(k - k0)_+ *
    eta_hat*alpha*)``.
    """

    kind: str  # "fixed" | "varying"
    eta_hat: float
    constants: TargetConstants
    epsilon: Optional[float] = None
    k0: Optional[int] = None

    @staticmethod
    def fixed(constants: TargetConstants, epsilon: Optional[float] = None,
              eta: Optional[float] = None) -> "ScheduleSpec":
        """Fixed schedule: step from an accuracy target or given explicitly."""
        if (epsilon is None) == (eta is None):
            raise ValueError("fixed schedule needs exactly one of epsilon or eta")
        if eta is None:
            eta = eta_hat_fixed(constants, epsilon)
        if eta <= 0:
            raise ValueError("eta must be > 0")
        return ScheduleSpec("fixed", eta, constants, epsilon=epsilon)

    @staticmethod
    def varying(constants: TargetConstants, kl0: Optional[float] = None,
                k0: Optional[int] = None) -> "ScheduleSpec":
        """Decaying schedule; burn-in from an initial-KL estimate or given."""
        base = eta_hat_varying(constants)
        if k0 is None:
            if kl0 is None:
                raise ValueError("varying schedule needs kl0 or an explicit k0")
            k0 = k0_burn_in(kl0, constants, base)
        if k0 < 0:
            raise ValueError("k0 must be >= 0")
        return ScheduleSpec("varying", base, constants, k0=k0)

    def eta(self, k: int) -> float:
        """Step size of step k (1-based)."""
        if k < 1:
            raise ValueError("step index must be >= 1")
        if self.kind == "fixed":
            return self.eta_hat
        return eta_varying(k - 1, self)


def eta_varying(k: int, spec: ScheduleSpec) -> float:
    """Step size eta_{k+1} = 8*eta_hat / (9 + 3*(k - k0)_+ * eta_hat * alpha*)."""
    if k < 0:
        raise ValueError("iteration index must be >= 0")
    excess = max(k - (spec.k0 or 0), 0)
    return 8.0 * spec.eta_hat / (9.0 + 3.0 * excess * spec.eta_hat * spec.constants.alpha_star)


@dataclass
class ChainState:
    """Positions of an ensemble of independent chains.

    ``k`` counts completed steps. Chain i draws from the counter stream
    derived from ``(master_seed, i)`` only, so runs are reproducible and
    independent of scheduling.
    """

    positions: np.ndarray
    k: int
    master_seed: int

    @property
    def n_chains(self) -> int:
        return self.positions.shape[0]

    @property
    def dim(self) -> int:
        return self.positions.shape[1]

    def view(self) -> "ChainState":
        """Read-only snapshot sharing the position buffer."""
        pos = self.positions.view()
        pos.setflags(write=False)
        return replace(self, positions=pos)


def init_chains(n_chains: int, dim: int, master_seed: int, scale: float = 1.0) -> ChainState:
    """Ensemble initialized from N(0, scale^2 I)."""
    if n_chains < 1 or dim < 1:
        raise ValueError("n_chains and dim must be >= 1")
    pos = np.empty((n_chains, dim))
    core.fill_normals(pos, master_seed, 1, 0, 0, num_threads())
    if scale != 1.0:
        pos *= scale
    return ChainState(positions=pos, k=0, master_seed=int(master_seed))


def _ou_coefficients(m: float, eta: float) -> tuple[float, float]:
    decay = math.exp(-m * eta)
    var = -math.expm1(-2.0 * m * eta) / m
    return decay, math.sqrt(var)


def lapd_stage1(state: ChainState, target, eta_tilde: float) -> ChainState:
    """Deterministic gradient stage: w <- w - eta_tilde * grad_f(w), in place."""
    if eta_tilde < 0:
        raise ValueError("eta_tilde must be >= 0")
    if eta_tilde == 0.0:
        return state
    grad = target.grad_f(state.positions)
    if not np.all(np.isfinite(grad)):
        raise FloatingPointError("non-finite gradient in stage 1")
    state.positions -= eta_tilde * grad
    return state


def lapd_stage2_exact(state: ChainState, m: float, eta: float,
                      zero_noise: bool = False) -> ChainState:
    """Exact prior-diffusion stage, in place; advances k by one.

    With ``zero_noise`` the drift alone is applied (debugging aid).
    """
    if m <= 0 or eta <= 0:
        raise ValueError("m and eta must be > 0")
    decay, sigma = _ou_coefficients(m, eta)
    if zero_noise:
        state.positions *= decay
    else:
        core.ou_step(state.positions, decay, sigma, state.master_seed,
                     state.k, num_threads())
    state.k += 1
    return state


def lapd_step(state: ChainState, target, schedule: ScheduleSpec) -> ChainState:
    """One full two-stage step with the coupled stage sizes, in place."""
    eta = schedule.eta(state.k + 1)
    eta_tilde = coupled_eta_tilde(eta, target.m)
    decay, sigma = _ou_coefficients(target.m, eta)
    pos = state.positions
    if target.kind == "quadratic":
        core.lapd_step_quadratic(pos, target.lam, eta_tilde, decay, sigma,
                                 state.master_seed, state.k, num_threads())
    elif target.kind == "mixture":
        core.lapd_step_mixture(pos, target.means, target._logit_offsets,
                               eta_tilde, decay, sigma,
                               state.master_seed, state.k, num_threads())
    else:
        lapd_stage1(state, target, eta_tilde)
        return lapd_stage2_exact(state, target.m, eta)
    state.k += 1
    return state


def ula_step(state: ChainState, target, eta: float,
             zero_noise: bool = False) -> ChainState:
    """Euler-Maruyama step on the full potential:
    w <- w - eta*(grad f(w) + m*w) + sqrt(2*eta)*xi, in place."""
    if eta <= 0:
        raise ValueError("eta must be > 0")
    sigma = math.sqrt(2.0 * eta)
    pos = state.positions
    if zero_noise:
        grad = target.grad_f(pos)
        pos -= eta * (grad + target.m * pos)
    elif target.kind == "quadratic":
        core.ula_step_quadratic(pos, target.lam, target.m, eta, sigma,
                                state.master_seed, state.k, num_threads())
    elif target.kind == "mixture":
        core.ula_step_mixture(pos, target.means, target._logit_offsets,
                              target.m, eta, sigma,
                              state.master_seed, state.k, num_threads())
    else:
        grad = target.grad_f(pos)
        z = np.empty_like(pos)
        core.fill_normals(z, state.master_seed, 0, state.k, 0, num_threads())
        pos -= eta * (grad + target.m * pos)
        pos += sigma * z
    state.k += 1
    return state


def run_chain(state: ChainState, target, schedule: ScheduleSpec, n_steps: int,
              method: str = "lapd",
              callback: Optional[Callable[[ChainState], None]] = None,
              callback_every: int = 1) -> ChainState:
    """Advance the ensemble n_steps, invoking the callback on read-only
    snapshots at step 0 and every callback_every completed steps."""
    if n_steps < 0:
        raise ValueError("n_steps must be >= 0")
    if callback_every < 1:
        raise ValueError("callback_every must be >= 1")
    if method not in ("lapd", "ula"):
        raise ValueError(f"unknown sampler method: {method!r}")
    if callback is not None:
        callback(state.view())
    for _ in range(n_steps):
        if method == "lapd":
            lapd_step(state, target, schedule)
        else:
            ula_step(state, target, schedule.eta(state.k + 1))
        if callback is not None and state.k % callback_every == 0:
            callback(state.view())
    return state
