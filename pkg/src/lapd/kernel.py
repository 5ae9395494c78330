"""Closed-form one-step transition law of the two-stage update.

Conditioned on the previous position w0, one full step (gradient stage
followed by the exact prior diffusion over time eta) is Gaussian:

    w | w0  ~  N( (w0 - eta_tilde * grad_f(w0)) * exp(-m*eta),
                  ((1 - exp(-2*m*eta))/m) * I ).

The same law arises as the time-eta marginal of an affine SDE whose drift
anchors the gradient at w0,

    dw_t = -(m*w_t + a * grad_f(w0)) dt + sqrt(2) dB_t,

with anchor coefficient a = m*eta_tilde/(exp(m*eta)-1); under the step-size
coupling a = 1. Euler-Maruyama simulation of this SDE is provided to
cross-validate the closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .sampler import coupled_eta_tilde


@dataclass(frozen=True)
class TransitionKernel:
    """Gaussian one-step transition law with isotropic covariance.

    The covariance is provably isotropic, so it is stored as the scalar
    ``var_scalar`` rather than a d x d matrix.
    """

    target: object
    m: float
    eta: float
    eta_tilde: float
    dim: int

    def __post_init__(self):
        if self.m <= 0 or self.eta <= 0:
            raise ValueError("m and eta must be > 0")
        if self.eta_tilde < 0:
            raise ValueError("eta_tilde must be >= 0")

    @staticmethod
    def coupled(target, eta: float) -> "TransitionKernel":
        """Kernel with the stage sizes tied by m*eta_tilde = exp(m*eta)-1."""
        return TransitionKernel(target, target.m, eta,
                                coupled_eta_tilde(eta, target.m), target.dim)

    @property
    def var_scalar(self) -> float:
        return -math.expm1(-2.0 * self.m * self.eta) / self.m

    def mean_map(self, w0: np.ndarray) -> np.ndarray:
        """(w0 - eta_tilde * grad_f(w0)) * exp(-m*eta); at eta_tilde = 0 this
        is pure exponential shrinkage."""
        w0 = np.asarray(w0, dtype=np.float64)
        decay = math.exp(-self.m * self.eta)
        if self.eta_tilde == 0.0:
            return w0 * decay
        return (w0 - self.eta_tilde * self.target.grad_f(w0)) * decay

    def interpolating_sde(self, w0: np.ndarray) -> "InterpolatingSde":
        """The anchored affine SDE whose time-eta marginal equals this kernel."""
        w0 = np.asarray(w0, dtype=np.float64)
        return InterpolatingSde(
            m=self.m,
            eta=self.eta,
            eta_tilde=self.eta_tilde,
            anchor_gradient=self.target.grad_f(w0),
            anchor_coef=self.m * self.eta_tilde / math.expm1(self.m * self.eta),
        )


@dataclass(frozen=True)
class InterpolatingSde:
    """Affine SDE with gradient frozen at the step's start.

    Drift is ``-(m*w + anchor_coef * anchor_gradient)``; the diffusion
    coefficient is sqrt(2). Under the step coupling ``anchor_coef == 1``
    exactly (set literally, not recomputed, by :meth:`coupled`).
    """

    m: float
    eta: float
    eta_tilde: float
    anchor_gradient: np.ndarray
    anchor_coef: float

    @staticmethod
    def coupled(m: float, eta: float, anchor_gradient) -> "InterpolatingSde":
        return InterpolatingSde(m, eta, coupled_eta_tilde(eta, m),
                                np.asarray(anchor_gradient, dtype=np.float64), 1.0)

    def drift(self, w: np.ndarray) -> np.ndarray:
        return -(self.m * w + self.anchor_coef * self.anchor_gradient)


def kernel_mean(kernel: TransitionKernel, w0: np.ndarray, t: float) -> np.ndarray:
    """Particle mean of the interpolating SDE at time t in [0, eta]:
    exp(-m*t)*w0 - ((1-exp(-m*t))/m)*c*grad_f(w0), with c the anchor
    coefficient (1 under the coupling). At t = eta this equals
    ``kernel.mean_map(w0)`` when the coupling holds."""
    if t < 0 or t > kernel.eta:
        raise ValueError("t must lie in [0, eta]")
    w0 = np.asarray(w0, dtype=np.float64)
    decay = math.exp(-kernel.m * t)
    shrink = -math.expm1(-kernel.m * t) / kernel.m
    coef = kernel.m * kernel.eta_tilde / math.expm1(kernel.m * kernel.eta)
    return decay * w0 - shrink * coef * kernel.target.grad_f(w0)


def transition_log_density(kernel: TransitionKernel, w: np.ndarray,
                           w0: np.ndarray) -> float:
    """Log density of the one-step law at w given w0."""
    w = np.asarray(w, dtype=np.float64)
    w0 = np.asarray(w0, dtype=np.float64)
    if w.shape != w0.shape or w.shape[-1] != kernel.dim:
        raise ValueError("dimension mismatch between w, w0 and the kernel")
    c = kernel.var_scalar
    resid = w - kernel.mean_map(w0)
    return float(-0.5 * kernel.dim * math.log(2.0 * math.pi * c)
                 - np.sum(resid * resid) / (2.0 * c))


def kernel_sample(kernel: TransitionKernel, w0: np.ndarray,
                  stream=None, noise: Optional[np.ndarray] = None) -> np.ndarray:
    """One-shot draw from the one-step law: mean_map(w0) + sqrt(var)*xi.

    Pass ``noise`` to inject xi explicitly (used to check the draw matches
    the two-stage update pathwise); otherwise xi is drawn from ``stream``.
    """
    w0 = np.asarray(w0, dtype=np.float64)
    if noise is None:
        if stream is None:
            raise ValueError("provide a stream or explicit noise")
        flat = np.atleast_2d(w0)
        noise = stream.normals(flat.shape[0], flat.shape[1]).reshape(w0.shape)
    return kernel.mean_map(w0) + math.sqrt(kernel.var_scalar) * noise


def em_simulate(sde: InterpolatingSde, w0: np.ndarray, h: float, n_paths: int,
                stream) -> np.ndarray:
    """Euler-Maruyama trajectories of the anchored SDE from w0 to time eta.

    h must divide eta (to within 1e-12 relative); returns the (n_paths, d)
    terminal positions. Paths are independent and drawn from per-path
    streams, so partitioning across workers cannot change results.
    """
    if h <= 0:
        raise ValueError("h must be > 0")
    ratio = sde.eta / h
    n_sub = round(ratio)
    if n_sub < 1 or abs(ratio - n_sub) > 1e-12 * max(1.0, ratio):
        raise ValueError("h must divide eta")
    w0 = np.asarray(w0, dtype=np.float64)
    d = w0.shape[-1]
    pos = np.broadcast_to(w0, (n_paths, d)).copy()
    scale = math.sqrt(2.0 * h)
    drift_const = sde.anchor_coef * sde.anchor_gradient
    for _ in range(n_sub):
        z = stream.normals(n_paths, d)
        pos += -h * (sde.m * pos + drift_const) + scale * z
    return pos
