"""Convergence metrics: exact Gaussian-chain oracles, closed-form KL,
histogram and sliced-transport estimators, and the step-size theorem bounds.

For quadratic f both sampler updates are affine-Gaussian maps, so the law of
a chain stays Gaussian and its moments obey a closed recursion. That
recursion is the exact oracle against which sampled ensembles and the
theorem bounds are checked, with no Monte Carlo noise of its own.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .targets import TargetConstants

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class GaussianMoments:
    """Mean and per-coordinate variance of a diagonal Gaussian law.

    ``var`` may be a scalar (isotropic) or a vector (diagonal).
    """

    mean: ArrayLike
    var: ArrayLike

    def __post_init__(self):
        if np.any(np.asarray(self.var) <= 0):
            raise ValueError("variance must be positive")


@dataclass(frozen=True)
class BoundEvaluation:
    """One bound-vs-measurement comparison; negative slack means the bound
    was violated (a test failure, not a data error)."""

    k: int
    bound_value: float
    measured: float

    @property
    def slack(self) -> float:
        return self.bound_value - self.measured


def gaussian_chain_advance(mom: GaussianMoments, lam: float, m: float,
                           eta: float, eta_tilde: float) -> GaussianMoments:
    """Exact one-step law update of the two-stage sampler on quadratic f.

    Stage 1 scales (mean, var) by (1 - eta_tilde*lam) and its square; stage
    2 is the exact OU map with decay exp(-m*eta) and injected variance
    (1 - exp(-2*m*eta))/m.
    """
    a = 1.0 - eta_tilde * lam
    decay = math.exp(-m * eta)
    inject = -math.expm1(-2.0 * m * eta) / m
    mean = np.asarray(mom.mean) * (a * decay)
    var = np.asarray(mom.var) * (a * a * decay * decay) + inject
    return GaussianMoments(mean=mean, var=var)


def ula_chain_advance(mom: GaussianMoments, lam: float, m: float,
                      eta: float) -> GaussianMoments:
    """Exact one-step law update of ULA on quadratic f:
    w <- (1 - eta*(m+lam))*w + sqrt(2*eta)*xi."""
    a = 1.0 - eta * (m + lam)
    mean = np.asarray(mom.mean) * a
    var = np.asarray(mom.var) * (a * a) + 2.0 * eta
    return GaussianMoments(mean=mean, var=var)


def gaussian_kl(p: GaussianMoments, q: GaussianMoments) -> float:
    """KL divergence between diagonal Gaussians, summed over coordinates."""
    try:
        mp, vp, mq, vq = np.broadcast_arrays(
            np.asarray(p.mean, dtype=np.float64), np.asarray(p.var, dtype=np.float64),
            np.asarray(q.mean, dtype=np.float64), np.asarray(q.var, dtype=np.float64))
    except ValueError as exc:
        raise ValueError("dimension mismatch between p and q") from exc
    if np.any(vp <= 0) or np.any(vq <= 0):
        raise ValueError("variance must be positive")
    ratio = vp / vq
    return float(np.sum(0.5 * (ratio - 1.0 - np.log(ratio))
                        + (mp - mq) ** 2 / (2.0 * vq)))


def theorem_fixed_bound(k: int, kl0: float, eta: float, c: TargetConstants) -> float:
    """Fixed-step KL upper bound:
    exp(-alpha* eta k) * kl0 + (32 eta / alpha*) Tr(H)."""
    return math.exp(-c.alpha_star * eta * k) * kl0 + 32.0 * eta * c.tr_h / c.alpha_star


def theorem_varying_bound(k: int, t0: int, c: TargetConstants) -> float:
    """Decaying-step KL upper bound for k >= t0:
    2^10 Tr(H) / (27 L^1.5 alpha* + 6 (k - t0) alpha*^2)."""
    if k < t0:
        raise ValueError("bound defined for k >= t0")
    denom = 27.0 * c.L**1.5 * c.alpha_star + 6.0 * (k - t0) * c.alpha_star**2
    return 2.0**10 * c.tr_h / denom


def hist_kl_1d(samples_p: np.ndarray, samples_q: np.ndarray, n_bins: int = 64) -> float:
    """KL estimate between two 1-D samples via additively smoothed histograms.

    Both samples are binned over their pooled range with one pseudo-count
    per bin; identical samples give exactly zero.
    """
    if n_bins < 2:
        raise ValueError("n_bins must be >= 2")
    p = np.asarray(samples_p, dtype=np.float64).ravel()
    q = np.asarray(samples_q, dtype=np.float64).ravel()
    if p.size == 0 or q.size == 0:
        raise ValueError("samples must be non-empty")
    lo = min(p.min(), q.min())
    hi = max(p.max(), q.max())
    if lo == hi:
        return 0.0
    cp, _ = np.histogram(p, bins=n_bins, range=(lo, hi))
    cq, _ = np.histogram(q, bins=n_bins, range=(lo, hi))
    fp = (cp + 1.0) / (p.size + n_bins)
    fq = (cq + 1.0) / (q.size + n_bins)
    return float(np.sum(fp * np.log(fp / fq)))


def sliced_w2(samples_p: np.ndarray, samples_q: np.ndarray,
              n_projections: int, stream) -> float:
    """Sliced transport distance via random 1-D projections.

    Root of the mean (over directions) of the mean squared sorted-order
    differences. Both sample sets must have equal counts; the directions
    come from the given stream, so the estimate is reproducible and
    symmetric in its arguments up to that shared stream.
    """
    p = np.atleast_2d(np.asarray(samples_p, dtype=np.float64))
    q = np.atleast_2d(np.asarray(samples_q, dtype=np.float64))
    if p.shape != q.shape:
        raise ValueError("sample sets must have equal shapes")
    if n_projections < 1:
        raise ValueError("n_projections must be >= 1")
    d = p.shape[1]
    dirs = stream.normals(n_projections, d)
    norms = np.linalg.norm(dirs, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    dirs /= norms
    total = 0.0
    for theta in dirs:
        proj_p = np.sort(p @ theta)
        proj_q = np.sort(q @ theta)
        total += np.mean((proj_p - proj_q) ** 2)
    return math.sqrt(total / n_projections)
