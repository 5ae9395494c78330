"""Target potentials U(w) = f(w) + (m/2)||w||^2 and their spectral constants.

Two families are provided:

* :class:`QuadraticTarget` -- f(w) = (lam/2)||w||^2, an analytically solvable
  oracle family whose target law is N(0, (m+lam)^-1 I).
* :class:`GaussianMixtureTarget` -- the non-log-concave equal-weight mixture
  p(w) proportional to sum_i exp(-||w - mu_i||^2 / 2), for which
  f(w) = -log[(1/K) sum_i exp(mu_i.w - ||mu_i||^2/2)] and m = 1.

Targets are immutable after construction; all operations are pure functions
of (target, w) and safe to share across concurrent chains.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._backend import core, num_threads


@dataclass(frozen=True)
class TargetConstants:
    """Spectral constants of a target: prior curvature m, a uniform bound L
    on ||hess f||, the traces of the Hessian-square envelope H and of its PSD
    root, and the log-Sobolev constant of the target law."""

    m: float
    L: float
    tr_h: float
    tr_h_sqrt: float
    alpha_star: float

    def __post_init__(self):
        if not self.m > 0:
            raise ValueError("constants.m must be > 0")
        if not self.alpha_star > 0:
            raise ValueError("constants.alpha_star must be > 0")
        if self.L < 0:
            raise ValueError("constants.L must be >= 0")
        if self.tr_h < 0 or self.tr_h_sqrt < 0:
            raise ValueError("constants.tr_h and constants.tr_h_sqrt must be >= 0")
        # Tr(A^2) <= Tr(A)^2 for PSD A; allow roundoff slack.
        if self.tr_h > self.tr_h_sqrt**2 * (1 + 1e-12) + 1e-12:
            raise ValueError("constants.tr_h must not exceed tr_h_sqrt**2")


def _check_points(w: np.ndarray, dim: int) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    if w.shape[-1] != dim:
        raise ValueError(f"dimension mismatch: expected {dim}, got {w.shape[-1]}")
    if not np.all(np.isfinite(w)):
        raise ValueError("non-finite input position")
    return w


@dataclass(frozen=True)
class QuadraticTarget:
    """f(w) = (lam/2)||w||^2 with Gaussian prior exponent (m/2)||w||^2.

    The target law is N(0, (m+lam)^-1 I); constants resolve in closed form:
    L = lam, H = lam^2 I, alpha_star = m + lam.
    """

    lam: float
    dim: int
    m: float = 1.0

    kind = "quadratic"

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lambda must be >= 0")
        if self.m <= 0:
            raise ValueError("constants.m must be > 0")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")

    def grad_f(self, w: np.ndarray) -> np.ndarray:
        w = _check_points(w, self.dim)
        return self.lam * w

    def hessian_f(self, w: np.ndarray) -> np.ndarray:
        _check_points(w, self.dim)
        return self.lam * np.eye(self.dim)

    def potential_f(self, w: np.ndarray) -> np.ndarray:
        w = _check_points(w, self.dim)
        return 0.5 * self.lam * np.sum(w * w, axis=-1)

    def constants(self) -> TargetConstants:
        d = self.dim
        return TargetConstants(
            m=self.m,
            L=self.lam,
            tr_h=self.lam**2 * d,
            tr_h_sqrt=self.lam * d,
            alpha_star=self.m + self.lam,
        )

    def target_variance(self) -> float:
        return 1.0 / (self.m + self.lam)

    def sample_target(self, n: int, stream) -> np.ndarray:
        """Exact draws from N(0, (m+lam)^-1 I)."""
        return np.sqrt(self.target_variance()) * stream.normals(n, self.dim)


class GaussianMixtureTarget:
    """Equal-weight Gaussian mixture with unit component covariance.

    Parameters
    ----------
    means : (K, d) array
        Component means mu_i.
    alpha_star : float
        Log-Sobolev constant of the target, supplied by the caller. The
        default 0.1 is a heuristic for well-separated two-component setups;
        no closed form is available.
    m : float
        Prior curvature. The mixture decomposition fixes m = 1; the
        parameter exists so misconfiguration can be rejected explicitly.
    """

    kind = "mixture"

    def __init__(self, means, alpha_star: float = 0.1, m: float = 1.0):
        means = np.atleast_2d(np.asarray(means, dtype=np.float64))
        if means.ndim != 2 or means.shape[0] < 1:
            raise ValueError("means must be a (K, d) array with K >= 1")
        if not np.all(np.isfinite(means)):
            raise ValueError("means must be finite")
        if m <= 0:
            raise ValueError("constants.m must be > 0")
        if m != 1.0:
            raise ValueError("mixture targets require m = 1 (unit component covariance)")
        if alpha_star <= 0:
            raise ValueError("constants.alpha_star must be > 0")
        self.means = means
        self.means.setflags(write=False)
        self.m = float(m)
        self.alpha_star = float(alpha_star)
        self.dim = means.shape[1]
        self.n_components = means.shape[0]
        self.r_mu = float(np.max(np.linalg.norm(means, axis=1)))
        # Shifted logits: mu_i . w - ||mu_i||^2 / 2.
        self._logit_offsets = -0.5 * np.sum(means * means, axis=1)
        self._logit_offsets.setflags(write=False)
        self._h_half = self._build_h_half()
        self._h_half.setflags(write=False)
        self._tr_h_sqrt = float(np.trace(self._h_half))
        # Tr(H) = Tr((H^1/2)^2) = ||H^1/2||_F^2 for symmetric H^1/2.
        self._tr_h = float(np.sum(self._h_half * self._h_half))
        self._L = _power_iteration_norm(self._h_half)

    def _build_h_half(self) -> np.ndarray:
        h = np.zeros((self.dim, self.dim))
        mu = self.means
        for i in range(self.n_components):
            for j in range(i + 1, self.n_components):
                diff = mu[i] - mu[j]
                h += np.outer(diff, diff)
        return h

    def _softmax_weights(self, w: np.ndarray) -> np.ndarray:
        logits = w @ self.means.T + self._logit_offsets
        logits -= logits.max(axis=-1, keepdims=True)
        s = np.exp(logits)
        s /= s.sum(axis=-1, keepdims=True)
        return s

    def potential_f(self, w: np.ndarray) -> np.ndarray:
        """f(w) = -log[(1/K) sum_i exp(mu_i.w - ||mu_i||^2/2)], max-shifted."""
        w = _check_points(w, self.dim)
        logits = w @ self.means.T + self._logit_offsets
        mx = logits.max(axis=-1)
        lse = mx + np.log(np.sum(np.exp(logits - mx[..., None]), axis=-1))
        return -(lse - np.log(self.n_components))

    def grad_f(self, w: np.ndarray) -> np.ndarray:
        w = _check_points(w, self.dim)
        pos = np.ascontiguousarray(np.atleast_2d(w))
        out = np.empty_like(pos)
        core.mixture_grad(pos, self.means, self._logit_offsets, out, num_threads())
        return out.reshape(w.shape)

    def hessian_f(self, w: np.ndarray) -> np.ndarray:
        """hess f(w) = g g^T - sum_i s_i mu_i mu_i^T with g = sum_i s_i mu_i."""
        w = _check_points(w, self.dim)
        if w.ndim != 1:
            raise ValueError("hessian_f expects a single position")
        s = self._softmax_weights(w)
        g = s @ self.means
        h = np.outer(g, g) - (self.means.T * s) @ self.means
        return 0.5 * (h + h.T)

    def h_half(self) -> np.ndarray:
        """PSD envelope root: sum over component pairs of the outer products
        of mean differences."""
        return self._h_half

    def constants(self) -> TargetConstants:
        return TargetConstants(
            m=self.m,
            L=self._L,
            tr_h=self._tr_h,
            tr_h_sqrt=self._tr_h_sqrt,
            alpha_star=self.alpha_star,
        )

    def embedded(self, dim: int) -> "GaussianMixtureTarget":
        """The same mixture with means zero-padded to a larger dimension.

        Padding leaves all pairwise mean differences, hence H^1/2 and the
        schedule constants, unchanged.
        """
        if dim < self.dim:
            raise ValueError("cannot embed into a smaller dimension")
        means = np.zeros((self.n_components, dim))
        means[:, : self.dim] = self.means
        return GaussianMixtureTarget(means, alpha_star=self.alpha_star, m=self.m)

    def sample_target(self, n: int, stream) -> np.ndarray:
        """Exact draws from the mixture: uniform component, unit Gaussian."""
        z = stream.normals(n, self.dim)
        u = stream.uniforms(n, 1)[:, 0]
        idx = np.minimum((u * self.n_components).astype(np.int64), self.n_components - 1)
        return z + self.means[idx]


def _power_iteration_norm(mat: np.ndarray, iters: int = 50, tol: float = 1e-10) -> float:
    """Largest eigenvalue of a PSD matrix by power iteration."""
    d = mat.shape[0]
    if not np.any(mat):
        return 0.0
    v = np.full(d, 1.0 / np.sqrt(d))
    ev = 0.0
    for _ in range(iters):
        mv = mat @ v
        norm = np.linalg.norm(mv)
        if norm == 0.0:
            return 0.0
        v = mv / norm
        new_ev = float(v @ (mat @ v))
        if abs(new_ev - ev) <= tol * max(1.0, abs(new_ev)):
            ev = new_ev
            break
        ev = new_ev
    return ev


def grad_f(target, w: np.ndarray) -> np.ndarray:
    """Gradient of the likelihood potential f at w ((d,) or (n, d))."""
    return target.grad_f(w)


def hessian_f(target, w: np.ndarray) -> np.ndarray:
    """Hessian of f at a single position w; symmetric (d, d)."""
    if not hasattr(target, "hessian_f"):
        raise TypeError(f"target kind {target.kind!r} does not support Hessians")
    return target.hessian_f(w)


def h_half(target) -> np.ndarray:
    """PSD matrix H^1/2 bounding -hess f from above (mixture targets)."""
    if not hasattr(target, "h_half"):
        raise TypeError(f"target kind {target.kind!r} does not expose H^1/2")
    return target.h_half()


def grad_U(target, w: np.ndarray) -> np.ndarray:
    """Gradient of the full potential: grad f(w) + m*w."""
    return target.grad_f(w) + target.m * np.asarray(w, dtype=np.float64)


def potential_U(target, w: np.ndarray) -> np.ndarray:
    """Full potential U(w) = f(w) + (m/2)||w||^2."""
    w = np.asarray(w, dtype=np.float64)
    return target.potential_f(w) + 0.5 * target.m * np.sum(w * w, axis=-1)
