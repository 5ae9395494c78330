"""Target potentials: gradients, Hessians, the envelope matrix, constants."""

import numpy as np
import pytest

from lapd.targets import (GaussianMixtureTarget, QuadraticTarget, TargetConstants,
                          grad_U, grad_f, h_half, hessian_f, potential_U)


def fd_gradient(fn, w, h=1e-5):
    """Central finite differences, the independent oracle for gradients."""
    g = np.empty_like(w)
    for i in range(w.size):
        wp, wm = w.copy(), w.copy()
        wp[i] += h
        wm[i] -= h
        g[i] = (fn(wp) - fn(wm)) / (2 * h)
    return g


def sym_pair():
    return GaussianMixtureTarget([[1.0, 0.0], [-1.0, 0.0]], alpha_star=0.1)


class TestGradF:
    def test_single_component_is_linear(self):
        t = GaussianMixtureTarget([[3.0, 0.0]])
        for w in ([0.0, 0.0], [5.0, -2.0], [-1.0, 7.0]):
            np.testing.assert_array_equal(grad_f(t, np.array(w)), [-3.0, 0.0])

    def test_symmetric_pair_cancels_at_origin(self):
        np.testing.assert_array_equal(grad_f(sym_pair(), np.zeros(2)), [0.0, 0.0])

    def test_matches_finite_differences(self):
        t = sym_pair()
        w = np.array([0.5, 0.0])
        fd = fd_gradient(lambda x: float(t.potential_f(x)), w)
        err = np.linalg.norm(grad_f(t, w) - fd) / (1 + np.linalg.norm(fd))
        assert err < 1e-6

    def test_batched_rows_match_single_calls(self):
        t = sym_pair()
        pts = np.random.default_rng(0).uniform(-2, 2, size=(20, 2))
        batched = grad_f(t, pts)
        for row, w in zip(batched, pts):
            np.testing.assert_array_equal(row, grad_f(t, w))

    def test_rejects_bad_input(self):
        t = sym_pair()
        with pytest.raises(ValueError, match="dimension mismatch"):
            grad_f(t, np.zeros(3))
        with pytest.raises(ValueError, match="non-finite"):
            grad_f(t, np.array([np.nan, 0.0]))

    def test_log_sum_exp_stays_finite_far_out(self):
        gen = np.random.default_rng(1)
        means = gen.uniform(-5, 5, size=(4, 3))
        means = means / np.linalg.norm(means, axis=1, keepdims=True) * 5.0
        t = GaussianMixtureTarget(means)
        for _ in range(20):
            w = gen.normal(size=3)
            w = w / np.linalg.norm(w) * 1e3
            assert np.all(np.isfinite(grad_f(t, w)))


class TestHessianF:
    def test_single_component_is_zero(self):
        t = GaussianMixtureTarget([[2.0, -1.0]])
        np.testing.assert_allclose(hessian_f(t, np.array([0.3, 0.4])), 0.0, atol=1e-15)

    def test_quadratic_is_constant(self):
        t = QuadraticTarget(lam=2.0, dim=3)
        np.testing.assert_array_equal(hessian_f(t, np.zeros(3)), 2.0 * np.eye(3))

    def test_matches_finite_differences_of_gradient(self):
        t = sym_pair()
        w = np.array([0.3, 0.1])
        fd = np.column_stack([
            fd_gradient(lambda x, i=i: float(grad_f(t, x)[i]), w) for i in range(2)])
        err = np.max(np.abs(hessian_f(t, w) - 0.5 * (fd + fd.T)))
        assert err / (1 + np.max(np.abs(fd))) < 1e-5

    def test_symmetry(self):
        gen = np.random.default_rng(2)
        t = GaussianMixtureTarget(gen.uniform(-2, 2, size=(3, 4)))
        for _ in range(10):
            h = hessian_f(t, gen.uniform(-3, 3, size=4))
            assert np.max(np.abs(h - h.T)) < 1e-12


class TestHHalf:
    def test_single_component(self):
        t = GaussianMixtureTarget([[1.0, 2.0]])
        np.testing.assert_array_equal(h_half(t), np.zeros((2, 2)))
        assert t.constants().tr_h == 0.0

    def test_symmetric_pair_explicit(self):
        t = sym_pair()
        np.testing.assert_array_equal(h_half(t), [[4.0, 0.0], [0.0, 0.0]])
        c = t.constants()
        assert c.tr_h_sqrt == 4.0
        assert c.tr_h == 16.0
        # trace bound 16 K^4 R^4 with K=2, R=1
        assert c.tr_h <= 16 * 2**4 * t.r_mu**4

    def test_coincident_means_give_zero(self):
        t = GaussianMixtureTarget([[1.0, 1.0]] * 3)
        np.testing.assert_array_equal(h_half(t), np.zeros((2, 2)))

    def test_trace_identity(self):
        gen = np.random.default_rng(3)
        for _ in range(10):
            t = GaussianMixtureTarget(gen.uniform(-2, 2, size=(4, 3)))
            hh = h_half(t)
            assert abs(t.constants().tr_h - np.sum(hh * hh)) < 1e-10

    def test_envelope_dominates_negative_hessian(self):
        gen = np.random.default_rng(4)
        t = GaussianMixtureTarget(gen.uniform(-2, 2, size=(3, 4)))
        cap = np.linalg.eigvalsh(h_half(t))[-1]
        for _ in range(100):
            ev = np.linalg.eigvalsh(-hessian_f(t, gen.uniform(-3, 3, size=4)))
            assert ev[0] >= -1e-10
            assert ev[-1] <= cap + 1e-10


class TestGradU:
    def test_quadratic(self):
        t = QuadraticTarget(lam=1.0, dim=2, m=1.0)
        np.testing.assert_array_equal(grad_U(t, np.array([2.0, 0.0])), [4.0, 0.0])

    def test_mixture_vanishes_at_symmetric_origin(self):
        np.testing.assert_array_equal(grad_U(sym_pair(), np.zeros(2)), [0.0, 0.0])

    def test_matches_finite_differences_of_U(self):
        t = sym_pair()
        w = np.array([0.5, 0.0])
        fd = fd_gradient(lambda x: float(potential_U(t, x)), w)
        err = np.linalg.norm(grad_U(t, w) - fd) / (1 + np.linalg.norm(fd))
        assert err < 1e-6
        np.testing.assert_array_equal(grad_U(t, w), grad_f(t, w) + w)


class TestGradientProperty:
    @pytest.mark.parametrize("dim,n_comp", [(2, 2), (5, 3), (8, 4)])
    def test_fd_agreement_over_box(self, dim, n_comp):
        gen = np.random.default_rng(100 + dim)
        t = GaussianMixtureTarget(gen.uniform(-2, 2, size=(n_comp, dim)))
        for _ in range(100):
            w = gen.uniform(-3, 3, size=dim)
            fd = fd_gradient(lambda x: float(t.potential_f(x)), w)
            err = np.linalg.norm(grad_f(t, w) - fd) / (1 + np.linalg.norm(fd))
            assert err < 1e-6


class TestConstants:
    def test_quadratic_resolution(self):
        t = QuadraticTarget(lam=1.0, dim=4, m=1.0)
        c = t.constants()
        assert (c.L, c.tr_h, c.tr_h_sqrt, c.alpha_star) == (1.0, 4.0, 4.0, 2.0)
        assert c.tr_h <= c.L**2 * t.dim and c.tr_h_sqrt <= c.L * t.dim

    def test_mixture_L_is_largest_envelope_eigenvalue(self):
        gen = np.random.default_rng(5)
        t = GaussianMixtureTarget(gen.uniform(-2, 2, size=(3, 4)))
        assert abs(t.constants().L - np.linalg.eigvalsh(h_half(t))[-1]) < 1e-8

    def test_validation(self):
        with pytest.raises(ValueError, match="constants.m"):
            TargetConstants(m=0.0, L=1, tr_h=1, tr_h_sqrt=1, alpha_star=1)
        with pytest.raises(ValueError, match="alpha_star"):
            TargetConstants(m=1, L=1, tr_h=1, tr_h_sqrt=1, alpha_star=0)
        with pytest.raises(ValueError, match="tr_h"):
            TargetConstants(m=1, L=1, tr_h=5.0, tr_h_sqrt=2.0, alpha_star=1)
        with pytest.raises(ValueError, match="constants.m"):
            GaussianMixtureTarget([[1.0]], m=-1.0)

    def test_embedding_preserves_geometry(self):
        base = GaussianMixtureTarget([[1.0], [-1.0]], alpha_star=0.1)
        for d in (2, 8, 32, 128):
            t = base.embedded(d)
            c = t.constants()
            assert c.tr_h == 16.0 and c.tr_h_sqrt == 4.0
            assert t.dim == d and t.r_mu == 1.0

    def test_unsupported_ops_raise(self):
        qt = QuadraticTarget(lam=1.0, dim=2)
        with pytest.raises(TypeError, match="H\\^1/2"):
            h_half(qt)
