# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels: counter-based noise generation and fused chain steps.

Every random draw is a pure function of
``(master_seed, stream, purpose, step, block)`` via Philox4x32-10, so
results are independent of thread scheduling and chunking. The numpy
fallback in ``_core_py`` implements the identical arithmetic.
"""

from cython.parallel cimport prange
from libc.math cimport exp
from libc.stdint cimport uint32_t, uint64_t
from scipy.special.cython_special cimport ndtri


DEF MAX_COMPONENTS = 64

cdef uint32_t PHILOX_M0 = 0xD2511F53u
cdef uint32_t PHILOX_M1 = 0xCD9E8D57u
cdef uint32_t PHILOX_W0 = 0x9E3779B9u
cdef uint32_t PHILOX_W1 = 0xBB67AE85u

# Scale factor 2^-52; draws map to the open interval (0, 1).
cdef double UNIF_SCALE = 2.220446049250313e-16


cdef inline void _philox4x32_10(uint32_t c0, uint32_t c1, uint32_t c2, uint32_t c3,
                                uint32_t k0, uint32_t k1, uint32_t* out) noexcept nogil:
    cdef uint64_t p0, p1
    cdef uint32_t hi0, lo0, hi1, lo1, t0, t2
    cdef int r
    for r in range(10):
        p0 = (<uint64_t> PHILOX_M0) * c0
        p1 = (<uint64_t> PHILOX_M1) * c2
        hi0 = <uint32_t> (p0 >> 32)
        lo0 = <uint32_t> p0
        hi1 = <uint32_t> (p1 >> 32)
        lo1 = <uint32_t> p1
        t0 = hi1 ^ c1 ^ k0
        t2 = hi0 ^ c3 ^ k1
        c0 = t0
        c1 = lo1
        c2 = t2
        c3 = lo0
        k0 = k0 + PHILOX_W0
        k1 = k1 + PHILOX_W1
    out[0] = c0
    out[1] = c1
    out[2] = c2
    out[3] = c3


cdef inline void _block_uniforms(uint64_t seed, uint64_t stream, uint32_t tag,
                                 uint32_t block, double* u0, double* u1) noexcept nogil:
    """Two uniforms in (0, 1) from one Philox block.

    ``tag`` packs the purpose into the top 2 bits and the step counter into
    the low 30 bits.
    """
    cdef uint32_t out[4]
    cdef uint64_t va, vb
    _philox4x32_10(block, tag,
                   <uint32_t> stream, <uint32_t> (stream >> 32),
                   <uint32_t> seed, <uint32_t> (seed >> 32), out)
    va = ((<uint64_t> out[0]) << 32) | out[1]
    vb = ((<uint64_t> out[2]) << 32) | out[3]
    u0[0] = ((va >> 12) + 0.5) * UNIF_SCALE
    u1[0] = ((vb >> 12) + 0.5) * UNIF_SCALE


cdef inline uint32_t _tag(uint32_t purpose, uint64_t k) noexcept nogil:
    return (purpose << 30) | (<uint32_t> k)


cdef inline void _softmax_weights(const double* wrow, const double[:, ::1] means,
                                  const double[::1] logit_offsets, double* s,
                                  Py_ssize_t kk, Py_ssize_t d) noexcept nogil:
    """Softmax weights over mixture components at one position (max-shifted)."""
    cdef Py_ssize_t c, j
    cdef double acc, mx, tot
    mx = -1e308
    for c in range(kk):
        acc = 0.0
        for j in range(d):
            acc = acc + wrow[j] * means[c, j]
        acc = acc + logit_offsets[c]
        s[c] = acc
        if acc > mx:
            mx = acc
    tot = 0.0
    for c in range(kk):
        s[c] = exp(s[c] - mx)
        tot = tot + s[c]
    for c in range(kk):
        s[c] = s[c] / tot


cdef inline void _grad_row_mixture(const double* wrow, double* grow,
                                   const double[:, ::1] means, const double[::1] logit_offsets,
                                   Py_ssize_t kk, Py_ssize_t d) noexcept nogil:
    cdef double s[MAX_COMPONENTS]
    cdef Py_ssize_t c, j
    cdef double acc
    _softmax_weights(wrow, means, logit_offsets, s, kk, d)
    for j in range(d):
        acc = 0.0
        for c in range(kk):
            acc = acc + s[c] * means[c, j]
        grow[j] = -acc


cdef inline void _lapd_row_mixture(double* wrow, const double[:, ::1] means,
                                   const double[::1] logit_offsets, Py_ssize_t kk,
                                   Py_ssize_t d, double eta_tilde, double decay,
                                   double sigma, uint64_t seed, uint64_t stream,
                                   uint32_t tag) noexcept nogil:
    cdef double s[MAX_COMPONENTS]
    cdef Py_ssize_t b, c, j, nblocks = (d + 1) // 2
    cdef double u0, u1, w, g
    _softmax_weights(wrow, means, logit_offsets, s, kk, d)
    for b in range(nblocks):
        _block_uniforms(seed, stream, tag, <uint32_t> b, &u0, &u1)
        j = 2 * b
        g = 0.0
        for c in range(kk):
            g = g + s[c] * means[c, j]
        w = wrow[j]
        wrow[j] = (w - eta_tilde * (-g)) * decay + sigma * ndtri(u0)
        j = 2 * b + 1
        if j < d:
            g = 0.0
            for c in range(kk):
                g = g + s[c] * means[c, j]
            w = wrow[j]
            wrow[j] = (w - eta_tilde * (-g)) * decay + sigma * ndtri(u1)


cdef inline void _ula_row_mixture(double* wrow, const double[:, ::1] means,
                                  const double[::1] logit_offsets, Py_ssize_t kk,
                                  Py_ssize_t d, double m, double eta,
                                  double sigma, uint64_t seed, uint64_t stream,
                                  uint32_t tag) noexcept nogil:
    cdef double s[MAX_COMPONENTS]
    cdef Py_ssize_t b, c, j, nblocks = (d + 1) // 2
    cdef double u0, u1, w, g
    _softmax_weights(wrow, means, logit_offsets, s, kk, d)
    for b in range(nblocks):
        _block_uniforms(seed, stream, tag, <uint32_t> b, &u0, &u1)
        j = 2 * b
        g = 0.0
        for c in range(kk):
            g = g + s[c] * means[c, j]
        w = wrow[j]
        wrow[j] = w - eta * ((-g) + m * w) + sigma * ndtri(u0)
        j = 2 * b + 1
        if j < d:
            g = 0.0
            for c in range(kk):
                g = g + s[c] * means[c, j]
            w = wrow[j]
            wrow[j] = w - eta * ((-g) + m * w) + sigma * ndtri(u1)


cdef inline void _normals_row(double* orow, Py_ssize_t d, uint64_t seed,
                              uint64_t stream, uint32_t tag) noexcept nogil:
    cdef Py_ssize_t b, nblocks = (d + 1) // 2
    cdef double u0, u1
    for b in range(nblocks):
        _block_uniforms(seed, stream, tag, <uint32_t> b, &u0, &u1)
        orow[2 * b] = ndtri(u0)
        if 2 * b + 1 < d:
            orow[2 * b + 1] = ndtri(u1)


cdef inline void _uniforms_row(double* orow, Py_ssize_t d, uint64_t seed,
                               uint64_t stream, uint32_t tag) noexcept nogil:
    cdef Py_ssize_t b, nblocks = (d + 1) // 2
    cdef double u0, u1
    for b in range(nblocks):
        _block_uniforms(seed, stream, tag, <uint32_t> b, &u0, &u1)
        orow[2 * b] = u0
        if 2 * b + 1 < d:
            orow[2 * b + 1] = u1


cdef inline void _ou_row(double* wrow, Py_ssize_t d, double decay, double sigma,
                         uint64_t seed, uint64_t stream, uint32_t tag) noexcept nogil:
    cdef Py_ssize_t b, nblocks = (d + 1) // 2
    cdef double u0, u1
    for b in range(nblocks):
        _block_uniforms(seed, stream, tag, <uint32_t> b, &u0, &u1)
        wrow[2 * b] = wrow[2 * b] * decay + sigma * ndtri(u0)
        if 2 * b + 1 < d:
            wrow[2 * b + 1] = wrow[2 * b + 1] * decay + sigma * ndtri(u1)


cdef inline void _lapd_row_quadratic(double* wrow, Py_ssize_t d, double lam,
                                     double eta_tilde, double decay, double sigma,
                                     uint64_t seed, uint64_t stream,
                                     uint32_t tag) noexcept nogil:
    cdef Py_ssize_t b, nblocks = (d + 1) // 2
    cdef double u0, u1, w
    for b in range(nblocks):
        _block_uniforms(seed, stream, tag, <uint32_t> b, &u0, &u1)
        w = wrow[2 * b]
        wrow[2 * b] = (w - eta_tilde * (lam * w)) * decay + sigma * ndtri(u0)
        if 2 * b + 1 < d:
            w = wrow[2 * b + 1]
            wrow[2 * b + 1] = (w - eta_tilde * (lam * w)) * decay + sigma * ndtri(u1)


cdef inline void _ula_row_quadratic(double* wrow, Py_ssize_t d, double lam,
                                    double m, double eta, double sigma,
                                    uint64_t seed, uint64_t stream,
                                    uint32_t tag) noexcept nogil:
    cdef Py_ssize_t b, nblocks = (d + 1) // 2
    cdef double u0, u1, w
    for b in range(nblocks):
        _block_uniforms(seed, stream, tag, <uint32_t> b, &u0, &u1)
        w = wrow[2 * b]
        wrow[2 * b] = w - eta * (lam * w + m * w) + sigma * ndtri(u0)
        if 2 * b + 1 < d:
            w = wrow[2 * b + 1]
            wrow[2 * b + 1] = w - eta * (lam * w + m * w) + sigma * ndtri(u1)


def philox_words(counter, key):
    """Raw Philox4x32-10 output for known-answer tests.

    Parameters are 4- and 2-sequences of 32-bit ints; returns a 4-tuple.
    """
    cdef uint32_t out[4]
    _philox4x32_10(counter[0], counter[1], counter[2], counter[3],
                   key[0], key[1], out)
    return (out[0], out[1], out[2], out[3])


def fill_normals(double[:, ::1] out, uint64_t seed, uint32_t purpose, uint64_t k,
                 uint64_t stream0, int num_threads):
    """Fill an (n, d) array with standard normals; row i uses stream stream0+i."""
    cdef Py_ssize_t i, n = out.shape[0]
    cdef uint32_t tag = _tag(purpose, k)
    for i in prange(n, nogil=True, num_threads=num_threads, schedule='static'):
        _normals_row(&out[i, 0], out.shape[1], seed, stream0 + i, tag)


def fill_uniforms(double[:, ::1] out, uint64_t seed, uint32_t purpose, uint64_t k,
                  uint64_t stream0, int num_threads):
    """Fill an (n, d) array with uniforms on (0, 1); row i uses stream stream0+i."""
    cdef Py_ssize_t i, n = out.shape[0]
    cdef uint32_t tag = _tag(purpose, k)
    for i in prange(n, nogil=True, num_threads=num_threads, schedule='static'):
        _uniforms_row(&out[i, 0], out.shape[1], seed, stream0 + i, tag)


def ou_step(double[:, ::1] pos, double decay, double sigma,
            uint64_t seed, uint64_t k, int num_threads):
    """In-place exact prior-diffusion step: w <- decay*w + sigma*xi."""
    cdef Py_ssize_t i, n = pos.shape[0]
    cdef uint32_t tag = _tag(0, k)
    for i in prange(n, nogil=True, num_threads=num_threads, schedule='static'):
        _ou_row(&pos[i, 0], pos.shape[1], decay, sigma, seed, i, tag)


def lapd_step_quadratic(double[:, ::1] pos, double lam, double eta_tilde,
                        double decay, double sigma,
                        uint64_t seed, uint64_t k, int num_threads):
    """Fused gradient + prior-diffusion step for f(w) = (lam/2)||w||^2."""
    cdef Py_ssize_t i, n = pos.shape[0]
    cdef uint32_t tag = _tag(0, k)
    for i in prange(n, nogil=True, num_threads=num_threads, schedule='static'):
        _lapd_row_quadratic(&pos[i, 0], pos.shape[1], lam, eta_tilde, decay,
                            sigma, seed, i, tag)


def ula_step_quadratic(double[:, ::1] pos, double lam, double m, double eta,
                       double sigma, uint64_t seed, uint64_t k, int num_threads):
    """In-place Euler-Maruyama step on U for f(w) = (lam/2)||w||^2."""
    cdef Py_ssize_t i, n = pos.shape[0]
    cdef uint32_t tag = _tag(0, k)
    for i in prange(n, nogil=True, num_threads=num_threads, schedule='static'):
        _ula_row_quadratic(&pos[i, 0], pos.shape[1], lam, m, eta, sigma,
                           seed, i, tag)


def mixture_grad(const double[:, ::1] pos, const double[:, ::1] means,
                 const double[::1] logit_offsets, double[:, ::1] out, int num_threads):
    """Gradient of the mixture log-likelihood potential at each row of pos.

    grad f(w) = -sum_c s_c(w) mu_c with s the softmax of
    mu_c . w + logit_offsets[c].
    """
    cdef Py_ssize_t n = pos.shape[0], d = pos.shape[1], kk = means.shape[0]
    cdef Py_ssize_t i
    if kk > MAX_COMPONENTS:
        raise ValueError("mixture kernels support at most 64 components")
    for i in prange(n, nogil=True, num_threads=num_threads, schedule='static'):
        _grad_row_mixture(&pos[i, 0], &out[i, 0], means, logit_offsets, kk, d)


def lapd_step_mixture(double[:, ::1] pos, const double[:, ::1] means,
                      const double[::1] logit_offsets, double eta_tilde,
                      double decay, double sigma,
                      uint64_t seed, uint64_t k, int num_threads):
    """Fused mixture-gradient + prior-diffusion step, in place."""
    cdef Py_ssize_t n = pos.shape[0], d = pos.shape[1], kk = means.shape[0]
    cdef Py_ssize_t i
    cdef uint32_t tag = _tag(0, k)
    if kk > MAX_COMPONENTS:
        raise ValueError("mixture kernels support at most 64 components")
    for i in prange(n, nogil=True, num_threads=num_threads, schedule='static'):
        _lapd_row_mixture(&pos[i, 0], means, logit_offsets, kk, pos.shape[1],
                          eta_tilde, decay, sigma, seed, i, tag)


def ula_step_mixture(double[:, ::1] pos, const double[:, ::1] means,
                     const double[::1] logit_offsets, double m, double eta,
                     double sigma, uint64_t seed, uint64_t k, int num_threads):
    """In-place Euler-Maruyama step on U for the mixture potential."""
    cdef Py_ssize_t n = pos.shape[0], d = pos.shape[1], kk = means.shape[0]
    cdef Py_ssize_t i
    cdef uint32_t tag = _tag(0, k)
    if kk > MAX_COMPONENTS:
        raise ValueError("mixture kernels support at most 64 components")
    for i in prange(n, nogil=True, num_threads=num_threads, schedule='static'):
        _ula_row_mixture(&pos[i, 0], means, logit_offsets, kk, pos.shape[1],
                         m, eta, sigma, seed, i, tag)
