"""Pure-numpy fallback for the compiled core.

Implements the same counter-based Philox4x32-10 draws and the same update
arithmetic as ``_core``, operation for operation, so the two backends agree
to floating-point roundoff (the Philox integer stream is identical bit for
bit). Used automatically when the extension is not built.
"""

import numpy as np
from scipy.special import ndtri

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint64(0x9E3779B9)
_W1 = np.uint64(0xBB67AE85)
_MASK32 = np.uint64(0xFFFFFFFF)
_SHIFT32 = np.uint64(32)

# Scale factor 2^-52; draws map to the open interval (0, 1).
_UNIF_SCALE = 2.220446049250313e-16

# Cap on blocks handled per vectorized pass, to bound temporary memory.
_CHUNK_BLOCKS = 1 << 21


def _philox4x32_10(c0, c1, c2, c3, k0, k1):
    """Vectorized Philox4x32-10. Inputs are uint64 arrays of 32-bit values."""
    for _ in range(10):
        p0 = _M0 * c0
        p1 = _M1 * c2
        hi0 = p0 >> _SHIFT32
        lo0 = p0 & _MASK32
        hi1 = p1 >> _SHIFT32
        lo1 = p1 & _MASK32
        c0 = hi1 ^ c1 ^ k0
        c1 = lo1
        c2 = hi0 ^ c3 ^ k1
        c3 = lo0
        k0 = (k0 + _W0) & _MASK32
        k1 = (k1 + _W1) & _MASK32
    return c0, c1, c2, c3


def philox_words(counter, key):
    """Raw Philox4x32-10 output for known-answer tests."""
    c = [np.uint64(v) for v in counter]
    k = [np.uint64(v) for v in key]
    out = _philox4x32_10(c[0], c[1], c[2], c[3], k[0], k[1])
    return tuple(int(v) for v in out)


def _tag(purpose, k):
    return np.uint64(((int(purpose) & 0x3) << 30) | (int(k) & 0x3FFFFFFF))


def _block_uniforms(seed, streams, tag, blocks):
    """Uniform pairs on (0, 1) for a (rows, blocks) grid of counters."""
    seed = np.uint64(seed)
    k0 = seed & _MASK32
    k1 = seed >> _SHIFT32
    s = np.asarray(streams, dtype=np.uint64)
    c0 = np.broadcast_to(np.asarray(blocks, dtype=np.uint64), (s.size, len(blocks))).ravel()
    c2 = np.repeat(s & _MASK32, len(blocks))
    c3 = np.repeat(s >> _SHIFT32, len(blocks))
    o0, o1, o2, o3 = _philox4x32_10(c0, tag, c2, c3, k0, k1)
    va = (o0 << _SHIFT32) | o1
    vb = (o2 << _SHIFT32) | o3
    u0 = ((va >> np.uint64(12)).astype(np.float64) + 0.5) * _UNIF_SCALE
    u1 = ((vb >> np.uint64(12)).astype(np.float64) + 0.5) * _UNIF_SCALE
    return u0.reshape(s.size, len(blocks)), u1.reshape(s.size, len(blocks))


def _uniform_array(n, d, seed, purpose, k, stream0):
    """(n, d) uniforms laid out exactly like the compiled kernels."""
    nblocks = (d + 1) // 2
    tag = _tag(purpose, k)
    out = np.empty((n, d))
    blocks = np.arange(nblocks)
    rows_per_chunk = max(1, _CHUNK_BLOCKS // nblocks)
    for lo in range(0, n, rows_per_chunk):
        hi = min(n, lo + rows_per_chunk)
        streams = np.arange(int(stream0) + lo, int(stream0) + hi, dtype=np.uint64)
        u0, u1 = _block_uniforms(seed, streams, tag, blocks)
        out[lo:hi, 0::2] = u0[:, : (d + 1) // 2]
        out[lo:hi, 1::2] = u1[:, : d // 2]
    return out


def _normal_array(n, d, seed, purpose, k, stream0):
    return ndtri(_uniform_array(n, d, seed, purpose, k, stream0))


def fill_normals(out, seed, purpose, k, stream0, num_threads):
    n, d = out.shape
    out[...] = _normal_array(n, d, seed, purpose, k, stream0)


def fill_uniforms(out, seed, purpose, k, stream0, num_threads):
    n, d = out.shape
    out[...] = _uniform_array(n, d, seed, purpose, k, stream0)


def _step_noise(pos, seed, k):
    n, d = pos.shape
    return _normal_array(n, d, seed, 0, k, 0)


def ou_step(pos, decay, sigma, seed, k, num_threads):
    z = _step_noise(pos, seed, k)
    pos[...] = pos * decay + sigma * z


def lapd_step_quadratic(pos, lam, eta_tilde, decay, sigma, seed, k, num_threads):
    z = _step_noise(pos, seed, k)
    pos[...] = (pos - eta_tilde * (lam * pos)) * decay + sigma * z


def ula_step_quadratic(pos, lam, m, eta, sigma, seed, k, num_threads):
    z = _step_noise(pos, seed, k)
    pos[...] = pos - eta * (lam * pos + m * pos) + sigma * z


def _softmax_weights(pos, means, logit_offsets):
    """Softmax weights over components, one row per position (max-shifted)."""
    logits = pos @ means.T + logit_offsets
    logits -= logits.max(axis=1, keepdims=True)
    s = np.exp(logits)
    s /= s.sum(axis=1, keepdims=True)
    return s


def _mixture_minus_grad(pos, means, logit_offsets):
    """-grad f(w) = sum_c s_c(w) mu_c, accumulated in component order."""
    s = _softmax_weights(pos, means, logit_offsets)
    acc = np.zeros_like(pos)
    for c in range(means.shape[0]):
        acc += s[:, c, None] * means[c]
    return acc


def mixture_grad(pos, means, logit_offsets, out, num_threads):
    out[...] = -_mixture_minus_grad(pos, means, logit_offsets)


def lapd_step_mixture(pos, means, logit_offsets, eta_tilde, decay, sigma,
                      seed, k, num_threads):
    g = -_mixture_minus_grad(pos, means, logit_offsets)
    z = _step_noise(pos, seed, k)
    pos[...] = (pos - eta_tilde * g) * decay + sigma * z


def ula_step_mixture(pos, means, logit_offsets, m, eta, sigma, seed, k, num_threads):
    g = -_mixture_minus_grad(pos, means, logit_offsets)
    z = _step_noise(pos, seed, k)
    pos[...] = pos - eta * (g + m * pos) + sigma * z
