"""Reproducible counter-based random streams.

All randomness in the package is derived from Philox4x32-10 keyed by the
master seed. A draw is addressed by ``(stream, purpose, k, block)``:

* chain ``i`` steps use ``stream=i, purpose=STEP, k=step index``,
* chain initialization uses ``purpose=INIT``,
* reference draws from the target law use ``purpose=REF``,
* everything else (projections, substep noise, ...) uses ``purpose=AUX``
  with a caller-chosen ``k`` label.

Because draws are pure functions of their address, results do not depend on
thread scheduling, chunk sizes, or the order in which consumers run.
"""

from __future__ import annotations

import numpy as np

from ._backend import core, num_threads

STEP = 0
INIT = 1
REF = 2
AUX = 3


def normals(n: int, d: int, seed: int, purpose: int, k: int, stream0: int = 0) -> np.ndarray:
    """(n, d) standard normals; row i is drawn from stream ``stream0 + i``."""
    out = np.empty((n, d))
    core.fill_normals(out, seed, purpose, k, stream0, num_threads())
    return out


def uniforms(n: int, d: int, seed: int, purpose: int, k: int, stream0: int = 0) -> np.ndarray:
    """(n, d) uniforms on (0, 1); row i is drawn from stream ``stream0 + i``."""
    out = np.empty((n, d))
    core.fill_uniforms(out, seed, purpose, k, stream0, num_threads())
    return out


class Stream:
    """A sequential view of one auxiliary stream.

    Successive calls advance an internal draw-batch label, so a consumer can
    make repeated independent draws while staying inside its own counter
    subspace. Recreating the Stream replays the identical sequence.
    """

    def __init__(self, seed: int, purpose: int = AUX, k0: int = 0):
        self.seed = int(seed)
        self.purpose = purpose
        self._k = int(k0)

    def normals(self, n: int, d: int) -> np.ndarray:
        out = normals(n, d, self.seed, self.purpose, self._k, stream0=0)
        self._k += 1
        return out

    def uniforms(self, n: int, d: int) -> np.ndarray:
        out = uniforms(n, d, self.seed, self.purpose, self._k, stream0=0)
        self._k += 1
        return out
