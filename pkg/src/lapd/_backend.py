"""Backend selection: compiled extension if available, numpy fallback otherwise.

Set ``SAMPLER_CORE=python`` to force the fallback or ``SAMPLER_CORE=ext`` to
require the extension. ``SAMPLER_THREADS`` caps the worker count used by the
compiled kernels.
"""

import os

_requested = os.environ.get("SAMPLER_CORE", "").strip().lower()

if _requested in ("py", "python"):
    from . import _core_py as core

    BACKEND = "python"
elif _requested in ("", "ext", "auto"):
    try:
        from . import _core as core  # type: ignore[no-redef]

        BACKEND = "ext"
    except ImportError:
        if _requested == "ext":
            raise
        from . import _core_py as core

        BACKEND = "python"
else:
    raise RuntimeError(f"unrecognized SAMPLER_CORE value: {_requested!r}")


def num_threads() -> int:
    """Worker count for compiled kernels: cpu count capped by SAMPLER_THREADS."""
    n = os.cpu_count() or 1
    cap = os.environ.get("SAMPLER_THREADS")
    if cap:
        n = min(n, max(1, int(cap)))
    return n
