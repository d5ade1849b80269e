"""Hot sampling/statistics kernels with a compiled core and a pure fallback.

The Cython extension (``_speedups``) and the pure numpy/Python backend
(``_pure``) implement identical uniform-consumption contracts, so for a
given seed they produce bit-identical samples; ``tests/test_kernels.py``
enforces this. Selection happens at import: the compiled module is used
when available unless ``GWCOND_PURE=1`` is set.

Duck-typed table providers passed to the draw kernels expose
``sample_cdf``, ``sample_guide`` (arrays) and ``sample_ensure(u)`` (extend
tables to cover the uniform u); rejection kernels additionally use
``accept_pmf`` and a scalar bound M.
"""

from __future__ import annotations

import os

import numpy as np

GUIDE_SIZE = 4096


def build_guide(cdf: np.ndarray) -> np.ndarray:
    """Bucketed lower/upper search bounds: answer for u in [g/G,(g+1)/G)
    lies in [guide[g], guide[g+1]]."""
    grid = np.arange(GUIDE_SIZE + 1, dtype=np.float64) / GUIDE_SIZE
    return np.searchsorted(cdf, grid, side="right").astype(np.int64)


def tilted_table(phi_y: np.ndarray, r_vals: np.ndarray, r_support: int, kmax: int) -> np.ndarray:
    """tilted[k] = sum_j r[j]*phi_y[k-j], convolving over the short side."""
    out = np.zeros(kmax, dtype=np.float64)
    if len(phi_y) <= r_support:
        for y in range(min(len(phi_y), kmax)):
            w = phi_y[y]
            if w != 0.0:
                out[y:] += w * r_vals[:kmax - y]
    else:
        for j in range(min(r_support, kmax)):
            w = r_vals[j]
            if w != 0.0:
                out[j:] += w * phi_y[:kmax - j]
    return out


def validate_lukasiewicz(degrees) -> bool:
    """True iff the DFS outdegree list encodes a plane tree."""
    n = len(degrees)
    if n == 0:
        return False
    if n <= 64:
        vals = degrees.tolist() if isinstance(degrees, np.ndarray) else list(degrees)
        s = 0
        for i, d in enumerate(vals):
            if d < 0:
                return False
            s += d - 1
            if s < 0 and i < n - 1:
                return False
        return s == -1
    d = np.asarray(degrees, dtype=np.int64)
    if np.any(d < 0):
        return False
    walk = np.cumsum(d - 1)
    return walk[-1] == -1 and np.all(walk[:-1] >= 0)


_FORCE_PURE = os.environ.get("GWCOND_PURE", "") == "1"

if not _FORCE_PURE:
    try:
        from . import _speedups as backend
        BACKEND = "cython"
    except ImportError:  # pragma: no cover - build-less environments
        from . import _pure as backend
        BACKEND = "pure"
else:
    from . import _pure as backend
    BACKEND = "pure"

resolve_iid = backend.resolve_iid
resolve_iid_clamped = backend.resolve_iid_clamped
extend_r = backend.extend_r
exact_sequence = backend.exact_sequence
decorate_blowup = backend.decorate_blowup
tree_height = backend.tree_height
unconditioned_degrees = backend.unconditioned_degrees


def get_backends():
    """Both backends (for parity tests and benchmarks); compiled may be None."""
    from . import _pure
    try:
        from . import _speedups
    except ImportError:
        _speedups = None
    return _pure, _speedups
