"""Pure numpy/Python kernel backend.

Every function here consumes uniforms in exactly the same order as its
compiled twin in ``_speedups.pyx``; vectorized steps only ever reorder
arithmetic that does not feed back into the draw sequence.
"""

from __future__ import annotations

import numpy as np


def _resolve_scalar(tables, u: float) -> int:
    cdf = tables.sample_cdf
    idx = int(np.searchsorted(cdf, u, side="right"))
    while idx == len(cdf):
        tables.sample_ensure(u)
        cdf = tables.sample_cdf
        idx = int(np.searchsorted(cdf, u, side="right"))
    return idx


def resolve_iid(tables, u: np.ndarray, out: np.ndarray) -> None:
    """Inverse-CDF resolve of pre-drawn uniforms, extending tables on faults."""
    n = len(u)
    i = 0
    while i < n:
        cdf = tables.sample_cdf
        idx = np.searchsorted(cdf, u[i:], side="right")
        bad = np.flatnonzero(idx == len(cdf))
        if len(bad) == 0:
            out[i:] = idx
            return
        j = int(bad[0])
        out[i:i + j] = idx[:j]
        i += j
        tables.sample_ensure(u[i])


def resolve_iid_clamped(cdf: np.ndarray, u: np.ndarray, out: np.ndarray) -> None:
    """Inverse-CDF resolve where draws beyond the table stay at len(cdf).

    Valid only when the caller rejects any sequence whose sum exceeds a
    bound below len(cdf): clamped draws force that rejection no matter
    their exact value, so the accepted law is unaffected."""
    out[:] = np.searchsorted(cdf, u, side="right")


def exact_sequence(tables, n: int, stream, max_draws: int):
    """Forced-last-coordinate rejection sampler for (xi_1..xi_n | S_n = n-1).

    Consumption per attempt: n-1 uniforms, plus one accept coin whenever
    the forced coordinate is non-negative. Draws beyond the cdf table
    (which must cover at least n entries) are clamped to len(cdf): they
    push the sum past n-1, so the attempt is rejected exactly as with the
    true value, and accepted outputs never contain one. Returns
    (degrees | None, attempts, draws); None signals the proposal-draw
    budget was exhausted.
    """
    M = tables.accept_M
    cdf = tables.sample_cdf
    attempts = 0
    draws = 0
    vals = np.empty(n - 1, dtype=np.int64)
    while True:
        if draws + n > max_draws:
            return None, attempts, draws
        attempts += 1
        u = stream.take(n - 1)
        resolve_iid_clamped(cdf, u, vals)
        draws += n - 1
        forced = n - 1 - int(vals.sum())
        if forced >= 0:
            coin = stream.take1()
            draws += 1
            if coin * M < tables.accept_pmf[forced]:
                out = np.empty(n, dtype=np.int64)
                out[:n - 1] = vals
                out[n - 1] = forced
                return out, attempts, draws


def decorate_blowup(tables, tdeg: np.ndarray, stream) -> np.ndarray:
    """Sample a decoration for every tilted vertex and emit the blown tree.

    Per vertex (DFS order): one uniform chooses y proportional to
    phi_Omega(y)*r(k-y); then one uniform per part step (stop carries
    weight 1 at remainder 0, part x carries phi*_x * r(m-x)). The chain is
    written top-down as (x_l+1, ..., x_1+1, y). Tables must already cover
    max(tdeg); only the stream refill crosses into Python.
    """
    phi_y = tables.phi_y
    r = tables.r_vals
    phi_star = tables.phi_star
    tilted = tables.tilted_vals
    out: list[int] = []
    parts: list[int] = []
    for k in tdeg:
        k = int(k)
        # choose y: first index with running weight sum > u * tilted(k)
        u = stream.take1()
        target = u * tilted[k]
        ymax = min(k, len(phi_y) - 1)
        w = phi_y[:ymax + 1] * r[k - ymax:k + 1][::-1]
        csum = np.cumsum(w)
        y = int(np.searchsorted(csum, target, side="right"))
        if y > ymax:
            nz = np.flatnonzero(w)
            y = int(nz[-1])
        m = k - y
        parts.clear()
        while True:
            u2 = stream.take1()
            target = u2 * r[m]
            acc = 1.0 if m == 0 else 0.0
            if acc > target:
                break
            xmax = min(m, len(phi_star) - 1)
            x = -1
            last_pos = -1
            for xx in range(xmax + 1):
                wx = phi_star[xx] * r[m - xx]
                if wx != 0.0:
                    last_pos = xx
                acc += wx
                if acc > target:
                    x = xx
                    break
            if x < 0:
                x = last_pos
            parts.append(x)
            m -= x
        for x in reversed(parts):
            out.append(x + 1)
        out.append(y)
    return np.asarray(out, dtype=np.int64)


def tree_height(degrees: np.ndarray) -> int:
    """Height of the tree with the given DFS outdegree list."""
    stack: list[int] = []
    h = 0
    for d in degrees:
        if len(stack) > h:
            h = len(stack)
        if d > 0:
            stack.append(int(d))
        else:
            while stack and stack[-1] == 1:
                stack.pop()
            if stack:
                stack[-1] -= 1
    return h


def unconditioned_degrees(tables, stream, cap: int):
    """DFS generation of an unconditioned tree; None when cap is exceeded."""
    out: list[int] = []
    open_ = 1
    while open_ > 0:
        if len(out) >= cap:
            return None
        k = _resolve_scalar(tables, stream.take1())
        out.append(k)
        open_ += k - 1
    return np.asarray(out, dtype=np.int64)


def extend_r(phi_star: np.ndarray, r_old: np.ndarray, new_len: int) -> np.ndarray:
    """Extend r(m) = [z^m] 1/(1 - phi*(z)) by the direct recursion
    r(m)(1 - phi*_0) = 1{m=0} + sum_{x>=1} phi*_x r(m-x)."""
    r = np.empty(new_len, dtype=np.float64)
    m0 = len(r_old)
    r[:m0] = r_old
    denom = 1.0 - phi_star[0]
    if m0 == 0:
        r[0] = 1.0 / denom
        m0 = 1
    kx = len(phi_star) - 1
    for m in range(m0, new_len):
        xhi = min(m, kx)
        s = float(np.dot(phi_star[1:xhi + 1], r[m - 1::-1][:xhi]))
        r[m] = s / denom
    return r
