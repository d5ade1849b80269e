# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernel backend; bit-compatible with ``_pure``.

Uniform consumption, comparison rules, and clamp behaviour mirror the pure
backend exactly: a draw resolves to the first index k with cdf[k] > u, the
accept rule is ``coin * M < pmf[forced]``, and inverse scans pick the first
prefix weight sum exceeding ``u * total`` (falling back to the last
positive weight on float residue). Stream position is synced to the Python
object before any callback (refill or table extension).
"""

import numpy as np

cimport numpy as cnp


cdef inline Py_ssize_t _lookup(const double[::1] cdf, const long long[::1] guide, double u) noexcept nogil:
    cdef Py_ssize_t g_buckets = guide.shape[0] - 1
    cdef Py_ssize_t g = <Py_ssize_t>(u * g_buckets)
    cdef Py_ssize_t lo, hi, mid
    if g >= g_buckets:
        g = g_buckets - 1
    lo = guide[g]
    hi = guide[g + 1]
    while lo < hi:
        mid = (lo + hi) >> 1
        if cdf[mid] <= u:
            lo = mid + 1
        else:
            hi = mid
    return lo


def resolve_iid(tables, const double[::1] u, long long[::1] out):
    """Inverse-CDF resolve of pre-drawn uniforms, extending tables on faults."""
    cdef const double[::1] cdf = tables.sample_cdf
    cdef const long long[::1] guide = tables.sample_guide
    cdef Py_ssize_t cdf_len = cdf.shape[0]
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t i, k
    for i in range(n):
        k = _lookup(cdf, guide, u[i])
        while k == cdf_len:
            tables.sample_ensure(u[i])
            cdf = tables.sample_cdf
            guide = tables.sample_guide
            cdf_len = cdf.shape[0]
            k = _lookup(cdf, guide, u[i])
        out[i] = k


def resolve_iid_clamped(const double[::1] cdf, const double[::1] u, long long[::1] out):
    """Inverse-CDF resolve where draws beyond the table stay at len(cdf);
    see the pure twin for the validity condition."""
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t lo, hi, mid, i
    cdef double ui
    for i in range(n):
        ui = u[i]
        lo = 0
        hi = cdf.shape[0]
        while lo < hi:
            mid = (lo + hi) >> 1
            if cdf[mid] <= ui:
                lo = mid + 1
            else:
                hi = mid
        out[i] = lo


def exact_sequence(tables, Py_ssize_t n, stream, long long max_draws):
    """Forced-last-coordinate rejection sampler; see the pure twin.

    Draws beyond the cdf table clamp to len(cdf) (>= n by contract); they
    push the sum past n-1, which rejects the attempt exactly as the true
    value would, and accepted outputs never contain one."""
    cdef double accept_m = tables.accept_M
    cdef const double[::1] cdf = tables.sample_cdf
    cdef const long long[::1] guide = tables.sample_guide
    cdef const double[::1] pmf = tables.accept_pmf
    cdef double[::1] buf = stream.buf
    cdef Py_ssize_t pos = stream.pos
    cdef Py_ssize_t nbuf = buf.shape[0]
    out_arr = np.empty(n, dtype=np.int64)
    cdef long long[::1] out = out_arr
    cdef long long attempts = 0, draws = 0, s, forced
    cdef Py_ssize_t i, k
    cdef double u, coin
    while True:
        if draws + n > max_draws:
            stream.pos = pos
            return None, attempts, draws
        attempts += 1
        s = 0
        for i in range(n - 1):
            if pos >= nbuf:
                stream.pos = pos
                stream.refill()
                buf = stream.buf
                nbuf = buf.shape[0]
                pos = 0
            u = buf[pos]
            pos += 1
            k = _lookup(cdf, guide, u)
            out[i] = k
            s += k
        draws += n - 1
        forced = n - 1 - s
        if forced >= 0:
            if pos >= nbuf:
                stream.pos = pos
                stream.refill()
                buf = stream.buf
                nbuf = buf.shape[0]
                pos = 0
            coin = buf[pos]
            pos += 1
            draws += 1
            if coin * accept_m < pmf[forced]:
                out[n - 1] = forced
                stream.pos = pos
                return out_arr, attempts, draws


def decorate_blowup(tables, const long long[::1] tdeg, stream):
    """Per-vertex decoration sampling fused with chain emission.

    Tables must already cover max(tdeg) (caller pre-extends), so the only
    Python callbacks are stream refills.
    """
    cdef const double[::1] phi_y = tables.phi_y
    cdef const double[::1] r = tables.r_vals
    cdef const double[::1] phi_star = tables.phi_star
    cdef const double[::1] tilted = tables.tilted_vals
    cdef double[::1] buf = stream.buf
    cdef Py_ssize_t pos = stream.pos
    cdef Py_ssize_t nbuf = buf.shape[0]
    cdef Py_ssize_t n = tdeg.shape[0]
    cdef Py_ssize_t capacity = n + 16 + n // 2
    out_arr = np.empty(capacity, dtype=np.int64)
    cdef long long[::1] out = out_arr
    cdef Py_ssize_t w = 0
    parts_arr = np.empty(256, dtype=np.int64)
    cdef long long[::1] parts = parts_arr
    cdef Py_ssize_t nparts, v, i, ymax, xmax
    cdef long long k, y, m, x, xx, last_pos
    cdef double u, target, acc, wx
    for v in range(n):
        k = tdeg[v]
        if pos >= nbuf:
            stream.pos = pos
            stream.refill()
            buf = stream.buf
            nbuf = buf.shape[0]
            pos = 0
        u = buf[pos]
        pos += 1
        target = u * tilted[k]
        ymax = k if k < phi_y.shape[0] - 1 else phi_y.shape[0] - 1
        acc = 0.0
        y = -1
        last_pos = -1
        for i in range(ymax + 1):
            wx = phi_y[i] * r[k - i]
            if wx != 0.0:
                last_pos = i
            acc += wx
            if acc > target:
                y = i
                break
        if y < 0:
            y = last_pos
        m = k - y
        nparts = 0
        while True:
            if pos >= nbuf:
                stream.pos = pos
                stream.refill()
                buf = stream.buf
                nbuf = buf.shape[0]
                pos = 0
            u = buf[pos]
            pos += 1
            target = u * r[m]
            acc = 1.0 if m == 0 else 0.0
            if acc > target:
                break
            xmax = m if m < phi_star.shape[0] - 1 else phi_star.shape[0] - 1
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
            if nparts >= parts.shape[0]:
                parts_arr = np.concatenate([parts_arr, np.empty(parts_arr.shape[0], dtype=np.int64)])
                parts = parts_arr
            parts[nparts] = x
            nparts += 1
            m -= x
        while w + nparts + 1 > capacity:
            capacity = 2 * capacity
            out_arr = np.concatenate([out_arr, np.empty(capacity - out.shape[0], dtype=np.int64)])
            out = out_arr
        for i in range(nparts - 1, -1, -1):
            out[w] = parts[i] + 1
            w += 1
        out[w] = y
        w += 1
    stream.pos = pos
    return out_arr[:w].copy()


def tree_height(const long long[::1] degrees):
    """Height of the tree with the given DFS outdegree list."""
    cdef Py_ssize_t n = degrees.shape[0]
    stack_arr = np.empty(n + 1, dtype=np.int64)
    cdef long long[::1] stack = stack_arr
    cdef Py_ssize_t sp = 0, i
    cdef long long h = 0, d
    for i in range(n):
        if sp > h:
            h = sp
        d = degrees[i]
        if d > 0:
            stack[sp] = d
            sp += 1
        else:
            while sp > 0 and stack[sp - 1] == 1:
                sp -= 1
            if sp > 0:
                stack[sp - 1] -= 1
    return int(h)


def unconditioned_degrees(tables, stream, Py_ssize_t cap):
    """DFS generation of an unconditioned tree; None when cap is exceeded."""
    cdef const double[::1] cdf = tables.sample_cdf
    cdef const long long[::1] guide = tables.sample_guide
    cdef Py_ssize_t cdf_len = cdf.shape[0]
    cdef double[::1] buf = stream.buf
    cdef Py_ssize_t pos = stream.pos
    cdef Py_ssize_t nbuf = buf.shape[0]
    cdef Py_ssize_t capacity = 64
    out_arr = np.empty(capacity, dtype=np.int64)
    cdef long long[::1] out = out_arr
    cdef long long open_ = 1
    cdef Py_ssize_t size = 0, k
    cdef double u
    while open_ > 0:
        if size >= cap:
            stream.pos = pos
            return None
        if pos >= nbuf:
            stream.pos = pos
            stream.refill()
            buf = stream.buf
            nbuf = buf.shape[0]
            pos = 0
        u = buf[pos]
        pos += 1
        k = _lookup(cdf, guide, u)
        while k == cdf_len:
            stream.pos = pos
            tables.sample_ensure(u)
            cdf = tables.sample_cdf
            guide = tables.sample_guide
            cdf_len = cdf.shape[0]
            k = _lookup(cdf, guide, u)
        if size >= capacity:
            capacity = 2 * capacity
            out_arr = np.concatenate([out_arr, np.empty(capacity - out.shape[0], dtype=np.int64)])
            out = out_arr
        out[size] = k
        size += 1
        open_ += k - 1
    stream.pos = pos
    return out_arr[:size].copy()


def extend_r(const double[::1] phi_star, const double[::1] r_old, Py_ssize_t new_len):
    """Direct O(m)-per-entry recursion for r = 1/(1 - phi*)."""
    r_arr = np.empty(new_len, dtype=np.float64)
    cdef double[::1] r = r_arr
    cdef Py_ssize_t m0 = r_old.shape[0]
    cdef double denom = 1.0 - phi_star[0]
    cdef Py_ssize_t kx = phi_star.shape[0] - 1
    cdef Py_ssize_t m, x, xhi
    cdef double s
    for m in range(m0):
        r[m] = r_old[m]
    if m0 == 0:
        r[0] = 1.0 / denom
        m0 = 1
    for m in range(m0, new_len):
        xhi = m if m < kx else kx
        s = 0.0
        for x in range(1, xhi + 1):
            s += phi_star[x] * r[m - x]
        r[m] = s / denom
    return r_arr
