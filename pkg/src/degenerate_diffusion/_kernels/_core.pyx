# cython: language_level=3
"""Compiled time-marching kernels.

Both the parabolic march and the leapfrog march act on a tridiagonal
operator given by its three diagonals ``lower`` (L[i+1, i]), ``diag`` and
``upper`` (L[i, i+1]).  The Python twin lives in ``_fallback.py`` and must
return the same numbers up to rounding.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport isfinite

cnp.import_array()


cdef void _factor(const double[:] lower, const double[:] diag, const double[:] upper,
                  double gh, double[:] cp, double[:] inv, double[:] sub) noexcept nogil:
    # LU sweep of (I - gh*L); cp holds the modified super-diagonal
    cdef Py_ssize_t n = diag.shape[0]
    cdef Py_ssize_t i
    cdef double d
    d = 1.0 - gh * diag[0]
    inv[0] = 1.0 / d
    for i in range(1, n):
        sub[i] = -gh * lower[i - 1]
        cp[i - 1] = -gh * upper[i - 1] * inv[i - 1]
        d = 1.0 - gh * diag[i] - sub[i] * cp[i - 1]
        inv[i] = 1.0 / d


cdef void _solve(double[:] cp, double[:] inv, double[:] sub, double[:] r) noexcept nogil:
    cdef Py_ssize_t n = r.shape[0]
    cdef Py_ssize_t i
    r[0] = r[0] * inv[0]
    for i in range(1, n):
        r[i] = (r[i] - sub[i] * r[i - 1]) * inv[i]
    for i in range(n - 2, -1, -1):
        r[i] = r[i] - cp[i] * r[i + 1]


cdef void _apply(const double[:] lower, const double[:] diag, const double[:] upper,
                 double[:] v, double[:] out) noexcept nogil:
    cdef Py_ssize_t n = v.shape[0]
    cdef Py_ssize_t i
    if n == 1:
        out[0] = diag[0] * v[0]
        return
    out[0] = diag[0] * v[0] + upper[0] * v[1]
    for i in range(1, n - 1):
        out[i] = lower[i - 1] * v[i - 1] + diag[i] * v[i] + upper[i] * v[i + 1]
    out[n - 1] = lower[n - 2] * v[n - 2] + diag[n - 1] * v[n - 1]


cdef void _rk_step(const double[:] lo, const double[:] di, const double[:] up,
                   const double[:, :] A, const double[:] bw, double h, double[:] u,
                   double[:, :] K, double[:] w, double[:] cp, double[:] inv, double[:] sub,
                   const double[:, :] F, bint has_src) noexcept nogil:
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t ns = bw.shape[0]
    cdef Py_ssize_t s, j, i
    cdef double acc
    for s in range(ns):
        for i in range(n):
            acc = u[i]
            for j in range(s):
                acc = acc + h * A[s, j] * K[j, i]
            w[i] = acc
        _apply(lo, di, up, w, K[s])
        if has_src:
            for i in range(n):
                K[s, i] = K[s, i] + F[s, i]
        _solve(cp, inv, sub, K[s])
    for i in range(n):
        acc = 0.0
        for s in range(ns):
            acc = acc + bw[s] * K[s, i]
        u[i] = u[i] + h * acc


def solve_tridiagonal(lower, diag, upper, rhs):
    """Thomas algorithm for a general tridiagonal system."""
    cdef const double[:] lo = np.ascontiguousarray(lower, dtype=np.float64)
    cdef const double[:] di = np.ascontiguousarray(diag, dtype=np.float64)
    cdef const double[:] up = np.ascontiguousarray(upper, dtype=np.float64)
    x_arr = np.array(rhs, dtype=np.float64, copy=True)
    cdef double[:] x = x_arr
    cdef Py_ssize_t n = di.shape[0]
    cdef double[:] cp = np.zeros(max(n - 1, 1))
    cdef double[:] dd = np.empty(n)
    cdef Py_ssize_t i
    cdef double m
    if x.shape[0] != n or lo.shape[0] != n - 1 or up.shape[0] != n - 1:
        raise ValueError("inconsistent tridiagonal sizes")
    with nogil:
        dd[0] = di[0]
        for i in range(1, n):
            if dd[i - 1] == 0.0:
                break
            m = lo[i - 1] / dd[i - 1]
            dd[i] = di[i] - m * up[i - 1]
            x[i] = x[i] - m * x[i - 1]
    for i in range(n):
        if dd[i] == 0.0 or not isfinite(dd[i]):
            raise np.linalg.LinAlgError("singular tridiagonal system")
    with nogil:
        x[n - 1] = x[n - 1] / dd[n - 1]
        for i in range(n - 2, -1, -1):
            x[i] = (x[i] - up[i] * x[i + 1]) / dd[i]
    return x_arr


def march(lower, diag, upper, u0, steps, counts, tableau, source=None, double t_start=0.0):
    """Advance du/dt = L u + f with a singly diagonally implicit RK scheme.

    ``steps`` are the flattened sub-step sizes and ``counts[n]`` how many of
    them make up output interval n.  Returns an array of shape
    (len(counts) + 1, n_free) holding the state after every interval.
    """
    A_np, b_np, c_np = tableau
    cdef const double[:] lo = np.ascontiguousarray(lower, dtype=np.float64)
    cdef const double[:] di = np.ascontiguousarray(diag, dtype=np.float64)
    cdef const double[:] up = np.ascontiguousarray(upper, dtype=np.float64)
    cdef const double[:] h_all = np.ascontiguousarray(steps, dtype=np.float64)
    cdef const long[:] cnt = np.ascontiguousarray(counts, dtype=np.int64)
    cdef const double[:, :] A = np.ascontiguousarray(A_np, dtype=np.float64)
    cdef const double[:] bw = np.ascontiguousarray(b_np, dtype=np.float64)
    cdef const double[:] cw = np.ascontiguousarray(c_np, dtype=np.float64)
    cdef Py_ssize_t n = di.shape[0]
    cdef Py_ssize_t ns = bw.shape[0]
    cdef Py_ssize_t nout = cnt.shape[0]
    cdef double gamma = A[0, 0]

    out_np = np.empty((nout + 1, n))
    cdef double[:, :] out = out_np
    cdef double[:] u = np.array(u0, dtype=np.float64, copy=True)
    cdef double[:, :] K = np.zeros((ns, n))
    cdef double[:] w = np.empty(n)
    cdef double[:] cp = np.zeros(n)
    cdef double[:] inv = np.empty(n)
    cdef double[:] sub = np.zeros(n)
    cdef const double[:] fv
    cdef double[:, :] F = np.zeros((ns, n))
    cdef Py_ssize_t k, s, m, pos = 0
    cdef double h, h_prev = -1.0, t = t_start
    cdef bint has_src = source is not None

    out[0, :] = u
    for k in range(nout):
        for m in range(cnt[k]):
            h = h_all[pos]
            pos += 1
            if has_src:
                for s in range(ns):
                    fv = np.ascontiguousarray(source(t + cw[s] * h), dtype=np.float64)
                    F[s, :] = fv
            with nogil:
                if h != h_prev:
                    _factor(lo, di, up, gamma * h, cp, inv, sub)
                    h_prev = h
                _rk_step(lo, di, up, A, bw, h, u, K, w, cp, inv, sub, F, has_src)
            t = t + h
        out[k + 1, :] = u
    return out_np


def leapfrog_march(lower, diag, upper, u0, double h, long nsteps, long record_every):
    """Explicit leapfrog for u'' = L u started from rest.

    Returns the states at steps 0, record_every, 2*record_every, ...
    """
    cdef const double[:] lo = np.ascontiguousarray(lower, dtype=np.float64)
    cdef const double[:] di = np.ascontiguousarray(diag, dtype=np.float64)
    cdef const double[:] up = np.ascontiguousarray(upper, dtype=np.float64)
    cdef Py_ssize_t n = di.shape[0]
    cdef long nrec = nsteps // record_every + 1
    out_np = np.empty((nrec, n))
    cdef double[:, :] out = out_np
    cdef double[:] prev = np.array(u0, dtype=np.float64, copy=True)
    cdef double[:] cur = np.empty(n)
    cdef double[:] nxt
    cdef double[:] Lu = np.empty(n)
    cdef double h2 = h * h
    cdef Py_ssize_t i
    cdef long k, r = 1

    out[0, :] = prev
    if nsteps == 0:
        return out_np
    with nogil:
        _apply(lo, di, up, prev, Lu)
        for i in range(n):
            cur[i] = prev[i] + 0.5 * h2 * Lu[i]
    if record_every == 1:
        out[r, :] = cur
        r += 1
    for k in range(2, nsteps + 1):
        with nogil:
            _apply(lo, di, up, cur, Lu)
            for i in range(n):
                prev[i] = 2.0 * cur[i] - prev[i] + h2 * Lu[i]
        nxt = prev
        prev = cur
        cur = nxt
        if k % record_every == 0:
            out[r, :] = cur
            r += 1
    return out_np
