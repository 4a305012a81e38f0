"""Pure-Python twins of the compiled kernels (numpy + LAPACK gt routines)."""
import numpy as np
from scipy.linalg import lapack


def _apply(lower, diag, upper, v):
    out = diag * v
    out[:-1] += upper * v[1:]
    out[1:] += lower * v[:-1]
    return out


def solve_tridiagonal(lower, diag, upper, rhs):
    """Solve a tridiagonal system with LAPACK dgttrf/dgttrs."""
    lower = np.asarray(lower, dtype=np.float64)
    diag = np.asarray(diag, dtype=np.float64)
    upper = np.asarray(upper, dtype=np.float64)
    rhs = np.asarray(rhs, dtype=np.float64)
    n = diag.shape[0]
    if rhs.shape[0] != n or lower.shape[0] != n - 1 or upper.shape[0] != n - 1:
        raise ValueError("inconsistent tridiagonal sizes")
    if n < 3:  # the f2py wrapper of dgttrf rejects n = 2
        A = np.diag(diag) + np.diag(lower, -1) + np.diag(upper, 1)
        try:
            return np.linalg.solve(A, rhs)
        except np.linalg.LinAlgError:
            raise np.linalg.LinAlgError("singular tridiagonal system") from None
    dl, d, du, du2, ipiv, info = lapack.dgttrf(lower, diag, upper)
    if info != 0:
        raise np.linalg.LinAlgError("singular tridiagonal system")
    x, info = lapack.dgttrs(dl, d, du, du2, ipiv, rhs)
    return x


class _Factor:
    def __init__(self, lower, diag, upper, gh):
        self.lu = lapack.dgttrf(-gh * lower, 1.0 - gh * diag, -gh * upper)[:5]

    def solve(self, r):
        return lapack.dgttrs(*self.lu, r)[0]


def march(lower, diag, upper, u0, steps, counts, tableau, source=None, t_start=0.0):
    """Same contract as the compiled ``march``."""
    A, b, c = (np.asarray(z, dtype=np.float64) for z in tableau)
    lower = np.asarray(lower, dtype=np.float64)
    diag = np.asarray(diag, dtype=np.float64)
    upper = np.asarray(upper, dtype=np.float64)
    steps = np.asarray(steps, dtype=np.float64)
    counts = np.asarray(counts, dtype=np.int64)
    gamma = A[0, 0]
    ns = b.shape[0]
    u = np.array(u0, dtype=np.float64, copy=True)
    out = np.empty((counts.shape[0] + 1, u.shape[0]))
    out[0] = u
    fac = None
    h_prev = -1.0
    t = t_start
    pos = 0
    for k, m in enumerate(counts):
        for h in steps[pos:pos + m]:
            h = float(h)
            if h != h_prev:
                fac = _Factor(lower, diag, upper, gamma * h)
                h_prev = h
            K = []
            for s in range(ns):
                w = u.copy()
                for j in range(s):
                    w += (h * A[s, j]) * K[j]
                r = _apply(lower, diag, upper, w)
                if source is not None:
                    r += np.asarray(source(t + c[s] * h), dtype=np.float64)
                K.append(fac.solve(r))
            incr = np.zeros_like(u)
            for s in range(ns):
                incr += b[s] * K[s]
            u = u + h * incr
            t += h
        pos += m
        out[k + 1] = u
    return out


def leapfrog_march(lower, diag, upper, u0, h, nsteps, record_every):
    """Same contract as the compiled ``leapfrog_march``."""
    lower = np.asarray(lower, dtype=np.float64)
    diag = np.asarray(diag, dtype=np.float64)
    upper = np.asarray(upper, dtype=np.float64)
    prev = np.array(u0, dtype=np.float64, copy=True)
    out = np.empty((nsteps // record_every + 1, prev.shape[0]))
    out[0] = prev
    if nsteps == 0:
        return out
    h2 = h * h
    cur = prev + 0.5 * h2 * _apply(lower, diag, upper, prev)
    r = 1
    if record_every == 1:
        out[r] = cur
        r += 1
    for k in range(2, nsteps + 1):
        nxt = 2.0 * cur - prev + h2 * _apply(lower, diag, upper, cur)
        prev, cur = cur, nxt
        if k % record_every == 0:
            out[r] = cur
            r += 1
    return out
