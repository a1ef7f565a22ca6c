"""Hot numeric kernels, JIT-compiled with numba when available.

The pure-numpy fallback implements the same algorithms with vectorized
loops.  Selection happens once at import time: set ``BALPHA_NUMBA=0``
(or ``off``/``false``) to force the numpy path; anything else tries to
import numba and silently falls back if the import fails.

All kernels operate on plain float64 ndarrays so both backends are
interchangeable; ``backend_name()`` reports which one is active.
"""

import os

import numpy as np

_FLAG = os.environ.get("BALPHA_NUMBA", "1").strip().lower()
_WANT_NUMBA = _FLAG not in ("0", "off", "false", "no")

if _WANT_NUMBA:
    try:
        from numba import njit

        HAVE_NUMBA = True
    except ImportError:
        HAVE_NUMBA = False
else:
    HAVE_NUMBA = False


def backend_name() -> str:
    return "numba" if HAVE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# Tridiagonal (Thomas) solves.  lo[0] and up[n-1] are ignored.


def _thomas_py(lo, dg, up, rhs):
    n = dg.shape[0]
    cp = np.empty(n)
    xp = np.empty(n)
    cp[0] = up[0] / dg[0]
    xp[0] = rhs[0] / dg[0]
    for i in range(1, n):
        m = dg[i] - lo[i] * cp[i - 1]
        cp[i] = up[i] / m
        xp[i] = (rhs[i] - lo[i] * xp[i - 1]) / m
    x = np.empty(n)
    x[n - 1] = xp[n - 1]
    for i in range(n - 2, -1, -1):
        x[i] = xp[i] - cp[i] * x[i + 1]
    return x


def _thomas_many_py(lo, dg, up, rhs2d):
    # Same matrix, many right-hand sides: factor once, sweep vectorized
    # over the batch axis.
    n = dg.shape[0]
    k = rhs2d.shape[0]
    cp = np.empty(n)
    m = np.empty(n)
    m[0] = dg[0]
    cp[0] = up[0] / m[0]
    for i in range(1, n):
        m[i] = dg[i] - lo[i] * cp[i - 1]
        cp[i] = up[i] / m[i]
    xp = np.empty((k, n))
    xp[:, 0] = rhs2d[:, 0] / m[0]
    for i in range(1, n):
        xp[:, i] = (rhs2d[:, i] - lo[i] * xp[:, i - 1]) / m[i]
    x = np.empty((k, n))
    x[:, n - 1] = xp[:, n - 1]
    for i in range(n - 2, -1, -1):
        x[:, i] = xp[:, i] - cp[i] * x[:, i + 1]
    return x


# ---------------------------------------------------------------------------
# Cubic Lagrange interpolation on a uniform grid, stencil clamped at the
# edges, constant extrapolation of the edge values outside the grid.


def _interp_cubic_py(x0, dx, vals, xq):
    n = vals.shape[0]
    t = (xq - x0) / dx
    cell = np.floor(t).astype(np.int64)
    below = t <= 0.0
    above = t >= n - 1
    b = np.clip(cell - 1, 0, n - 4)
    s = t - b
    w0 = -(s - 1.0) * (s - 2.0) * (s - 3.0) / 6.0
    w1 = s * (s - 2.0) * (s - 3.0) / 2.0
    w2 = -s * (s - 1.0) * (s - 3.0) / 2.0
    w3 = s * (s - 1.0) * (s - 2.0) / 6.0
    out = w0 * vals[b] + w1 * vals[b + 1] + w2 * vals[b + 2] + w3 * vals[b + 3]
    out = np.where(below, vals[0], out)
    out = np.where(above, vals[n - 1], out)
    return out


def _interp_cubic_nonuniform_py(xs, ys, xq):
    n = xs.shape[0]
    idx = np.searchsorted(xs, xq) - 1
    idx = np.clip(idx, 0, n - 2)
    b = np.clip(idx - 1, 0, n - 4)
    p0 = xs[b]
    p1 = xs[b + 1]
    p2 = xs[b + 2]
    p3 = xs[b + 3]
    q = xq
    w0 = (q - p1) * (q - p2) * (q - p3) / ((p0 - p1) * (p0 - p2) * (p0 - p3))
    w1 = (q - p0) * (q - p2) * (q - p3) / ((p1 - p0) * (p1 - p2) * (p1 - p3))
    w2 = (q - p0) * (q - p1) * (q - p3) / ((p2 - p0) * (p2 - p1) * (p2 - p3))
    w3 = (q - p0) * (q - p1) * (q - p2) / ((p3 - p0) * (p3 - p1) * (p3 - p2))
    return w0 * ys[b] + w1 * ys[b + 1] + w2 * ys[b + 2] + w3 * ys[b + 3]


# ---------------------------------------------------------------------------
# Characteristic marching.  Integrates dx/dt = lam(t) + z(t, x) with
# classical RK4 through every node of a uniform time grid, ``nsub``
# substeps per grid interval, starting at node ``s_idx``.  ``zfr`` holds
# the advecting field per time node on a uniform spatial grid (zx0, zdx);
# space interpolation is cubic with edge-value extrapolation (the field
# is compactly supported, so edge value 0), time interpolation linear
# within each grid interval.  ``lam_stage[j, l, q]`` carries the time
# profile at the three distinct RK4 stage times of substep l in interval
# j (q = 0: start, 1: midpoint, 2: end).


def _flow_march_py(zfr, zx0, zdx, lam_stage, dt, nsub, x_init, s_idx):
    m1 = zfr.shape[0]
    m = m1 - 1
    k = x_init.shape[0]
    h = dt / nsub
    phi = np.empty((m1, k))
    phi[s_idx] = x_init

    def zt(j, w, xq):
        a = _interp_cubic_py(zx0, zdx, zfr[j], xq)
        b = _interp_cubic_py(zx0, zdx, zfr[j + 1], xq)
        return (1.0 - w) * a + w * b

    # forward
    x = x_init.copy()
    for j in range(s_idx, m):
        for l in range(nsub):
            w0 = l / nsub
            wh = (l + 0.5) / nsub
            w1 = (l + 1.0) / nsub
            k1 = lam_stage[j, l, 0] + zt(j, w0, x)
            k2 = lam_stage[j, l, 1] + zt(j, wh, x + 0.5 * h * k1)
            k3 = lam_stage[j, l, 1] + zt(j, wh, x + 0.5 * h * k2)
            k4 = lam_stage[j, l, 2] + zt(j, w1, x + h * k3)
            x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        phi[j + 1] = x
    # backward
    x = x_init.copy()
    for j in range(s_idx - 1, -1, -1):
        for l in range(nsub - 1, -1, -1):
            w0 = (l + 1.0) / nsub
            wh = (l + 0.5) / nsub
            w1 = l / nsub
            k1 = lam_stage[j, l, 2] + zt(j, w0, x)
            k2 = lam_stage[j, l, 1] + zt(j, wh, x - 0.5 * h * k1)
            k3 = lam_stage[j, l, 1] + zt(j, wh, x - 0.5 * h * k2)
            k4 = lam_stage[j, l, 0] + zt(j, w1, x - h * k3)
            x = x - (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        phi[j] = x
    return phi


def _invert_rows_py(phi, xs, queries):
    # Row r of phi is a strictly increasing map xs -> phi[r]; return the
    # cubic-interpolated preimages of ``queries`` under every row.
    q = phi.shape[0]
    out = np.empty((q, queries.shape[0]))
    for r in range(q):
        out[r] = _interp_cubic_nonuniform_py(phi[r], xs, queries)
    return out


if HAVE_NUMBA:

    @njit(cache=True)
    def _interp_cubic_nb(x0, dx, vals, xq):
        n = vals.shape[0]
        out = np.empty(xq.shape[0])
        for i in range(xq.shape[0]):
            t = (xq[i] - x0) / dx
            if t <= 0.0:
                out[i] = vals[0]
            elif t >= n - 1:
                out[i] = vals[n - 1]
            else:
                b = int(t) - 1
                if b < 0:
                    b = 0
                elif b > n - 4:
                    b = n - 4
                s = t - b
                w0 = -(s - 1.0) * (s - 2.0) * (s - 3.0) / 6.0
                w1 = s * (s - 2.0) * (s - 3.0) / 2.0
                w2 = -s * (s - 1.0) * (s - 3.0) / 2.0
                w3 = s * (s - 1.0) * (s - 2.0) / 6.0
                out[i] = (
                    w0 * vals[b]
                    + w1 * vals[b + 1]
                    + w2 * vals[b + 2]
                    + w3 * vals[b + 3]
                )
        return out

    @njit(cache=True)
    def _thomas_nb(lo, dg, up, rhs):
        n = dg.shape[0]
        cp = np.empty(n)
        xp = np.empty(n)
        cp[0] = up[0] / dg[0]
        xp[0] = rhs[0] / dg[0]
        for i in range(1, n):
            m = dg[i] - lo[i] * cp[i - 1]
            cp[i] = up[i] / m
            xp[i] = (rhs[i] - lo[i] * xp[i - 1]) / m
        x = np.empty(n)
        x[n - 1] = xp[n - 1]
        for i in range(n - 2, -1, -1):
            x[i] = xp[i] - cp[i] * x[i + 1]
        return x

    @njit(cache=True)
    def _thomas_many_nb(lo, dg, up, rhs2d):
        n = dg.shape[0]
        k = rhs2d.shape[0]
        cp = np.empty(n)
        m = np.empty(n)
        m[0] = dg[0]
        cp[0] = up[0] / m[0]
        for i in range(1, n):
            m[i] = dg[i] - lo[i] * cp[i - 1]
            cp[i] = up[i] / m[i]
        x = np.empty((k, n))
        for r in range(k):
            xp = np.empty(n)
            xp[0] = rhs2d[r, 0] / m[0]
            for i in range(1, n):
                xp[i] = (rhs2d[r, i] - lo[i] * xp[i - 1]) / m[i]
            x[r, n - 1] = xp[n - 1]
            for i in range(n - 2, -1, -1):
                x[r, i] = xp[i] - cp[i] * x[r, i + 1]
        return x

    @njit(cache=True)
    def _zt_eval_nb(zfr, zx0, zdx, j, w, xq, out):
        n = zfr.shape[1]
        for i in range(xq.shape[0]):
            t = (xq[i] - zx0) / zdx
            if t <= 0.0:
                a = zfr[j, 0]
                b = zfr[j + 1, 0]
            elif t >= n - 1:
                a = zfr[j, n - 1]
                b = zfr[j + 1, n - 1]
            else:
                bs = int(t) - 1
                if bs < 0:
                    bs = 0
                elif bs > n - 4:
                    bs = n - 4
                s = t - bs
                w0 = -(s - 1.0) * (s - 2.0) * (s - 3.0) / 6.0
                w1 = s * (s - 2.0) * (s - 3.0) / 2.0
                w2 = -s * (s - 1.0) * (s - 3.0) / 2.0
                w3 = s * (s - 1.0) * (s - 2.0) / 6.0
                a = (
                    w0 * zfr[j, bs]
                    + w1 * zfr[j, bs + 1]
                    + w2 * zfr[j, bs + 2]
                    + w3 * zfr[j, bs + 3]
                )
                b = (
                    w0 * zfr[j + 1, bs]
                    + w1 * zfr[j + 1, bs + 1]
                    + w2 * zfr[j + 1, bs + 2]
                    + w3 * zfr[j + 1, bs + 3]
                )
            out[i] = (1.0 - w) * a + w * b

    @njit(cache=True)
    def _flow_march_nb(zfr, zx0, zdx, lam_stage, dt, nsub, x_init, s_idx):
        m1 = zfr.shape[0]
        m = m1 - 1
        k = x_init.shape[0]
        h = dt / nsub
        phi = np.empty((m1, k))
        for i in range(k):
            phi[s_idx, i] = x_init[i]
        xa = x_init.copy()
        tmp = np.empty(k)
        f1 = np.empty(k)
        f2 = np.empty(k)
        f3 = np.empty(k)
        f4 = np.empty(k)
        for j in range(s_idx, m):
            for l in range(nsub):
                w0 = l / nsub
                wh = (l + 0.5) / nsub
                w1 = (l + 1.0) / nsub
                _zt_eval_nb(zfr, zx0, zdx, j, w0, xa, f1)
                for i in range(k):
                    f1[i] += lam_stage[j, l, 0]
                    tmp[i] = xa[i] + 0.5 * h * f1[i]
                _zt_eval_nb(zfr, zx0, zdx, j, wh, tmp, f2)
                for i in range(k):
                    f2[i] += lam_stage[j, l, 1]
                    tmp[i] = xa[i] + 0.5 * h * f2[i]
                _zt_eval_nb(zfr, zx0, zdx, j, wh, tmp, f3)
                for i in range(k):
                    f3[i] += lam_stage[j, l, 1]
                    tmp[i] = xa[i] + h * f3[i]
                _zt_eval_nb(zfr, zx0, zdx, j, w1, tmp, f4)
                for i in range(k):
                    f4[i] += lam_stage[j, l, 2]
                    xa[i] = xa[i] + (h / 6.0) * (
                        f1[i] + 2.0 * f2[i] + 2.0 * f3[i] + f4[i]
                    )
            for i in range(k):
                phi[j + 1, i] = xa[i]
        for i in range(k):
            xa[i] = x_init[i]
        for j in range(s_idx - 1, -1, -1):
            for l in range(nsub - 1, -1, -1):
                w0 = (l + 1.0) / nsub
                wh = (l + 0.5) / nsub
                w1 = l / nsub
                _zt_eval_nb(zfr, zx0, zdx, j, w0, xa, f1)
                for i in range(k):
                    f1[i] += lam_stage[j, l, 2]
                    tmp[i] = xa[i] - 0.5 * h * f1[i]
                _zt_eval_nb(zfr, zx0, zdx, j, wh, tmp, f2)
                for i in range(k):
                    f2[i] += lam_stage[j, l, 1]
                    tmp[i] = xa[i] - 0.5 * h * f2[i]
                _zt_eval_nb(zfr, zx0, zdx, j, wh, tmp, f3)
                for i in range(k):
                    f3[i] += lam_stage[j, l, 1]
                    tmp[i] = xa[i] - h * f3[i]
                _zt_eval_nb(zfr, zx0, zdx, j, w1, tmp, f4)
                for i in range(k):
                    f4[i] += lam_stage[j, l, 0]
                    xa[i] = xa[i] - (h / 6.0) * (
                        f1[i] + 2.0 * f2[i] + 2.0 * f3[i] + f4[i]
                    )
            for i in range(k):
                phi[j, i] = xa[i]
        return phi

    @njit(cache=True)
    def _interp_cubic_nonuniform_nb(xs, ys, xq):
        n = xs.shape[0]
        out = np.empty(xq.shape[0])
        for i in range(xq.shape[0]):
            q = xq[i]
            lo = 0
            hi = n - 1
            while hi - lo > 1:
                mid = (lo + hi) // 2
                if xs[mid] <= q:
                    lo = mid
                else:
                    hi = mid
            b = lo - 1
            if b < 0:
                b = 0
            elif b > n - 4:
                b = n - 4
            p0 = xs[b]
            p1 = xs[b + 1]
            p2 = xs[b + 2]
            p3 = xs[b + 3]
            w0 = (q - p1) * (q - p2) * (q - p3) / ((p0 - p1) * (p0 - p2) * (p0 - p3))
            w1 = (q - p0) * (q - p2) * (q - p3) / ((p1 - p0) * (p1 - p2) * (p1 - p3))
            w2 = (q - p0) * (q - p1) * (q - p3) / ((p2 - p0) * (p2 - p1) * (p2 - p3))
            w3 = (q - p0) * (q - p1) * (q - p2) / ((p3 - p0) * (p3 - p1) * (p3 - p2))
            out[i] = w0 * ys[b] + w1 * ys[b + 1] + w2 * ys[b + 2] + w3 * ys[b + 3]
        return out

    @njit(cache=True)
    def _invert_rows_nb(phi, xs, queries):
        q = phi.shape[0]
        out = np.empty((q, queries.shape[0]))
        for r in range(q):
            out[r] = _interp_cubic_nonuniform_nb(phi[r], xs, queries)
        return out


def thomas_solve(lo, dg, up, rhs):
    """Solve one tridiagonal system; lo[0] and up[-1] are ignored."""
    if HAVE_NUMBA:
        return _thomas_nb(
            np.ascontiguousarray(lo, dtype=np.float64),
            np.ascontiguousarray(dg, dtype=np.float64),
            np.ascontiguousarray(up, dtype=np.float64),
            np.ascontiguousarray(rhs, dtype=np.float64),
        )
    return _thomas_py(
        np.asarray(lo, float), np.asarray(dg, float), np.asarray(up, float),
        np.asarray(rhs, float),
    )


def thomas_solve_many(lo, dg, up, rhs2d):
    """Solve the same tridiagonal system for a batch of right-hand sides."""
    if HAVE_NUMBA:
        return _thomas_many_nb(
            np.ascontiguousarray(lo, dtype=np.float64),
            np.ascontiguousarray(dg, dtype=np.float64),
            np.ascontiguousarray(up, dtype=np.float64),
            np.ascontiguousarray(rhs2d, dtype=np.float64),
        )
    return _thomas_many_py(
        np.asarray(lo, float), np.asarray(dg, float), np.asarray(up, float),
        np.asarray(rhs2d, float),
    )


def interp_cubic(x0, dx, vals, xq):
    """Cubic Lagrange interpolation on a uniform grid (edge-clamped)."""
    xq = np.ascontiguousarray(xq, dtype=np.float64)
    vals = np.ascontiguousarray(vals, dtype=np.float64)
    if HAVE_NUMBA:
        return _interp_cubic_nb(float(x0), float(dx), vals, xq)
    return _interp_cubic_py(float(x0), float(dx), vals, xq)


def interp_cubic_nonuniform(xs, ys, xq):
    """Cubic Lagrange interpolation on strictly increasing nodes ``xs``."""
    xs = np.ascontiguousarray(xs, dtype=np.float64)
    ys = np.ascontiguousarray(ys, dtype=np.float64)
    xq = np.ascontiguousarray(xq, dtype=np.float64)
    if HAVE_NUMBA:
        return _interp_cubic_nonuniform_nb(xs, ys, xq)
    return _interp_cubic_nonuniform_py(xs, ys, xq)


def flow_march(zfr, zx0, zdx, lam_stage, dt, nsub, x_init, s_idx):
    """March characteristics through all time nodes from node ``s_idx``."""
    zfr = np.ascontiguousarray(zfr, dtype=np.float64)
    lam_stage = np.ascontiguousarray(lam_stage, dtype=np.float64)
    x_init = np.ascontiguousarray(x_init, dtype=np.float64)
    if HAVE_NUMBA:
        return _flow_march_nb(
            zfr, float(zx0), float(zdx), lam_stage, float(dt), nsub, x_init,
            s_idx,
        )
    return _flow_march_py(zfr, float(zx0), float(zdx), lam_stage, float(dt),
                          nsub, x_init, s_idx)


def invert_rows(phi, xs, queries):
    """Preimages of ``queries`` under each monotone row map xs -> phi[r]."""
    phi = np.ascontiguousarray(phi, dtype=np.float64)
    xs = np.ascontiguousarray(xs, dtype=np.float64)
    queries = np.ascontiguousarray(queries, dtype=np.float64)
    if HAVE_NUMBA:
        return _invert_rows_nb(phi, xs, queries)
    return _invert_rows_py(phi, xs, queries)
