# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels; same signatures and semantics as ``_pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport tanh, exp, cos, fabs, isfinite, M_PI

cnp.import_array()

POLICY_FORWARD = 0
POLICY_PERIODIC = 1
POLICY_TRACK_BALL = 2

STATUS_OK = 0
STATUS_BLOWUP = 1


cdef inline void _act(int act_id, double a, double* s, double* sp) noexcept nogil:
    cdef double v
    if act_id == 0:
        v = tanh(a)
        s[0] = v
        sp[0] = 1.0 - v * v
    else:
        v = 0.5 * (1.0 + tanh(0.5 * a))
        s[0] = v
        sp[0] = v * (1.0 - v)


cdef void _rhs(const cnp.intp_t[::1] src, const cnp.intp_t[::1] dst, Py_ssize_t d, int act_id,
               const double[::1] c, double cbar, double m, double k, double phi,
               const double[::1] w, const double[::1] x, const double[::1] u,
               const double[::1] px, const double[::1] pw, const double[::1] lgrad, bint flipped,
               double[::1] z, double[::1] a, double[::1] g, double[::1] child,
               double[::1] xdot, double[::1] wdot, double[::1] pxdot, double[::1] pwdot) noexcept nogil:
    cdef Py_ssize_t nh = x.shape[0]
    cdef Py_ssize_t nw = w.shape[0]
    cdef Py_ssize_t i, h, j
    cdef double s, sp, fl, gh
    fl = -1.0 if flipped else 1.0
    for i in range(d):
        z[i] = u[i]
    for h in range(nh):
        z[d + h] = x[h]
        a[h] = 0.0
        child[h] = 0.0
    for j in range(nw):
        a[dst[j] - d] += w[j] * z[src[j]]
    for h in range(nh):
        _act(act_id, a[h], &s, &sp)
        xdot[h] = c[h] * (s - x[h])
        g[h] = c[h] * sp * px[h]
    for j in range(nw):
        gh = g[dst[j] - d]
        if src[j] >= d:
            child[src[j] - d] += gh * w[j]
        pwdot[j] = fl * (-gh * z[src[j]] - cbar * k * w[j] * phi)
        wdot[j] = -pw[j] / (m * cbar * phi)
    for h in range(nh):
        pxdot[h] = fl * (c[h] * px[h] - child[h] - cbar * lgrad[h] * phi)


def network_rhs(src, dst, d, act_id, c, cbar, m, k, phi, w, x, u, px, pw, lgrad, flipped):
    cdef Py_ssize_t nh = x.shape[0]
    cdef Py_ssize_t nw = w.shape[0]
    xdot = np.empty(nh)
    wdot = np.empty(nw)
    pxdot = np.empty(nh)
    pwdot = np.empty(nw)
    _rhs(np.ascontiguousarray(src, dtype=np.intp), np.ascontiguousarray(dst, dtype=np.intp),
         d, act_id, np.ascontiguousarray(c, dtype=float), cbar, m, k, phi,
         np.ascontiguousarray(w, dtype=float), np.ascontiguousarray(x, dtype=float),
         np.ascontiguousarray(u, dtype=float), np.ascontiguousarray(px, dtype=float),
         np.ascontiguousarray(pw, dtype=float), np.ascontiguousarray(lgrad, dtype=float), flipped,
         np.empty(d + nh), np.empty(nh), np.empty(nh), np.empty(nh),
         xdot, wdot, pxdot, pwdot)
    return xdot, wdot, pxdot, pwdot


def policy_sign(int policy_id, double param, double t, double norm2, int prev):
    if policy_id == POLICY_PERIODIC:
        return 1 if cos(2.0 * M_PI * param * t) >= 0.0 else -1
    if policy_id == POLICY_TRACK_BALL:
        return -prev if norm2 > param else prev
    return 1


def run_network_euler(src, dst, Py_ssize_t d, int act_id, c, double cbar, double m, double k,
                      double theta, double q, out_idx, U, Y, double tau, Py_ssize_t steps,
                      Py_ssize_t stride, bint flipped, int policy_id, double policy_param,
                      x0, w0, px0, pw0, double blowup):
    cdef const cnp.intp_t[::1] s_ = np.ascontiguousarray(src, dtype=np.intp)
    cdef const cnp.intp_t[::1] d_ = np.ascontiguousarray(dst, dtype=np.intp)
    cdef const cnp.intp_t[::1] oi = np.ascontiguousarray(out_idx, dtype=np.intp)
    cdef const double[::1] cc = np.ascontiguousarray(c, dtype=float)
    cdef const double[:, ::1] UU = np.ascontiguousarray(U, dtype=float)
    cdef const double[:, ::1] YY = np.ascontiguousarray(Y, dtype=float)
    cdef Py_ssize_t nh = len(x0)
    cdef Py_ssize_t nw = len(w0)
    cdef Py_ssize_t dim = 2 * (nh + nw)
    cdef Py_ssize_t rows = steps // stride + 1
    rec_np = np.zeros((rows, dim))
    sig_np = np.zeros(rows, dtype=np.int64)
    tb_np = np.zeros(rows)
    cdef double[:, ::1] rec = rec_np
    cdef long long[::1] sig = sig_np
    cdef double[::1] tb = tb_np
    y_np = np.concatenate((x0, w0, px0, pw0)).astype(float)
    cdef double[::1] y = y_np
    cdef double[::1] x = np.empty(nh)
    cdef double[::1] w = np.empty(nw)
    cdef double[::1] px = np.empty(nh)
    cdef double[::1] pw = np.empty(nw)
    cdef double[::1] lgrad = np.zeros(nh)
    cdef double[::1] z = np.empty(d + nh)
    cdef double[::1] a = np.empty(nh)
    cdef double[::1] g = np.empty(nh)
    cdef double[::1] child = np.empty(nh)
    cdef double[::1] xd = np.empty(nh)
    cdef double[::1] wd = np.empty(nw)
    cdef double[::1] pxd = np.empty(nh)
    cdef double[::1] pwd = np.empty(nw)
    cdef const double[::1] uu
    cdef Py_ssize_t n, i, r, o, last = 0
    cdef int sign = 1
    cdef double t, norm2, phi, internal = 0.0, h, v
    cdef int status = STATUS_OK
    cdef Py_ssize_t fail = -1
    for n in range(steps + 1):
        t = n * tau
        norm2 = 0.0
        for i in range(dim):
            norm2 += y[i] * y[i]
        if policy_id == POLICY_PERIODIC:
            sign = 1 if cos(2.0 * M_PI * policy_param * t) >= 0.0 else -1
        elif policy_id == POLICY_TRACK_BALL:
            if norm2 > policy_param:
                sign = -sign
        else:
            sign = 1
        if n % stride == 0:
            r = n // stride
            last = r
            for i in range(dim):
                rec[r, i] = y[i]
            sig[r] = sign
            tb[r] = internal
        if n == steps:
            break
        for i in range(nh):
            x[i] = y[i]
            px[i] = y[nh + nw + i]
            lgrad[i] = 0.0
        for i in range(nw):
            w[i] = y[nh + i]
            pw[i] = y[2 * nh + nw + i]
        for o in range(oi.shape[0]):
            lgrad[oi[o]] = q * (x[oi[o]] - YY[n, o])
        phi = exp(theta * t)
        uu = UU[n]
        _rhs(s_, d_, d, act_id, cc, cbar, m, k, phi, w, x, uu, px, pw, lgrad, flipped,
             z, a, g, child, xd, wd, pxd, pwd)
        h = sign * tau
        for i in range(nh):
            y[i] = y[i] + h * xd[i]
            y[nh + nw + i] = y[nh + nw + i] + h * pxd[i]
        for i in range(nw):
            y[nh + i] = y[nh + i] + h * wd[i]
            y[2 * nh + nw + i] = y[2 * nh + nw + i] + h * pwd[i]
        internal += sign * tau
        for i in range(dim):
            v = y[i]
            if not isfinite(v) or fabs(v) > blowup:
                status = STATUS_BLOWUP
                fail = n + 1
                break
        if status != STATUS_OK:
            break
    if status != STATUS_OK:
        return rec_np[: last + 1], sig_np[: last + 1], tb_np[: last + 1], status, fail, y_np
    return rec_np, sig_np, tb_np, status, fail, y_np
