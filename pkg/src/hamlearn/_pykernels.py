"""Pure numpy implementation of the hot kernels.

Mirrors ``_ckernels.pyx`` argument for argument; ``hamlearn.backend``
picks one of the two at import.
"""
import math

import numpy as np

POLICY_FORWARD = 0
POLICY_PERIODIC = 1
POLICY_TRACK_BALL = 2

STATUS_OK = 0
STATUS_BLOWUP = 1


def _act(act_id, a):
    if act_id == 0:
        s = np.tanh(a)
        return s, 1.0 - s * s
    s = 0.5 * (1.0 + np.tanh(0.5 * a))
    return s, s * (1.0 - s)


def network_rhs(src, dst, d, act_id, c, cbar, m, k, phi, w, x, u, px, pw, lgrad, flipped):
    """Local Hamilton right-hand side (x, w, p_x, p_w) of the network system.

    ``lgrad`` is the output-loss gradient L_xi (zero off the output set).
    ``flipped`` negates the two costate equations.
    """
    nh = x.shape[0]
    z = np.concatenate((u, x))
    hdst = dst - d
    a = np.bincount(hdst, weights=w * z[src], minlength=nh)
    sg, sp = _act(act_id, a)
    xdot = c * (sg - x)
    g = c * sp * px
    gk = g[hdst]
    child = np.bincount(src, weights=gk * w, minlength=d + nh)[d:]
    pxdot = c * px - child - cbar * lgrad * phi
    pwdot = -gk * z[src] - cbar * k * w * phi
    if flipped:
        pxdot = -pxdot
        pwdot = -pwdot
    wdot = -pw / (m * cbar * phi)
    return xdot, wdot, pxdot, pwdot


def policy_sign(policy_id, param, t, norm2, prev):
    if policy_id == POLICY_PERIODIC:
        return 1 if math.cos(2.0 * math.pi * param * t) >= 0.0 else -1
    if policy_id == POLICY_TRACK_BALL:
        return -prev if norm2 > param else prev
    return 1


def run_network_euler(src, dst, d, act_id, c, cbar, m, k, theta, q, out_idx,
                      U, Y, tau, steps, stride, flipped, policy_id, policy_param,
                      x0, w0, px0, pw0, blowup):
    """Euler-integrate the network Hamilton system under a sign policy.

    Returns (records, signs, tbar, status, fail_step, last_state); records
    hold the concatenated phase point (x, w, p_x, p_w) every ``stride``
    steps starting at step 0.
    """
    nh = x0.shape[0]
    nw = w0.shape[0]
    dim = 2 * (nh + nw)
    rows = steps // stride + 1
    records = np.zeros((rows, dim))
    signs = np.zeros(rows, dtype=np.int64)
    tbar = np.zeros(rows)
    y = np.concatenate((x0, w0, px0, pw0)).astype(float)
    sx = slice(0, nh)
    sw = slice(nh, nh + nw)
    spx = slice(nh + nw, 2 * nh + nw)
    spw = slice(2 * nh + nw, dim)
    lgrad = np.zeros(nh)
    sign = 1
    internal = 0.0
    for n in range(steps + 1):
        t = n * tau
        norm2 = float(np.dot(y, y))
        sign = policy_sign(policy_id, policy_param, t, norm2, sign)
        if n % stride == 0:
            r = n // stride
            records[r] = y
            signs[r] = sign
            tbar[r] = internal
        if n == steps:
            break
        x = y[sx]
        lgrad[:] = 0.0
        lgrad[out_idx] = q * (x[out_idx] - Y[n])
        phi = math.exp(theta * t)
        xd, wd, pxd, pwd = network_rhs(src, dst, d, act_id, c, cbar, m, k, phi,
                                       y[sw], x, U[n], y[spx], y[spw], lgrad, flipped)
        y = y + (sign * tau) * np.concatenate((xd, wd, pxd, pwd))
        internal += sign * tau
        if not np.all(np.isfinite(y)) or np.max(np.abs(y)) > blowup:
            return records[: n // stride + 1], signs[: n // stride + 1], tbar[: n // stride + 1], \
                STATUS_BLOWUP, n + 1, y
    return records, signs, tbar, STATUS_OK, -1, y
