"""Scalar linear-quadratic control: Hamilton equations, Riccati flows, oracles.

Problem: minimise int q x^2/2 + r v^2/2 dt subject to x' = a x + b v.
With s = -b^2/r the stationarity conditions read

    x' = a x + s p,    p' = -q x - a p,

and the ratio theta = p / x obeys theta' = -(s theta^2 + 2 a theta + q)
(the "unflipped" flow).  Its sign-reversed version theta' = s theta^2 +
2 a theta + q (the "flipped" flow) is what flipping x' and p' together
produces; it is stable at the positive algebraic root, the LQR gain.

The alternative sign ``x' = a x - s p`` is available as
``convention="reversed"`` for side-by-side comparison; it is not the
stationarity system of the problem above.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class DegenerateProblem(ValueError):
    """b = 0: no control authority, the Riccati equation is linear."""


class DivisionNearZero(ArithmeticError):
    """|x| fell below the threshold where theta = p / x is meaningful."""


@dataclass(frozen=True)
class LQProblem:
    a: float
    b: float
    q: float
    r: float
    T: float = 20.0

    def __post_init__(self):
        if not self.q > 0 or not self.r > 0:
            raise ValueError("q and r must be positive")
        if not self.T > 0:
            raise ValueError("T must be positive")

    @property
    def s_coef(self) -> float:
        return -self.b ** 2 / self.r


CONVENTIONS = ("pontryagin", "reversed")


def _p_coef(prob: LQProblem, convention: str) -> float:
    if convention == "pontryagin":
        return prob.s_coef
    if convention == "reversed":
        return -prob.s_coef
    raise ValueError(f"unknown convention {convention!r}; expected one of {CONVENTIONS}")


def lq_hamilton_rhs(x, p, prob: LQProblem, convention: str = "pontryagin"):
    return prob.a * x + _p_coef(prob, convention) * p, -prob.q * x - prob.a * p


def riccati_rhs(theta, prob: LQProblem, flipped: bool = False):
    quad = prob.s_coef * theta ** 2 + 2.0 * prob.a * theta + prob.q
    return quad if flipped else -quad


def algebraic_riccati_roots(prob: LQProblem):
    """Roots of s theta^2 + 2 a theta + q = 0 and whether the flipped flow is stable there.

    Returns ((root, stable), (root, stable)) sorted by root.
    """
    s, a, q = prob.s_coef, prob.a, prob.q
    if s == 0:
        raise DegenerateProblem("b = 0 leaves theta' linear; no quadratic fixed points")
    disc = a * a - s * q
    if disc < 0:
        raise DegenerateProblem("complex Riccati roots")
    sq = math.sqrt(disc)
    roots = sorted(((-a + sq) / s, (-a - sq) / s))
    # d/dtheta of the flipped field is 2 (s theta + a)
    return tuple((rt, 2.0 * (s * rt + a) < 0) for rt in roots)


def stable_root(prob: LQProblem) -> float:
    return next(rt for rt, stable in algebraic_riccati_roots(prob) if stable)


def _rk4_scalar(f, y, h):
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def riccati_flow(prob: LQProblem, theta0: float = 0.0, T: float | None = None, tau: float = 1e-3,
                 flipped: bool = True, limit: float = 1e6):
    """RK4 trajectory of the Riccati flow; stops early once |theta| exceeds ``limit``."""
    T = prob.T if T is None else T
    steps = int(round(T / tau))
    out = [theta0]
    th = float(theta0)
    for _ in range(steps):
        th = _rk4_scalar(lambda v: riccati_rhs(v, prob, flipped), th, tau)
        out.append(th)
        if not math.isfinite(th) or abs(th) > limit:
            break
    t = np.arange(len(out)) * tau
    return t, np.array(out)


def riccati_backward(prob: LQProblem, theta_T: float = 0.0, T: float | None = None, tau: float = 1e-3):
    """Unflipped flow with terminal value theta(T), solved by time reversal.

    Returns theta on the increasing grid 0..T.
    """
    T = prob.T if T is None else T
    steps = int(round(T / tau))
    th = float(theta_T)
    back = [th]
    for _ in range(steps):
        th = _rk4_scalar(lambda v: -riccati_rhs(v, prob, False), th, tau)
        back.append(th)
    return np.arange(steps + 1) * tau, np.array(back[::-1])


@dataclass
class FlipReport:
    t: np.ndarray
    x: np.ndarray
    p: np.ndarray
    theta: np.ndarray
    theta_riccati: np.ndarray
    residual: float
    truncated: bool = False


def simultaneous_flip_check(x0: float, p0: float, prob: LQProblem, tau: float = 1e-4,
                            T: float | None = None, record_stride: int = 100,
                            min_x: float = 1e-9, convention: str = "pontryagin") -> FlipReport:
    """Integrate (x, p) with both equations sign-flipped and compare p/x with the flipped Riccati flow.

    The linear system is rescaled by a common positive factor whenever it
    grows large; p/x is unaffected.  The recorded x, p are the rescaled values.
    """
    T = prob.T if T is None else T
    if abs(x0) < min_x:
        raise DivisionNearZero(f"|x(0)| = {abs(x0):.3e} < {min_x}")
    steps = int(round(T / tau))
    a, s, q = prob.a, _p_coef(prob, convention), prob.q

    def stage(x, p):
        # flipped Hamilton equations
        return -(a * x + s * p), q * x + a * p

    def riccati(th):
        return riccati_rhs(th, prob, True)

    x, p = float(x0), float(p0)
    th = p / x
    rec = [(0.0, x, p, th, th)]
    resid = 0.0
    h = tau
    for n in range(1, steps + 1):
        k1x, k1p = stage(x, p)
        k2x, k2p = stage(x + 0.5 * h * k1x, p + 0.5 * h * k1p)
        k3x, k3p = stage(x + 0.5 * h * k2x, p + 0.5 * h * k2p)
        k4x, k4p = stage(x + h * k3x, p + h * k3p)
        x += (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        p += (h / 6.0) * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
        th = _rk4_scalar(riccati, th, h)
        scale = max(abs(x), abs(p))
        if scale > 1e8 or scale < 1e-8:
            x, p = x / scale, p / scale
        if abs(x) < min_x * max(1.0, abs(p)):
            raise DivisionNearZero(f"x vanished at t={n * tau:.6g}")
        resid = max(resid, abs(p / x - th))
        if n % record_stride == 0 or n == steps:
            rec.append((n * tau, x, p, p / x, th))
    arr = np.array(rec)
    return FlipReport(arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3], arr[:, 4], resid)


def discrete_riccati_gain(prob: LQProblem, tau: float, T: float | None = None):
    """Dynamic-programming gain of the Euler-discretised problem at step 0.

    x_{n+1} = (1 + a tau) x_n + b tau v_n, cost sum tau (q x^2 + r v^2)/2,
    v_n = -K_n x_n.  Returns (K_0, P_0) where P is the cost-to-go Hessian.
    """
    T = prob.T if T is None else T
    N = int(round(T / tau))
    A, B = 1.0 + prob.a * tau, prob.b * tau
    Q, R = prob.q * tau, prob.r * tau
    P = 0.0
    K = 0.0
    for _ in range(N):
        K = B * P * A / (R + B * P * B)
        P = Q + A * P * A - A * P * B * K
    return K, P


def grid_problems(a_vals=(-1.0, 0.0, 1.0), q_vals=(0.1, 1.0, 10.0), r_vals=(0.1, 1.0), b=1.0, T=20.0):
    return [LQProblem(a, b, q, r, T) for a in a_vals for q in q_vals for r in r_vals]
