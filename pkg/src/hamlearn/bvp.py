"""Forward-backward sweep for the two-point boundary problem.

Problems have the canonical form y' = F(y, t) + B v with running cost
rho(t)/2 |v|^2 + g(y, t) and free terminal state, so the costate ends at
p(T) = 0.  Time is discretised with explicit Euler; the costate recursion
is the exact adjoint of that discretisation, which makes
``-B^T p_{n+1} / rho_n`` the stationary control of the discrete cost.
"""
from __future__ import annotations

import warnings

import numpy as np

from .costate import NetworkHamiltonian
from .integrator import IntegratorConfig, TrajectoryLog


class NoConvergence(RuntimeError):
    def __init__(self, log: TrajectoryLog):
        self.log = log
        super().__init__(f"no convergence after {log.meta['sweeps']} sweeps "
                         f"(control change {log.meta['control_change']:.3e})")


class NetworkControlProblem:
    """Network learning problem: state (x, w), control v = w'."""

    def __init__(self, system: NetworkHamiltonian):
        self.sys = system
        nh, nw = system.dims
        self.nh, self.nw = nh, nw
        self.dim = nh + nw
        g = system.g
        self.labels = [f"x{i}" for i in range(g.d + 1, g.n + 1)] + [f"w{s}" for s in g.weight_labels()]
        self.control_labels = [f"wdot{s}" for s in g.weight_labels()]

    def step(self, y, v, t, tau):
        x, w = y[: self.nh], y[self.nh:]
        return np.concatenate((x + tau * self.sys.state_rhs(x, w, t), w + tau * v))

    def adjoint_step(self, y, p_next, t, tau):
        x, w = y[: self.nh], y[self.nh:]
        pxd, pwd = self.sys.rhs_local(x, w, p_next[: self.nh], p_next[self.nh:], t)[2:]
        return p_next - tau * np.concatenate((pxd, pwd))

    def control_adjoint(self, p):
        return p[self.nh:]

    def rho(self, t):
        cfg = self.sys.cfg
        return cfg.m * cfg.c * float(cfg.phi(t))

    def running_cost(self, y, t):
        cfg = self.sys.cfg
        return cfg.c * self.sys.ell(y[: self.nh], y[self.nh:], t) * float(cfg.phi(t))


class LQControlProblem:
    """Scalar x' = a x + b v with cost q x^2/2 + r v^2/2."""

    def __init__(self, a, b, q, r):
        self.a, self.b, self.q, self.r = float(a), float(b), float(q), float(r)
        self.dim = 1
        self.labels = ["x"]
        self.control_labels = ["v"]

    def step(self, y, v, t, tau):
        return y + tau * (self.a * y + self.b * v)

    def adjoint_step(self, y, p_next, t, tau):
        return p_next + tau * (self.a * p_next + self.q * y)

    def control_adjoint(self, p):
        return self.b * p

    def rho(self, t):
        return self.r

    def running_cost(self, y, t):
        return 0.5 * self.q * float(y @ y)


def _forward(problem, y0, V, cfg):
    N = cfg.steps
    Y = np.empty((N + 1, problem.dim))
    Y[0] = y0
    for n in range(N):
        Y[n + 1] = problem.step(Y[n], V[n], n * cfg.tau, cfg.tau)
    return Y


def _cost(problem, Y, V, rho, cfg):
    N = cfg.steps
    run = sum(problem.running_cost(Y[n], n * cfg.tau) for n in range(N))
    return cfg.tau * (run + 0.5 * float(np.sum(rho[:N] * np.sum(V[:N] ** 2, axis=1))))


def _backward(problem, Y, cfg):
    N = cfg.steps
    P = np.zeros((N + 1, problem.dim))
    for n in range(N - 1, -1, -1):
        P[n] = problem.adjoint_step(Y[n], P[n + 1], n * cfg.tau, cfg.tau)
    return P


def bvp_sweep(problem, y0, cfg: IntegratorConfig, gamma: float = 0.5, tol: float = 1e-8,
              max_sweeps: int = 200, strict: bool = False) -> TrajectoryLog:
    """Iterate forward state pass, backward costate pass, damped control update.

    Each update moves the control a fraction of the way toward
    -B^T p / rho; the fraction starts at ``gamma`` and is halved until the
    discrete cost does not increase.  Stops when the stationarity residual
    max |v* - v| drops below ``tol``.  Without convergence the best iterate
    is returned with ``meta['converged'] = False`` (or NoConvergence is
    raised when ``strict``).
    """
    if not 0 < gamma <= 1:
        raise ValueError("gamma must lie in (0, 1]")
    N = cfg.steps
    t = np.arange(N + 1) * cfg.tau
    rho = np.array([problem.rho(tt) for tt in t])
    y0 = np.asarray(y0, dtype=float).reshape(problem.dim)
    V = np.zeros((N + 1, len(problem.control_labels)))
    Y = _forward(problem, y0, V, cfg)
    G = _cost(problem, Y, V, rho, cfg)
    history = [G]
    step = gamma
    converged = False
    change = np.inf
    sweeps = 0
    while sweeps < max_sweeps:
        sweeps += 1
        P = _backward(problem, Y, cfg)
        V_star = np.zeros_like(V)
        for n in range(N):
            V_star[n] = -problem.control_adjoint(P[n + 1]) / rho[n]
        change = float(np.max(np.abs(V_star - V))) if V.size else 0.0
        if change < tol:
            converged = True
            break
        step = min(gamma, 2.0 * step)
        while True:
            V_try = V + step * (V_star - V)
            Y_try = _forward(problem, y0, V_try, cfg)
            G_try = _cost(problem, Y_try, V_try, rho, cfg)
            if G_try <= G or step < 1e-12:
                break
            step *= 0.5
        if G_try > G:
            break
        V, Y, G = V_try, Y_try, G_try
        history.append(G)
    P = _backward(problem, Y, cfg)
    cols = {name: Y[:, i] for i, name in enumerate(problem.labels)}
    cols.update({f"p{name}": P[:, i] for i, name in enumerate(problem.labels)})
    cols.update({name: V[:, i] for i, name in enumerate(problem.control_labels)})
    log = TrajectoryLog(t, cols, {
        "state_labels": list(problem.labels),
        "costate_labels": [f"p{name}" for name in problem.labels],
        "control_labels": list(problem.control_labels),
        "converged": converged,
        "sweeps": sweeps,
        "control_change": change,
        "cost_history": history,
        "cost": G,
    })
    if not converged:
        if strict:
            raise NoConvergence(log)
        warnings.warn(f"bvp_sweep did not converge in {sweeps} sweeps (change {change:.3e})",
                      RuntimeWarning, stacklevel=2)
    return log


def network_bvp_sweep(system: NetworkHamiltonian, x0, w0, cfg: IntegratorConfig, **kw) -> TrajectoryLog:
    """Reference minimiser of the network learning functional."""
    problem = NetworkControlProblem(system)
    return bvp_sweep(problem, np.concatenate((np.asarray(x0, float), np.asarray(w0, float))), cfg, **kw)
