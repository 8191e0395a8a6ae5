"""Hamilton equations of the learning problem and their rescaled forms.

The phase point is (x, w, p_x, p_w): neuron state, weights and the two
costates.  Every quantity is evaluated at the same time t.  The temporal
weight is phi(t) = exp(theta t) and the weight regulariser is V(w) = |w|^2/2.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import backend
from .dynamics import (
    ACTIVATION_IDS,
    TANH,
    Activation,
    InputSignal,
    SpeedConstants,
    activations,
    get_activation,
    node_values,
)
from .graph import NetGraph, topological_order


class SingularActivation(ArithmeticError):
    """sigma'(a_i) vanished, so the rescaled costate is undefined."""


class NotDAG(ValueError):
    """The hidden subgraph has a cycle."""


@dataclass(frozen=True)
class LossSpec:
    """Output tracking loss L(xi, t) = q/2 |xi_O - y(t)|^2.

    ``target`` maps t to one value per output vertex.
    """

    target: Callable[[float], np.ndarray] = field(default=lambda t: np.zeros(1))
    q: float = 1.0

    def __post_init__(self):
        if self.q < 0:
            raise ValueError("accuracy gain q must be non-negative")

    def error(self, x_out, t):
        return np.asarray(x_out, dtype=float) - np.reshape(self.target(t), np.shape(x_out))


@dataclass(frozen=True)
class HamiltonianConfig:
    m: float
    k: float
    theta: float
    speed: SpeedConstants
    loss: LossSpec = field(default_factory=LossSpec)
    horizon: float = 1.0
    activation: Activation = TANH

    def __post_init__(self):
        if self.m <= 0:
            raise ValueError("mass m must be positive")
        if self.k < 0:
            raise ValueError("regularisation gain k must be non-negative")
        if self.horizon <= 0:
            raise ValueError("horizon T must be positive")
        object.__setattr__(self, "activation", get_activation(self.activation))

    @property
    def c(self) -> float:
        return self.speed.mean

    def phi(self, t):
        return np.exp(self.theta * t)


class NetworkHamiltonian:
    """Hamiltonian system of a network graph driven by an input signal."""

    def __init__(self, graph: NetGraph, cfg: HamiltonianConfig, inputs: InputSignal | None = None,
                 kernels=None):
        if len(cfg.speed) != graph.n_hidden:
            raise ValueError(f"{len(cfg.speed)} speed constants for {graph.n_hidden} hidden vertices")
        self.g = graph
        self.cfg = cfg
        self.inputs = inputs if inputs is not None else InputSignal.constant(0.0, graph.d)
        self.kernels = kernels if kernels is not None else backend.kernels
        self._out = graph.output_hidden
        self._act_id = ACTIVATION_IDS[cfg.activation.name]

    @property
    def dims(self):
        return self.g.n_hidden, self.g.n_weights

    # -- cost terms ---------------------------------------------------------

    def loss(self, x, t) -> float:
        e = self.cfg.loss.error(np.asarray(x)[self._out], t)
        return 0.5 * self.cfg.loss.q * float(e @ e)

    def loss_grad(self, x, t) -> np.ndarray:
        """L_xi over all hidden vertices; exactly zero off the output set."""
        grad = np.zeros(self.g.n_hidden)
        grad[self._out] = self.cfg.loss.q * self.cfg.loss.error(np.asarray(x)[self._out], t)
        return grad

    def regulariser(self, w) -> float:
        w = np.asarray(w, dtype=float)
        return 0.5 * float(w @ w)

    def ell(self, x, w, t) -> float:
        return self.cfg.k * self.regulariser(w) + self.loss(x, t)

    # -- Hamiltonian ---------------------------------------------------------

    def state_rhs(self, x, w, t) -> np.ndarray:
        a = activations(self.g, x, self.inputs(t), w)
        return self.cfg.speed.values * (self.cfg.activation(a) - np.asarray(x, dtype=float))

    def hamiltonian(self, x, w, px, pw, t) -> float:
        cfg = self.cfg
        phi = float(cfg.phi(t))
        pw = np.asarray(pw, dtype=float)
        return (-(pw @ pw) / (2.0 * cfg.m * cfg.c * phi)
                + cfg.c * self.ell(x, w, t) * phi
                + float(np.asarray(px, dtype=float) @ self.state_rhs(x, w, t)))

    def jacobians(self, x, w, t):
        """Analytic f_xi (n_h x n_h) and f_u (n_h x N), built entry by entry."""
        g = self.g
        c = self.cfg.speed.values
        z = node_values(g, np.asarray(x, dtype=float), self.inputs(t))
        sp = self.cfg.activation.d1(activations(g, x, z[: g.d], w))
        nh = g.n_hidden
        f_xi = np.zeros((nh, nh))
        f_u = np.zeros((nh, g.n_weights))
        for kk in range(nh):
            f_xi[kk, kk] -= c[kk]
            for m in g.pa[kk + g.d]:
                if m >= g.d:
                    f_xi[kk, m - g.d] += c[kk] * sp[kk] * w[g.arc(m + 1, kk + g.d + 1)]
        for idx, (j, i) in enumerate(g.arcs):
            h = i - 1 - g.d
            f_u[h, idx] = c[h] * sp[h] * z[j - 1]
        return f_xi, f_u

    def rhs_general(self, x, w, px, pw, t):
        """(x', w', p_x', p_w') from the generic Hamilton equations via dense Jacobians."""
        cfg = self.cfg
        phi = float(cfg.phi(t))
        px = np.asarray(px, dtype=float)
        f_xi, f_u = self.jacobians(x, w, t)
        xdot = self.state_rhs(x, w, t)
        wdot = -np.asarray(pw, dtype=float) / (cfg.m * cfg.c * phi)
        pxdot = -px @ f_xi - cfg.c * self.loss_grad(x, t) * phi
        pwdot = -px @ f_u - cfg.c * cfg.k * np.asarray(w, dtype=float) * phi
        return xdot, wdot, pxdot, pwdot

    def rhs_local(self, x, w, px, pw, t, flipped=False):
        """Spatially local Hamilton equations; ``flipped`` reverses both costate equations."""
        cfg = self.cfg
        g = self.g
        return self.kernels.network_rhs(
            g.src, g.dst, g.d, self._act_id, cfg.speed.values, cfg.c, cfg.m, cfg.k,
            float(cfg.phi(t)), np.asarray(w, dtype=float), np.asarray(x, dtype=float),
            self.inputs(t), np.asarray(px, dtype=float), np.asarray(pw, dtype=float),
            self.loss_grad(x, t), bool(flipped))

    # -- rescaled costate ----------------------------------------------------

    def to_lambda(self, x, w, px, t) -> np.ndarray:
        sp = self.cfg.activation.d1(activations(self.g, x, self.inputs(t), w))
        return sp * np.asarray(px, dtype=float) / self.cfg.phi(t)

    def from_lambda(self, x, w, lam, t) -> np.ndarray:
        sp = self.cfg.activation.d1(activations(self.g, x, self.inputs(t), w))
        if np.any(np.abs(sp) < 1e-12):
            raise SingularActivation("sigma'(a) vanished; cannot invert the rescaling")
        return np.asarray(lam, dtype=float) * self.cfg.phi(t) / sp

    def lambda_rhs(self, x, w, wdot, lam, t, flipped=False):
        """(x', w'', lambda') of the mixed-order system in rescaled costates."""
        g, cfg = self.g, self.cfg
        act = cfg.activation
        c = cfg.speed.values
        x = np.asarray(x, dtype=float)
        w = np.asarray(w, dtype=float)
        wdot = np.asarray(wdot, dtype=float)
        lam = np.asarray(lam, dtype=float)
        u = self.inputs(t)
        z = node_values(g, x, u)
        hdst = g.dst - g.d
        a = np.bincount(hdst, weights=w * z[g.src], minlength=g.n_hidden)
        sp = act.d1(a)
        if np.any(np.abs(sp) < 1e-12):
            raise SingularActivation(f"|sigma'(a)| < 1e-12 at t={t}")
        xdot = c * (act(a) - x)
        zdot = node_values(g, xdot, self.inputs.rate(t))
        adot = np.bincount(hdst, weights=wdot * z[g.src] + w * zdot[g.src], minlength=g.n_hidden)
        dlog = act.d2(a) * adot / sp
        child = np.bincount(g.src, weights=(c * lam)[hdst] * w, minlength=g.n)[g.d:]
        lgrad = self.loss_grad(x, t)
        force = (c / (cfg.m * cfg.c) * lam)[hdst] * z[g.src] + cfg.k / cfg.m * w
        if flipped:
            wddot = -cfg.theta * wdot - force
            lamdot = (-cfg.theta + dlog - c) * lam + sp * child + cfg.c * lgrad * sp
        else:
            wddot = -cfg.theta * wdot + force
            lamdot = (-cfg.theta + dlog + c) * lam - sp * child - cfg.c * lgrad * sp
        return xdot, wddot, lamdot

    # -- flattened phase vectors for the integrators -------------------------

    def split(self, y):
        nh, nw = self.dims
        return y[:nh], y[nh:nh + nw], y[nh + nw:2 * nh + nw], y[2 * nh + nw:]

    @staticmethod
    def pack(*parts):
        return np.concatenate([np.asarray(p, dtype=float).reshape(-1) for p in parts])

    def phase_rhs(self, flipped=False, general=False):
        """Right-hand side on the flat phase vector (x, w, p_x, p_w)."""
        def rhs(y, t):
            x, w, px, pw = self.split(y)
            if general:
                parts = self.rhs_general(x, w, px, pw, t)
                if flipped:
                    parts = (parts[0], parts[1], -parts[2], -parts[3])
            else:
                parts = self.rhs_local(x, w, px, pw, t, flipped)
            return np.concatenate(parts)
        return rhs

    def split_lambda(self, y):
        nh, nw = self.dims
        return y[:nh], y[nh:nh + nw], y[nh + nw:nh + 2 * nw], y[nh + 2 * nw:]

    def lambda_phase_rhs(self, flipped=False):
        """Right-hand side on the flat vector (x, w, w', lambda)."""
        def rhs(y, t):
            x, w, wdot, lam = self.split_lambda(y)
            xdot, wddot, lamdot = self.lambda_rhs(x, w, wdot, lam, t, flipped)
            return np.concatenate((xdot, wdot, wddot, lamdot))
        return rhs


def hamiltonian_value(x, w, p_x, p_w, t, system: NetworkHamiltonian) -> float:
    return system.hamiltonian(x, w, p_x, p_w, t)


def hamilton_rhs_general(x, w, p_x, p_w, t, system: NetworkHamiltonian):
    return system.rhs_general(x, w, p_x, p_w, t)


def hamilton_rhs_local(x, w, p_x, p_w, t, system: NetworkHamiltonian, flipped=False):
    return system.rhs_local(x, w, p_x, p_w, t, flipped)


def lambda_rhs(x, w, wdot, lam, t, system: NetworkHamiltonian, flipped=False):
    return system.lambda_rhs(x, w, wdot, lam, t, flipped)


def costate_neighbourhood_update(g: NetGraph, act: Activation, i: int, a, z, px, w, c, lgrad_i,
                                 cbar, k, phi):
    """Costate derivatives of hidden vertex i (0-based) read off its neighbourhood only.

    Touches a and p_x of i and ch(i), node outputs z of pa(i), and weights of
    arcs incident to i.  Returns (p_x^i', {arc index: p_w'}).
    """
    h = i - g.d
    child = 0.0
    for kk in g.ch[i]:
        hk = kk - g.d
        child += c[hk] * act.d1(a[hk]) * px[hk] * w[g.arc(i + 1, kk + 1)]
    pxdot = c[h] * px[h] - child - cbar * lgrad_i * phi
    pwdot = {}
    for j in g.pa[i]:
        idx = g.arc(j + 1, i + 1)
        pwdot[idx] = -c[h] * px[h] * act.d1(a[h]) * z[j] - cbar * k * w[idx] * phi
    return pxdot, pwdot


def equilibrium_state(g: NetGraph, w, u_t, act: Activation | str = TANH) -> np.ndarray:
    """Self-consistent x_i = sigma(a_i) on a hidden DAG (forward pass)."""
    act = get_activation(act)
    order = topological_order(g)
    if order is None:
        raise NotDAG("hidden subgraph has a cycle")
    z = node_values(g, np.zeros(g.n_hidden), np.asarray(u_t, dtype=float))
    for i in order:
        z[i] = act(sum(w[g.arc(j + 1, i + 1)] * z[j] for j in g.pa[i]))
    return z[g.d:].copy()


def backprop_limit_lambda(g: NetGraph, x, w, u_t, loss: LossSpec, t=0.0,
                          act: Activation | str = TANH) -> np.ndarray:
    """Delta errors from the infinite-speed limit, solved in reverse topological order."""
    act = get_activation(act)
    order = topological_order(g)
    if order is None:
        raise NotDAG("hidden subgraph has a cycle; the algebraic limit needs a DAG")
    x = np.asarray(x, dtype=float)
    a = activations(g, x, u_t, w)
    sp = act.d1(a)
    lgrad = np.zeros(g.n_hidden)
    out = g.output_hidden
    lgrad[out] = loss.q * loss.error(x[out], t)
    lam = np.zeros(g.n_hidden)
    for i in reversed(order):
        h = i - g.d
        back = sum(lam[kk - g.d] * w[g.arc(i + 1, kk + 1)] for kk in g.ch[i])
        lam[h] = sp[h] * (back + lgrad[h])
    return lam
