"""Forward CTRNN dynamics: activations, speed constants, state equation."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .graph import NetGraph


@dataclass(frozen=True)
class Activation:
    """Bounded smooth squashing function with analytic first/second derivative."""

    name: str
    bound: float
    f: Callable[[np.ndarray], np.ndarray]
    d1: Callable[[np.ndarray], np.ndarray]
    d2: Callable[[np.ndarray], np.ndarray]

    def __call__(self, z):
        return self.f(z)


def _tanh_d1(z):
    s = np.tanh(z)
    return 1.0 - s * s


def _tanh_d2(z):
    s = np.tanh(z)
    return -2.0 * s * (1.0 - s * s)


def _logistic(z):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(z, dtype=float)))


def _logistic_d1(z):
    s = _logistic(z)
    return s * (1.0 - s)


def _logistic_d2(z):
    s = _logistic(z)
    return s * (1.0 - s) * (1.0 - 2.0 * s)


TANH = Activation("tanh", 1.0, np.tanh, _tanh_d1, _tanh_d2)
LOGISTIC = Activation("logistic", 1.0, _logistic, _logistic_d1, _logistic_d2)
ACTIVATIONS = {"tanh": TANH, "logistic": LOGISTIC}
# integer tags understood by the compiled kernels
ACTIVATION_IDS = {"tanh": 0, "logistic": 1}


def get_activation(name: str | Activation) -> Activation:
    if isinstance(name, Activation):
        return name
    try:
        return ACTIVATIONS[name]
    except KeyError:
        raise ValueError(f"unknown activation {name!r}; expected one of {sorted(ACTIVATIONS)}") from None


class SpeedConstants:
    """Per-neuron velocity constants c_i; ``mean`` is recomputed on access."""

    def __init__(self, values):
        values = np.array(values, dtype=float).reshape(-1)
        if values.size == 0 or np.any(values <= 0) or not np.all(np.isfinite(values)):
            raise ValueError("speed constants must be finite and positive")
        values.setflags(write=False)
        self._values = values

    @classmethod
    def uniform(cls, c: float, n_hidden: int) -> "SpeedConstants":
        return cls(np.full(n_hidden, float(c)))

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def mean(self) -> float:
        return float(np.mean(self._values))

    def __len__(self):
        return self._values.size

    def __repr__(self):
        return f"SpeedConstants({self._values.tolist()})"


class InputSignal:
    """Input trajectory u: [0, T] -> R^d.

    ``derivative`` is optional; when missing, ``rate`` falls back to a
    central difference of the evaluator.
    """

    def __init__(self, fn: Callable[[float], np.ndarray], d: int, derivative=None):
        self.fn = fn
        self.d = d
        self.derivative = derivative

    @classmethod
    def constant(cls, value, d: int = 1) -> "InputSignal":
        v = np.broadcast_to(np.asarray(value, dtype=float), (d,)).copy()
        return cls(lambda t: v, d, lambda t: np.zeros(d))

    @classmethod
    def sinusoid(cls, amplitude=1.0, frequency=1.0, phase=0.0, offset=0.0, d: int = 1) -> "InputSignal":
        om = 2.0 * np.pi * frequency
        return cls(
            lambda t: np.full(d, offset + amplitude * np.sin(om * t + phase)),
            d,
            lambda t: np.full(d, amplitude * om * np.cos(om * t + phase)),
        )

    def __call__(self, t: float) -> np.ndarray:
        return np.asarray(self.fn(t), dtype=float).reshape(self.d)

    def rate(self, t: float, h: float = 1e-6) -> np.ndarray:
        if self.derivative is not None:
            return np.asarray(self.derivative(t), dtype=float).reshape(self.d)
        return (self(t + h) - self(t - h)) / (2 * h)

    def sample(self, tau: float, steps: int) -> np.ndarray:
        """Sampled sequence U^n = u(n tau), n = 0..steps."""
        return np.array([self(n * tau) for n in range(steps + 1)]).reshape(steps + 1, self.d)


def node_values(g: NetGraph, x: np.ndarray, u_t: np.ndarray) -> np.ndarray:
    """Output of every vertex: inputs clamped to u, hidden vertices from x."""
    z = np.empty(g.n)
    z[: g.d] = u_t
    z[g.d:] = x
    return z


def activations(g: NetGraph, x, u_t, w) -> np.ndarray:
    """a_i = sum_{m in pa(i)} w_im val(m) for every hidden vertex (length n - d)."""
    z = node_values(g, np.asarray(x, dtype=float), np.asarray(u_t, dtype=float))
    return np.bincount(g.dst - g.d, weights=np.asarray(w, dtype=float) * z[g.src], minlength=g.n_hidden)


def activation_pre(g: NetGraph, x, u_t, w, i: int) -> float:
    """Pre-activation of hidden vertex i (1-based)."""
    if not g.d < i <= g.n:
        raise IndexError(f"vertex {i} is not a hidden vertex of 1..{g.n} with d={g.d}")
    z = node_values(g, np.asarray(x, dtype=float), np.asarray(u_t, dtype=float))
    return float(sum(w[g.arc(j + 1, i)] * z[j] for j in g.pa[i - 1]))


def state_rhs(g: NetGraph, x, u_t, w, c: SpeedConstants, act: Activation | str = TANH) -> np.ndarray:
    act = get_activation(act)
    x = np.asarray(x, dtype=float)
    a = activations(g, x, u_t, w)
    return c.values * (-x + act(a))


def bibo_bound(x0, act: Activation | str = TANH) -> np.ndarray:
    """|x_i(0)| + B, the per-vertex envelope of a bounded-input trajectory."""
    return np.abs(np.asarray(x0, dtype=float)) + get_activation(act).bound
