"""Causal fixed-step integration of phase-space systems and trajectory logs."""
from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .policy import AlwaysForward, SignPolicy

CSV_FORMAT = "%.17g"


class NumericalBlowup(FloatingPointError):
    """A state component exceeded the blow-up threshold or became non-finite."""

    def __init__(self, step: int, t: float, state, log: "TrajectoryLog | None" = None):
        self.step = step
        self.t = t
        self.state = np.asarray(state)
        self.log = log
        finite = np.abs(self.state[np.isfinite(self.state)])
        peak = float(finite.max()) if finite.size else float("nan")
        super().__init__(f"blow-up at step {step} (t={t:.6g}), max |state| = {peak:.3e}")


@dataclass(frozen=True)
class IntegratorConfig:
    tau: float = 1e-2
    T: float = 1.0
    scheme: str = "euler"
    record_stride: int = 1
    blowup: float = 1e12

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if not self.T > 0:
            raise ValueError("T must be positive")
        if self.tau > self.T * (1 + 1e-12):
            raise ValueError("tau must not exceed T")
        if self.scheme not in ("euler", "rk4"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")

    @property
    def steps(self) -> int:
        return max(1, int(math.floor(self.T / self.tau + 1e-9)))

    @property
    def rows(self) -> int:
        return self.steps // self.record_stride + 1


@dataclass
class TrajectoryLog:
    """Time-indexed table of named columns sampled every ``record_stride`` steps."""

    t: np.ndarray
    columns: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.t)

    def __getitem__(self, name):
        return self.t if name == "t" else self.columns[name]

    def array(self, names) -> np.ndarray:
        return np.column_stack([self.columns[n] for n in names]) if names else np.zeros((len(self), 0))

    @property
    def states(self) -> np.ndarray:
        return self.array(self.meta.get("state_labels", []))

    def to_csv(self, path=None) -> str:
        """Write header plus one row per record; returns the text."""
        names = list(self.columns)
        table = np.column_stack([self.t] + [np.asarray(self.columns[n], dtype=float) for n in names])
        buf = io.StringIO()
        buf.write(",".join(["t"] + names) + "\n")
        for row in table:
            buf.write(",".join(CSV_FORMAT % v for v in row) + "\n")
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, path) -> "TrajectoryLog":
        lines = Path(path).read_text().splitlines()
        names = lines[0].split(",")
        data = np.array([[float(v) for v in line.split(",")] for line in lines[1:]]).reshape(-1, len(names))
        return cls(data[:, 0], {n: data[:, i] for i, n in enumerate(names) if i > 0})


def write_json(obj, path):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _step(rhs, y, t, tau, h, scheme):
    if scheme == "euler":
        return y + h * rhs(y, t)
    k1 = rhs(y, t)
    k2 = rhs(y + 0.5 * h * k1, t + 0.5 * tau)
    k3 = rhs(y + 0.5 * h * k2, t + 0.5 * tau)
    k4 = rhs(y + h * k3, t + tau)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate(rhs: Callable, y0, cfg: IntegratorConfig, policy: SignPolicy | None = None,
              labels=None, t0: float = 0.0) -> TrajectoryLog:
    """Advance y' = s(t) rhs(y, t) from t0 with a fixed step.

    Step n+1 reads only step n (and, for RK4, stage points inside the step).
    The sign is chosen once per step from the state before the step.
    """
    policy = policy if policy is not None else AlwaysForward()
    policy.reset()
    y = np.array(y0, dtype=float)
    labels = list(labels) if labels is not None else [f"y{i}" for i in range(y.size)]
    steps, stride = cfg.steps, cfg.record_stride
    rows = steps // stride + 1
    rec = np.zeros((rows, y.size))
    signs = np.zeros(rows)
    tbar = np.zeros(rows)
    internal = 0.0
    for n in range(steps + 1):
        t = t0 + n * cfg.tau
        s = policy(t, y)
        if n % stride == 0:
            r = n // stride
            rec[r], signs[r], tbar[r] = y, s, internal
        if n == steps:
            break
        y = _step(rhs, y, t, cfg.tau, s * cfg.tau, cfg.scheme)
        internal += s * cfg.tau
        if not np.all(np.isfinite(y)) or np.max(np.abs(y)) > cfg.blowup:
            last = n // stride + 1
            log = _make_log(t0 + np.arange(last) * stride * cfg.tau, rec[:last], signs[:last],
                            tbar[:last], labels)
            raise NumericalBlowup(n + 1, t0 + (n + 1) * cfg.tau, y, log)
    return _make_log(t0 + np.arange(rows) * stride * cfg.tau, rec, signs, tbar, labels)


def _make_log(t, rec, signs, tbar, labels):
    cols = {name: rec[:, i] for i, name in enumerate(labels)}
    cols["s"] = signs
    cols["tbar"] = tbar
    return TrajectoryLog(np.asarray(t, dtype=float), cols, {"state_labels": list(labels)})


def integrate_backward(rhs: Callable, y_T, cfg: IntegratorConfig, labels=None) -> TrajectoryLog:
    """Solve a terminal-value problem y(T) = y_T by time reversal.

    Integrates z'(s) = -rhs(z, T - s) forward in s = T - t and returns the
    log re-indexed on increasing t.
    """
    def reversed_rhs(z, s):
        return -rhs(z, cfg.T - s)

    log = integrate(reversed_rhs, y_T, cfg, labels=labels)
    order = slice(None, None, -1)
    cols = {k: v[order] for k, v in log.columns.items() if k not in ("s", "tbar")}
    return TrajectoryLog(cfg.T - log.t[order], cols, dict(log.meta))
