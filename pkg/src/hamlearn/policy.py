"""Hamiltonian Sign Flip policies producing s(t) in {+1, -1}."""
from __future__ import annotations

import math

import numpy as np

from ._pykernels import POLICY_FORWARD, POLICY_PERIODIC, POLICY_TRACK_BALL


class SignPolicy:
    """Base policy; subclasses set ``kernel_id`` and ``param`` for the compiled loop."""

    kernel_id = POLICY_FORWARD
    param = 0.0

    def reset(self):
        pass

    def __call__(self, t: float, phase=None) -> int:
        raise NotImplementedError


class AlwaysForward(SignPolicy):
    def __call__(self, t, phase=None):
        return 1

    def __repr__(self):
        return "AlwaysForward()"


class Periodic(SignPolicy):
    """s(t) = sign(cos(2 pi f t)), with cos = 0 resolved to +1. Stateless."""

    kernel_id = POLICY_PERIODIC

    def __init__(self, frequency: float):
        if frequency <= 0:
            raise ValueError("flip frequency must be positive")
        self.frequency = float(frequency)
        self.param = self.frequency

    def __call__(self, t, phase=None):
        return 1 if math.cos(2.0 * math.pi * self.frequency * t) >= 0.0 else -1

    def __repr__(self):
        return f"Periodic({self.frequency})"


class HamiltonianTrack:
    """Ball S = {|x|^2 + |w|^2 + |p_x|^2 + |p_w|^2 <= R}."""

    def __init__(self, radius: float):
        if radius <= 0:
            raise ValueError("track radius must be positive")
        self.radius = float(radius)

    def contains(self, phase) -> bool:
        phase = np.asarray(phase, dtype=float)
        return float(phase @ phase) <= self.radius


class TrackBall(SignPolicy):
    """Flip the current sign at every step taken from outside the track.

    Holds one sign of state; call ``reset`` before reusing on a new trajectory.
    """

    kernel_id = POLICY_TRACK_BALL

    def __init__(self, radius: float):
        self.track = HamiltonianTrack(radius)
        self.param = self.track.radius
        self.sign = 1

    def reset(self):
        self.sign = 1

    def __call__(self, t, phase=None):
        if phase is None:
            raise ValueError("TrackBall needs the phase point")
        if not self.track.contains(phase):
            self.sign = -self.sign
        return self.sign

    def __repr__(self):
        return f"TrackBall({self.track.radius})"


def make_policy(kind: str, track_radius: float | None = None, flip_frequency: float | None = None) -> SignPolicy:
    if kind == "forward":
        return AlwaysForward()
    if kind == "periodic":
        if flip_frequency is None:
            raise ValueError("periodic policy needs flip_frequency")
        return Periodic(flip_frequency)
    if kind == "track_ball":
        if track_radius is None:
            raise ValueError("track_ball policy needs track_radius")
        return TrackBall(track_radius)
    raise ValueError(f"unknown policy {kind!r}")


def sign_at(policy: SignPolicy, t: float, phase=None) -> int:
    return policy(t, phase)


def internal_time(log) -> np.ndarray:
    """Agent internal time: cumulative sum of s dt along the logged trajectory.

    Uses the exact per-step accumulation when the log carries it, else sums
    the recorded signs over the row spacing.
    """
    if "tbar" in log.columns:
        return np.asarray(log.columns["tbar"], dtype=float).copy()
    s = np.asarray(log.columns["s"], dtype=float)
    t = np.asarray(log.t, dtype=float)
    out = np.zeros_like(t)
    out[1:] = np.cumsum(s[:-1] * np.diff(t))
    return out
