"""Tracking experiments: a small recurrent net follows a target signal online.

The network integrates the costate-flipped Hamilton system (or the plain
one, with global sign flips from a policy) from Cauchy data only, so it can
run causally on a stream.  Logs carry the phase point plus diagnostic
traces: tracking error, loss, regulariser, kinetic term, temporal weight,
Lagrangian integrand and Hamiltonian.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import backend
from .config import ExperimentConfig, resolve_axis
from .costate import HamiltonianConfig, LossSpec, NetworkHamiltonian
from .dynamics import ACTIVATION_IDS, InputSignal, SpeedConstants, get_activation
from .graph import NetGraph, build_graph, full_graph, layered_graph
from .integrator import IntegratorConfig, NumericalBlowup, TrajectoryLog, integrate, write_json
from .policy import make_policy


@dataclass(frozen=True)
class Segment:
    """One piece of a piecewise target: a cosine burst or a constant level."""

    start: float
    duration: float
    amplitude: float | None = None
    frequency: float | None = None
    value: float | None = None

    def __call__(self, t):
        if self.value is not None:
            return np.full_like(t, self.value, dtype=float)
        return self.amplitude * np.cos(2.0 * math.pi * self.frequency * t)


class TargetSignal:
    """Scalar reference signal y(t), evaluable on arrays of times."""

    def __init__(self, kind: str, amplitude=0.5, frequency=0.2, phase=0.0, offset=0.0, segments=()):
        self.kind = kind
        self.amplitude, self.frequency, self.phase, self.offset = amplitude, frequency, phase, offset
        self.segments = tuple(segments)

    @classmethod
    def sinusoid(cls, amplitude=0.5, frequency=0.2, phase=0.0, offset=0.0):
        return cls("sinusoid", amplitude, frequency, phase, offset)

    @classmethod
    def piecewise(cls, segments):
        """Segments as dicts or objects with duration and (amplitude, frequency) or value."""
        out, start = [], 0.0
        for s in segments:
            get = s.get if isinstance(s, dict) else (lambda k, s=s: getattr(s, k))
            out.append(Segment(start, get("duration"), get("amplitude"), get("frequency"), get("value")))
            start += get("duration")
        return cls("piecewise", segments=out)

    @classmethod
    def default_piecewise(cls, T: float):
        """Six equal segments: cosine at 0.5 Hz scaled 1.0 and 0.4, interleaved with levels 0.8 and -0.5."""
        dur = T / 6.0
        specs = [
            {"duration": dur, "amplitude": 1.0, "frequency": 0.5},
            {"duration": dur, "value": 0.8},
            {"duration": dur, "amplitude": 0.4, "frequency": 0.5},
            {"duration": dur, "value": -0.5},
            {"duration": dur, "amplitude": 1.0, "frequency": 0.5},
            {"duration": dur, "value": 0.8},
        ]
        return cls.piecewise(specs)

    @property
    def end(self) -> float:
        if not self.segments:
            return math.inf
        last = self.segments[-1]
        return last.start + last.duration

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "sinusoid":
            return self.offset + self.amplitude * np.sin(2.0 * math.pi * self.frequency * t + self.phase)
        out = np.zeros_like(t)
        starts = np.array([s.start for s in self.segments])
        idx = np.clip(np.searchsorted(starts, t, side="right") - 1, 0, len(self.segments) - 1)
        for k, seg in enumerate(self.segments):
            mask = idx == k
            if np.any(mask):
                out[mask] = seg(t[mask])
        return out


# -- building blocks from a config ---------------------------------------------

def build_network(cfg: ExperimentConfig) -> NetGraph:
    gs = cfg.graph
    if gs.kind == "full":
        return full_graph(gs.n_hidden, gs.d, gs.outputs, gs.self_loops)
    if gs.kind == "layered":
        return layered_graph(gs.sizes, gs.outputs)
    return build_graph(gs.n, gs.d, [tuple(a) for a in gs.arcs], gs.outputs)


def build_input(cfg: ExperimentConfig, d: int) -> InputSignal:
    s = cfg.dynamics.input
    if s.kind == "constant":
        return InputSignal.constant(s.value, d)
    return InputSignal.sinusoid(s.amplitude, s.frequency, s.phase, s.offset, d)


def build_target(cfg: ExperimentConfig) -> TargetSignal:
    s = cfg.target
    if s.kind == "sinusoid":
        return TargetSignal.sinusoid(s.amplitude, s.frequency, s.phase, s.offset)
    if s.segments:
        return TargetSignal.piecewise(s.segments)
    return TargetSignal.default_piecewise(cfg.integrator.T)


def build_speed(cfg: ExperimentConfig, n_hidden: int) -> SpeedConstants:
    sp = cfg.dynamics.speed
    if isinstance(sp, list):
        if len(sp) != n_hidden:
            raise ValueError(f"speed list has {len(sp)} entries for {n_hidden} hidden vertices")
        return SpeedConstants(np.array(sp, dtype=float))
    return SpeedConstants.uniform(sp, n_hidden)


def build_system(cfg: ExperimentConfig):
    """(graph, NetworkHamiltonian, target) for a config.

    Experiment constants map onto the Hamiltonian as r -> m (weight-velocity
    cost), r_w -> k (weight regulariser) and q -> loss gain.
    """
    g = build_network(cfg)
    target = build_target(cfg)
    n_out = len(g.outputs)
    loss = LossSpec(lambda t: np.full(n_out, float(target(t))), q=cfg.hamiltonian.q)
    h = cfg.hamiltonian
    hcfg = HamiltonianConfig(m=h.r, k=h.r_w, theta=h.theta, speed=build_speed(cfg, g.n_hidden),
                             loss=loss, horizon=cfg.integrator.T,
                             activation=get_activation(cfg.dynamics.activation))
    return g, NetworkHamiltonian(g, hcfg, build_input(cfg, g.d)), target


def initial_state(cfg: ExperimentConfig, g: NetGraph):
    """x = 0, p = 0 and weights uniform in +-init_weight_scale from the config seed."""
    rng = np.random.default_rng(cfg.seed)
    s = cfg.init_weight_scale
    w0 = rng.uniform(-s, s, g.n_weights)
    return np.zeros(g.n_hidden), w0, np.zeros(g.n_hidden), np.zeros(g.n_weights)


def column_labels(g: NetGraph):
    hid = [f"{i}" for i in range(g.d + 1, g.n + 1)]
    wl = g.weight_labels()
    return ([f"x{i}" for i in hid] + [f"w{s}" for s in wl]
            + [f"px{i}" for i in hid] + [f"pw{s}" for s in wl])


# -- runs ----------------------------------------------------------------------

def _integrate_phase(cfg: ExperimentConfig, g, system, target):
    ic = cfg.integrator
    icfg = IntegratorConfig(tau=ic.tau, T=ic.T, scheme=ic.scheme, record_stride=ic.record_stride,
                            blowup=ic.blowup)
    steps = icfg.steps
    flipped = ic.system == "costate_flipped"
    policy = make_policy(cfg.policy.kind, cfg.policy.track_radius, cfg.policy.flip_frequency)
    x0, w0, px0, pw0 = initial_state(cfg, g)
    labels = column_labels(g)
    if ic.scheme == "rk4":
        try:
            log = integrate(system.phase_rhs(flipped), system.pack(x0, w0, px0, pw0), icfg,
                            policy, labels)
        except NumericalBlowup as exc:
            exc.log.meta["blowup"] = True
            raise
        return log, steps
    hc = system.cfg
    grid = np.arange(steps + 1) * ic.tau
    U = system.inputs.sample(ic.tau, steps)
    Y = np.repeat(target(grid)[:, None], len(g.outputs), axis=1)
    rec, signs, tbar, status, fail, last = backend.kernels.run_network_euler(
        g.src, g.dst, g.d, ACTIVATION_IDS[hc.activation.name], hc.speed.values, hc.c, hc.m, hc.k,
        hc.theta, hc.loss.q, np.asarray(g.output_hidden, dtype=np.intp), U, Y, ic.tau, steps,
        ic.record_stride, flipped, policy.kernel_id, float(policy.param), x0, w0, px0, pw0, ic.blowup)
    rows = rec.shape[0]
    t = np.arange(rows) * ic.record_stride * ic.tau
    cols = {name: rec[:, i].copy() for i, name in enumerate(labels)}
    cols["s"] = np.asarray(signs, dtype=float)
    cols["tbar"] = np.asarray(tbar, dtype=float)
    log = TrajectoryLog(t, cols, {"state_labels": labels})
    if status != 0:
        log.meta["blowup"] = True
        raise NumericalBlowup(int(fail), int(fail) * ic.tau, last, log)
    return log, steps


def add_diagnostics(log: TrajectoryLog, cfg: ExperimentConfig, g: NetGraph, system, target):
    """Append target, err, loss, reg, kinetic, phi, lagrangian and hamiltonian columns."""
    hc = system.cfg
    nh, nw = g.n_hidden, g.n_weights
    Z = log.array(column_labels(g))
    X, W, PX, PW = Z[:, :nh], Z[:, nh:nh + nw], Z[:, nh + nw:2 * nh + nw], Z[:, 2 * nh + nw:]
    t = log.t
    phi = np.exp(hc.theta * t)
    yt = target(t)
    out = np.asarray(g.output_hidden)
    E = X[:, out] - yt[:, None]
    loss = 0.5 * hc.loss.q * np.sum(E ** 2, axis=1)
    reg = 0.5 * hc.k * np.sum(W ** 2, axis=1)
    wdot = -PW / (hc.m * hc.c * phi[:, None])
    kinetic = 0.5 * hc.m * np.sum(wdot ** 2, axis=1)
    lagr = (loss + reg + kinetic) * phi
    ham = np.array([system.hamiltonian(X[n], W[n], PX[n], PW[n], t[n]) for n in range(len(t))])
    log.columns.update({
        "target": yt,
        "err": E[:, 0] if E.shape[1] == 1 else np.sqrt(np.sum(E ** 2, axis=1)),
        "loss": loss,
        "reg": reg,
        "kinetic": kinetic,
        "phi": phi,
        "lagrangian": lagr,
        "hamiltonian": ham,
    })
    return log


def summarize(log: TrajectoryLog, cfg: ExperimentConfig, steps: int, blowup: bool) -> dict:
    err = np.abs(np.asarray(log["err"], dtype=float))
    s = np.asarray(log["s"], dtype=float)
    return {
        "seed": cfg.seed,
        "backend": backend.NAME,
        "steps": int(steps),
        "rows": int(len(log)),
        "blowup": bool(blowup),
        "t_end": float(log.t[-1]) if len(log) else 0.0,
        "mean_abs_error": float(np.mean(err)) if err.size else math.nan,
        "final_abs_error": float(err[-1]) if err.size else math.nan,
        "rms_error": float(np.sqrt(np.mean(err ** 2))) if err.size else math.nan,
        "backward_rows": int(np.sum(s < 0)),
        "internal_time_end": float(log["tbar"][-1]) if len(log) else 0.0,
        "hamiltonian_finite": bool(np.all(np.isfinite(log["hamiltonian"]))),
        "lagrangian_finite": bool(np.all(np.isfinite(log["lagrangian"]))),
    }


def run_experiment(cfg: ExperimentConfig):
    """Integrate one configured experiment; returns (log, summary).

    On blow-up the partial log (with diagnostics) is attached to the raised
    NumericalBlowup as ``exc.log`` and its summary as ``exc.summary``.
    """
    g, system, target = build_system(cfg)
    try:
        log, steps = _integrate_phase(cfg, g, system, target)
    except NumericalBlowup as exc:
        if exc.log is not None and len(exc.log):
            add_diagnostics(exc.log, cfg, g, system, target)
            exc.summary = summarize(exc.log, cfg, exc.step, True)
        raise
    add_diagnostics(log, cfg, g, system, target)
    log.meta["config"] = cfg
    return log, summarize(log, cfg, steps, False)


def write_outputs(out_dir, cfg: ExperimentConfig, log: TrajectoryLog | None, summary: dict):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"config_echo": out / "config_echo.yaml", "summary": out / "summary.json"}
    paths["config_echo"].write_text(cfg.echo())
    if log is not None:
        paths["trajectory"] = out / "trajectory.csv"
        log.to_csv(paths["trajectory"])
    write_json(summary, paths["summary"])
    return paths


# -- sweeps --------------------------------------------------------------------

def _cell(args):
    cfg, path, value = args
    try:
        run_cfg = cfg.replace(path, value)
        _, summary = run_experiment(run_cfg)
        return {"value": value, "ok": True, **summary}
    except NumericalBlowup as exc:
        summary = getattr(exc, "summary", {})
        return {"value": value, "ok": False, "error": str(exc), **summary}
    except Exception as exc:  # one failing cell must not stop the sweep
        return {"value": value, "ok": False, "error": f"{type(exc).__name__}: {exc}"}


def worker_count(n_tasks: int) -> int:
    cap = os.environ.get("HAMLEARN_THREADS")
    limit = int(cap) if cap else (os.cpu_count() or 1)
    return max(1, min(n_tasks, limit))


def sweep(cfg: ExperimentConfig, axis: str, values) -> list[dict]:
    """Run one experiment per value of ``axis``; rows come back in the order of ``values``."""
    values = list(values)
    if not values:
        return []
    path = resolve_axis(axis)
    cfg.replace(path, values[0])  # surfaces unknown axes before any work starts
    tasks = [(cfg, path, v) for v in values]
    workers = worker_count(len(tasks))
    if workers == 1:
        return [_cell(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_cell, tasks))
