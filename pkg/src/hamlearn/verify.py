"""Oracle comparisons behind ``hamlearn verify``.

Each suite returns a list of :class:`Check` records holding the measured
residual, the threshold it is compared with and a pass flag.  Every suite
runs at fixed seeds.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .bvp import network_bvp_sweep
from .costate import (
    HamiltonianConfig,
    LossSpec,
    NetworkHamiltonian,
    backprop_limit_lambda,
    equilibrium_state,
)
from .dynamics import ACTIVATIONS, InputSignal, SpeedConstants, activations, bibo_bound, get_activation
from .graph import build_graph, full_graph, layered_graph, topological_order
from .integrator import IntegratorConfig, NumericalBlowup, integrate
from .lq import (
    LQProblem,
    algebraic_riccati_roots,
    grid_problems,
    riccati_backward,
    riccati_flow,
    simultaneous_flip_check,
    stable_root,
)

SUITES = ("equivalence", "backprop-limit", "riccati", "bibo", "blowup", "adjoint")


@dataclass
class Check:
    name: str
    passed: bool
    value: float
    threshold: float
    detail: dict = field(default_factory=dict)
    relation: str = "<="  # how value must compare with threshold to pass

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"{verdict} {self.name}: {self.value:.3e} (needs {self.relation} {self.threshold:.1e})"


# -- random legal networks -----------------------------------------------------

def random_graph(rng, n_max: int = 8):
    """Random legal net: every input feeds a hidden vertex, at least one output."""
    n = int(rng.integers(3, n_max + 1))
    d = int(rng.integers(1, n - 1))
    hidden = list(range(d + 1, n + 1))
    arcs = set()
    for j in range(1, d + 1):
        arcs.add((j, int(rng.choice(hidden))))
    for j in range(1, n + 1):
        for i in hidden:
            if rng.random() < 0.4:
                arcs.add((j, i))
    k = int(rng.integers(1, len(hidden) + 1))
    outputs = sorted(int(v) for v in rng.choice(hidden, size=k, replace=False))
    return build_graph(n, d, sorted(arcs), outputs)


def random_system(rng, g, theta=None):
    names = sorted(ACTIVATIONS)
    act = get_activation(names[int(rng.integers(len(names)))])
    n_out = len(g.outputs)
    amp = rng.uniform(-1, 1, n_out)
    loss = LossSpec(lambda t, amp=amp: amp * math.cos(t), q=float(rng.uniform(0.1, 10)))
    cfg = HamiltonianConfig(
        m=float(rng.uniform(0.1, 2)), k=float(rng.uniform(0, 2)),
        theta=float(rng.uniform(-1, 1)) if theta is None else theta,
        speed=SpeedConstants(rng.uniform(0.2, 5, g.n_hidden)), loss=loss, activation=act)
    inputs = InputSignal.sinusoid(float(rng.uniform(0.2, 1.5)), float(rng.uniform(0.1, 1)),
                                  float(rng.uniform(0, 3)), 0.0, g.d)
    return NetworkHamiltonian(g, cfg, inputs)


def random_phase(rng, system):
    nh, nw = system.dims
    return (rng.uniform(-1, 1, nh), rng.uniform(-1.5, 1.5, nw),
            rng.uniform(-2, 2, nh), rng.uniform(-2, 2, nw))


# -- equivalence -----------------------------------------------------------------

def check_local_vs_general(n_nets: int = 100, seed: int = 0, tol: float = 1e-12) -> Check:
    """Neighbourhood-local Hamilton equations against the dense-Jacobian form."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_nets):
        g = random_graph(rng)
        system = random_system(rng, g)
        x, w, px, pw = random_phase(rng, system)
        t = float(rng.uniform(0, 1))
        gen = system.rhs_general(x, w, px, pw, t)
        loc = system.rhs_local(x, w, px, pw, t)
        worst = max(worst, max(float(np.max(np.abs(a - b))) for a, b in zip(gen, loc)))
    return Check("local vs general right-hand side", worst <= tol, worst, tol, {"nets": n_nets})


def four_vertex_system(theta=0.5):
    g = build_graph(4, 1, [(1, 2), (1, 3), (2, 3), (3, 4), (4, 2), (2, 4), (3, 3)], [4])
    cfg = HamiltonianConfig(m=1.0, k=0.5, theta=theta, speed=SpeedConstants(np.array([1.0, 2.0, 1.5])),
                            loss=LossSpec(lambda t: np.array([0.5 * math.sin(t)]), q=2.0))
    return NetworkHamiltonian(g, cfg, InputSignal.sinusoid(1.0, 0.5, d=1))


def check_lambda_equivalence(flipped: bool = False, tau: float = 1e-4, T: float = 1.0,
                             seed: int = 3, tol: float = 1e-6) -> Check:
    """Costate trajectory rescaled to lambda against the mixed-order lambda system."""
    rng = np.random.default_rng(seed)
    system = four_vertex_system()
    nh, nw = system.dims
    x, w, px, pw = random_phase(rng, system)
    stride = max(1, int(round(0.01 / tau)))
    cfg = IntegratorConfig(tau=tau, T=T, scheme="rk4", record_stride=stride)
    A = integrate(system.phase_rhs(flipped), system.pack(x, w, px, pw), cfg).states
    hc = system.cfg
    wdot0 = -pw / (hc.m * hc.c * hc.phi(0.0))
    B = integrate(system.lambda_phase_rhs(flipped),
                  system.pack(x, w, wdot0, system.to_lambda(x, w, px, 0.0)), cfg).states
    t = np.arange(len(A)) * stride * tau
    lam_a = np.array([system.to_lambda(*system.split(row)[:3], tt) for row, tt in zip(A, t)])
    dev = float(np.max(np.abs(lam_a - B[:, nh + 2 * nw:])))
    label = "flipped" if flipped else "unflipped"
    return Check(f"rescaled costate equivalence ({label})", dev <= tol, dev, tol,
                 {"tau": tau, "T": T})


def suite_equivalence():
    return [check_local_vs_general(), check_lambda_equivalence(False), check_lambda_equivalence(True)]


# -- backprop limit ----------------------------------------------------------------

def backprop_setup(seed: int = 0):
    g = layered_graph([3, 4, 2, 1])
    rng = np.random.default_rng(seed)
    w = rng.uniform(-1, 1, g.n_weights)
    u = np.array([0.5, 0.2, -0.3])
    loss = LossSpec(lambda t: np.array([0.3]), q=1.0)
    return g, w, u, loss


def finite_difference_deltas(g, w, u, loss, act="tanh", h=1e-5):
    """d(loss)/d(a_i) at the feed-forward equilibrium by central differences on a_i."""
    act = get_activation(act)
    order = topological_order(g)
    out = g.output_hidden

    def loss_with_shift(i0, delta):
        z = np.concatenate((u, np.zeros(g.n_hidden)))
        for i in order:
            a = sum(w[g.arc(j + 1, i + 1)] * z[j] for j in g.pa[i])
            if i == i0:
                a += delta
            z[i] = act(a)
        e = loss.error(z[g.d:][out], 0.0)
        return 0.5 * loss.q * float(e @ e)

    return np.array([(loss_with_shift(i, h) - loss_with_shift(i, -h)) / (2 * h)
                     for i in range(g.d, g.n)])


def check_backprop_oracle(tol: float = 1e-7) -> Check:
    g, w, u, loss = backprop_setup()
    x = equilibrium_state(g, w, u)
    lam = backprop_limit_lambda(g, x, w, u, loss)
    fd = finite_difference_deltas(g, w, u, loss)
    err = float(np.max(np.abs(lam - fd)))
    return Check("backprop oracle vs central differences", err <= tol, err, tol)


def lambda_at_speed(c: float, theta: float = 1.0):
    """Integrate state and flipped rescaled costate with frozen weights; return relative error."""
    g, w, u, loss = backprop_setup()
    cfg = HamiltonianConfig(m=1.0, k=0.0, theta=theta, speed=SpeedConstants.uniform(c, g.n_hidden),
                            loss=loss)
    system = NetworkHamiltonian(g, cfg, InputSignal.constant(u, g.d))
    nh = g.n_hidden
    zero = np.zeros(g.n_weights)

    def rhs(y, t):
        xdot, _, lamdot = system.lambda_rhs(y[:nh], w, zero, y[nh:], t, flipped=True)
        return np.concatenate((xdot, lamdot))

    tau = 0.1 / c
    T = 30.0 / c
    steps = int(round(T / tau))
    log = integrate(rhs, np.zeros(2 * nh), IntegratorConfig(tau=tau, T=T, scheme="rk4",
                                                             record_stride=steps))
    lam = log.states[-1, nh:]
    ref = backprop_limit_lambda(g, equilibrium_state(g, w, u), w, u, loss, T)
    return float(np.linalg.norm(lam - ref) / np.linalg.norm(ref))


def check_backprop_limit(speeds=(1e2, 1e3, 1e4), tol: float = 1e-2):
    errs = [lambda_at_speed(c) for c in speeds]
    decreasing = all(b < a for a, b in zip(errs, errs[1:]))
    at = errs[list(speeds).index(1e3)] if 1e3 in speeds else errs[-1]
    return [
        Check("lambda vs backprop deltas at c=1e3", at <= tol, at, tol,
              {"errors": dict(zip(map(float, speeds), errs))}),
        Check("relative error strictly decreasing in c", decreasing,
              max((b / a for a, b in zip(errs, errs[1:])), default=0.0), 1.0,
              {"errors": dict(zip(map(float, speeds), errs))}, "<"),
    ]


def suite_backprop_limit():
    return [check_backprop_oracle()] + check_backprop_limit()


# -- Riccati -----------------------------------------------------------------------

def check_riccati_grid(tol_root: float = 1e-6, tol_flip: float = 1e-5, limit: float = 1e6):
    problems = grid_problems()
    root_err = 0.0
    flip_err = 0.0
    peaks = []
    for prob in problems:
        target = stable_root(prob)
        _, th = riccati_flow(prob, 0.0, 20.0, 1e-3, flipped=True)
        root_err = max(root_err, abs(th[-1] - target))
        _, un = riccati_flow(prob, 0.0, 20.0, 1e-3, flipped=False, limit=limit)
        peaks.append(float(np.max(np.abs(un))))
        rep = simultaneous_flip_check(1.0, 0.0, prob, tau=1e-4, T=20.0, record_stride=1000)
        flip_err = max(flip_err, rep.residual)
    n = len(problems)
    return [
        Check(f"flipped flow reaches the stable root ({n} problems)", root_err <= tol_root, root_err, tol_root),
        Check(f"unflipped flow from 0 diverges, smallest peak |theta| ({n} problems)",
              all(p > limit for p in peaks), min(peaks), limit, {"peaks": peaks}, ">"),
        Check(f"simultaneous flip matches flipped flow ({n} problems)", flip_err <= tol_flip, flip_err, tol_flip),
    ]


def check_riccati_backward(tol: float = 1e-6) -> Check:
    prob = LQProblem(0.0, 1.0, 1.0, 1.0, 20.0)
    _, fwd = riccati_flow(prob, 0.0, 20.0, 1e-3, flipped=True)
    _, back = riccati_backward(prob, 0.0, 20.0, 1e-3)
    err = float(np.max(np.abs(back - fwd[::-1])))
    return Check("backward unflipped flow equals reversed flipped flow", err <= tol, err, tol)


def check_riccati_roots(tol: float = 1e-12) -> Check:
    prob = LQProblem(0.0, 1.0, 1.0, 1.0)
    roots = algebraic_riccati_roots(prob)
    err = max(abs(roots[0][0] + 1.0), abs(roots[1][0] - 1.0))
    ok = err <= tol and roots[1][1] and not roots[0][1]
    return Check("algebraic roots and stability classification", ok, err, tol)


def suite_riccati():
    return [check_riccati_roots(), check_riccati_backward()] + check_riccati_grid()


# -- BIBO --------------------------------------------------------------------------

def check_bibo(runs: int = 50, tau: float = 1e-2, T: float = 10.0, margin: float = 0.05) -> Check:
    worst = -math.inf
    g = full_graph(5, 1)
    for seed in range(runs):
        rng = np.random.default_rng(seed)
        w = rng.uniform(-3, 3, g.n_weights)
        x0 = rng.uniform(-2, 2, g.n_hidden)
        c = rng.uniform(0.5, 5.0, g.n_hidden)
        inp = InputSignal.sinusoid(float(rng.uniform(0.5, 3)), float(rng.uniform(0.1, 2)), d=1)
        act = get_activation("tanh")

        def rhs(x, t):
            return c * (act(activations(g, x, inp(t), w)) - x)

        log = integrate(rhs, x0, IntegratorConfig(tau=tau, T=T))
        bound = bibo_bound(x0, act)
        worst = max(worst, float(np.max(np.abs(log.states) - bound)))
    return Check(f"{runs} runs stay within |x(0)| + B", worst <= margin, worst, margin)


def suite_bibo():
    return [check_bibo()]


# -- blow-up -----------------------------------------------------------------------

def single_weight_system():
    g = build_graph(2, 1, [(1, 2)], [2])
    cfg = HamiltonianConfig(m=1.0, k=1.0, theta=1.0, speed=SpeedConstants.uniform(1.0, 1),
                            loss=LossSpec(q=0.0))
    return NetworkHamiltonian(g, cfg, InputSignal.constant(1.0, 1))


def forward_peak(seed: int, T: float = 20.0, tau: float = 1e-2):
    """Sup-norm of the forward Cauchy run from a random nonzero p_w(0); inf on blow-up."""
    rng = np.random.default_rng(seed)
    system = single_weight_system()
    w0 = rng.uniform(-1, 1)
    pw0 = rng.uniform(0.1, 1.0) * rng.choice([-1.0, 1.0])
    y0 = system.pack([0.0], [w0], [0.0], [pw0])
    try:
        log = integrate(system.phase_rhs(False), y0, IntegratorConfig(tau=tau, T=T))
    except NumericalBlowup:
        return math.inf
    return float(np.max(np.abs(log.states)))


def check_blowup(seeds=range(10), limit: float = 1e6):
    peaks = [forward_peak(s) for s in seeds]
    system = single_weight_system()
    w0 = 0.5
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        log = network_bvp_sweep(system, [0.0], [w0], IntegratorConfig(tau=1e-2, T=20.0), max_sweeps=50)
    px = float(np.max(np.abs(log["px2"])))
    wmax = float(np.max(np.abs(log["w2_1"])))
    return [
        Check(f"forward run exceeds {limit:.0e} ({len(peaks)} seeds)", all(p > limit for p in peaks),
              float(min(peaks)), limit, {"peaks": peaks}, ">"),
        Check("sweep keeps p_x identically zero", px <= 1e-10, px, 1e-10),
        Check("sweep keeps w bounded by |w(0)|", wmax <= abs(w0) + 1e-12, wmax, abs(w0),
              {"converged": log.meta["converged"], "sweeps": log.meta["sweeps"]}),
    ]


def suite_blowup():
    return check_blowup()


# -- adjoint -----------------------------------------------------------------------

def three_vertex_system():
    g = build_graph(3, 1, [(1, 2), (2, 3), (3, 2), (3, 3)], [3])
    cfg = HamiltonianConfig(m=1.0, k=0.0, theta=0.5, speed=SpeedConstants(np.array([1.5, 0.8])),
                            loss=LossSpec(lambda t: np.array([0.4 * math.cos(t)]), q=3.0))
    w = np.array([0.9, -0.7, 1.1, 0.4])
    return NetworkHamiltonian(g, cfg, InputSignal.sinusoid(1.0, 0.3, d=1)), w


def integrated_loss(system, w, x0, T, tau):
    """J = int c L(x) phi dt along the frozen-weight trajectory (RK4 on the augmented state)."""
    hc = system.cfg

    def rhs(y, t):
        x = y[:-1]
        return np.append(system.state_rhs(x, w, t), hc.c * system.loss(x, t) * hc.phi(t))

    log = integrate(rhs, np.append(x0, 0.0), IntegratorConfig(tau=tau, T=T, scheme="rk4",
                                                               record_stride=int(round(T / tau))))
    return float(log.states[-1, -1])


def adjoint_costate(system, w, x0, T, tau):
    """p_x(0) from the backward costate equation along a stored forward trajectory.

    The forward pass runs at step tau/2 so every RK4 stage of the backward
    pass (step tau) reads a stored state.
    """
    half = tau / 2
    steps = int(round(T / half))
    fwd = integrate(lambda x, t: system.state_rhs(x, w, t), x0,
                    IntegratorConfig(tau=half, T=T, scheme="rk4")).states
    assert fwd.shape[0] == steps + 1
    zeros = np.zeros(system.dims[1])

    def pdot(p, k):
        x = fwd[k]
        return system.rhs_local(x, w, p, zeros, k * half)[2]

    p = np.zeros(system.dims[0])
    for n in range(steps, 0, -2):
        k1 = pdot(p, n)
        k2 = pdot(p - half * k1, n - 1)
        k3 = pdot(p - half * k2, n - 1)
        k4 = pdot(p - tau * k3, n - 2)
        p = p - (tau / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return p


def check_adjoint(T: float = 2.0, tau: float = 1e-3, h: float = 1e-5, tol: float = 1e-4) -> Check:
    system, w = three_vertex_system()
    x0 = np.array([0.3, -0.2])
    p0 = adjoint_costate(system, w, x0, T, tau)
    fd = np.zeros_like(x0)
    for i in range(x0.size):
        e = np.zeros_like(x0)
        e[i] = h
        fd[i] = (integrated_loss(system, w, x0 + e, T, tau) - integrated_loss(system, w, x0 - e, T, tau)) / (2 * h)
    err = float(np.max(np.abs(p0 - fd)))
    return Check("backward p_x(0) vs finite-difference sensitivity", err <= tol, err, tol,
                 {"p0": p0.tolist(), "fd": fd.tolist()})


def suite_adjoint():
    return [check_adjoint()]


RUNNERS = {
    "equivalence": suite_equivalence,
    "backprop-limit": suite_backprop_limit,
    "riccati": suite_riccati,
    "bibo": suite_bibo,
    "blowup": suite_blowup,
    "adjoint": suite_adjoint,
}


def run_suite(name: str) -> list[Check]:
    if name not in RUNNERS:
        raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    return RUNNERS[name]()
