"""Randomised property checks."""
import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from hamlearn.config import parse_config
from hamlearn.dynamics import InputSignal, SpeedConstants, bibo_bound, state_rhs
from hamlearn.graph import full_graph
from hamlearn.integrator import IntegratorConfig, integrate
from hamlearn.lq import LQProblem, lq_hamilton_rhs, riccati_rhs
from hamlearn.policy import Periodic
from hamlearn.verify import random_graph, random_phase, random_system

finite = st.floats(-5, 5, allow_nan=False)
seeds = st.integers(0, 2 ** 32 - 1)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_local_general_agreement(seed):
    rng = np.random.default_rng(seed)
    sysm = random_system(rng, random_graph(rng))
    x, w, px, pw = random_phase(rng, sysm)
    t = float(rng.uniform(0, 1))
    for a, b in zip(sysm.rhs_general(x, w, px, pw, t), sysm.rhs_local(x, w, px, pw, t)):
        assert np.max(np.abs(a - b), initial=0.0) <= 1e-12 * max(1.0, np.max(np.abs(a), initial=0.0))


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_flip_preserves_rhs_products(seed):
    rng = np.random.default_rng(seed)
    sysm = random_system(rng, random_graph(rng))
    y = sysm.pack(*random_phase(rng, sysm))
    f = sysm.phase_rhs()(y, 0.2)
    nh, nw = sysm.dims
    for s in (1.0, -1.0):
        g = s * f
        xdot, pdot = g[: nh + nw], g[nh + nw:]
        assert math.isclose(float(xdot @ pdot), float(f[: nh + nw] @ f[nh + nw:]), rel_tol=1e-15, abs_tol=0)
        assert float(g @ g) == float(f @ f)


@settings(max_examples=30, deadline=None)
@given(seeds, st.floats(0.5, 5.0))
def test_bibo_on_random_runs(seed, speed):
    rng = np.random.default_rng(seed)
    g = full_graph(3, 1)
    w = rng.uniform(-3, 3, g.n_weights)
    x0 = rng.uniform(-2, 2, 3)
    c = SpeedConstants.uniform(speed, 3)
    inp = InputSignal.sinusoid(1.0, 0.5, d=1)
    log = integrate(lambda x, t: state_rhs(g, x, inp(t), w, c), x0, IntegratorConfig(tau=1e-2, T=5.0))
    assert np.all(np.abs(log.states) <= bibo_bound(x0) + 1e-12)


@settings(max_examples=50, deadline=None)
@given(st.floats(-2, 2), st.floats(0.5, 2), st.floats(0.1, 10), st.floats(0.1, 10), finite, finite)
def test_ratio_follows_riccati(a, b, q, r, x, p):
    if abs(x) < 1e-3:
        return
    prob = LQProblem(a, b, q, r)
    xd, pd = lq_hamilton_rhs(x, p, prob)
    th = p / x
    assert math.isclose((pd - th * xd) / x, riccati_rhs(th, prob), rel_tol=1e-9, abs_tol=1e-9)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.01, 10), st.floats(0, 100))
def test_periodic_is_stateless(freq, t):
    pol = Periodic(freq)
    assert pol(t) == pol(t) in (1, -1)


@settings(max_examples=30, deadline=None)
@given(st.floats(1e-6, 1.0), st.floats(1e-6, 1.0), st.integers(0, 1000))
def test_config_tau_constraint(tau, T, seed):
    text = f"seed: {seed}\nintegrator:\n  tau: {tau!r}\n  T: {T!r}\n"
    try:
        cfg = parse_config(text)
    except ValueError:
        assert tau > T
    else:
        assert cfg.integrator.tau <= cfg.integrator.T and cfg.seed == seed
