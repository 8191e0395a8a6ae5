import numpy as np
import pytest

from hamlearn import backend
from hamlearn.config import load_config
from hamlearn.dynamics import ACTIVATION_IDS
from hamlearn.experiments import build_system, initial_state
from hamlearn.verify import random_graph, random_phase, random_system

compiled = pytest.mark.skipif(backend.compiled_kernels is None, reason="compiled kernels not built")


def test_backend_selection():
    assert backend.get("python") is backend.python_kernels
    assert backend.get() is backend.kernels
    with pytest.raises(ValueError):
        backend.get("fortran")
    assert backend.NAME in ("cython", "python")


@compiled
@pytest.mark.parametrize("flipped", [False, True])
def test_rhs_parity(rng, flipped):
    py, cy = backend.get("python"), backend.get("cython")
    for _ in range(20):
        g = random_graph(rng)
        sysm = random_system(rng, g)
        cfg = sysm.cfg
        x, w, px, pw = random_phase(rng, sysm)
        args = (g.src, g.dst, g.d, ACTIVATION_IDS[cfg.activation.name], cfg.speed.values, cfg.c, cfg.m,
                cfg.k, 1.7, w, x, sysm.inputs(0.3), px, pw, sysm.loss_grad(x, 0.3), flipped)
        for a, b in zip(py.network_rhs(*args), cy.network_rhs(*args)):
            assert np.max(np.abs(a - b), initial=0.0) <= 1e-12 * max(1.0, np.max(np.abs(a), initial=0.0))


def _euler_args(cfg, steps):
    g, system, target = build_system(cfg)
    hc = system.cfg
    tau = cfg.integrator.tau
    grid = np.arange(steps + 1) * tau
    policy_id, param = {"forward": (0, 0.0), "track_ball": (2, cfg.policy.track_radius or 0.0)}[cfg.policy.kind]
    return (g.src, g.dst, g.d, ACTIVATION_IDS[hc.activation.name], hc.speed.values, hc.c, hc.m, hc.k,
            hc.theta, hc.loss.q, np.asarray(g.output_hidden, dtype=np.intp),
            system.inputs.sample(tau, steps), target(grid)[:, None], tau, steps, 1, True, policy_id, param,
            *initial_state(cfg, g), cfg.integrator.blowup)


@compiled
@pytest.mark.parametrize("preset", ["sinusoid_q100", "piecewise_q100"])
def test_euler_loop_parity(preset):
    args = _euler_args(load_config(preset), 100)
    py = backend.get("python").run_network_euler(*args)
    cy = backend.get("cython").run_network_euler(*args)
    assert np.max(np.abs(py[0] - cy[0])) <= 1e-12 * max(1.0, np.max(np.abs(py[0])))
    assert np.array_equal(py[1], cy[1])
    assert py[3] == cy[3] == 0


@compiled
def test_blowup_status_parity():
    cfg = load_config("sinusoid_q100").replace("integrator.blowup", 1.0)
    args = _euler_args(cfg, 5000)
    py = backend.get("python").run_network_euler(*args)
    cy = backend.get("cython").run_network_euler(*args)
    assert py[3] == cy[3] == 1 and py[4] == cy[4]
    assert len(py[0]) == len(cy[0])
