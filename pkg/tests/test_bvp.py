import math
import warnings

import numpy as np
import pytest

from hamlearn.bvp import LQControlProblem, NoConvergence, bvp_sweep, network_bvp_sweep
from hamlearn.integrator import IntegratorConfig
from hamlearn.lq import LQProblem, discrete_riccati_gain
from hamlearn.verify import single_weight_system


def test_zero_problem_converges_in_one_sweep():
    log = bvp_sweep(LQControlProblem(0.0, 1.0, 1.0, 1.0), [0.0], IntegratorConfig(tau=1e-2, T=1.0))
    assert log.meta["converged"] and log.meta["sweeps"] == 1
    assert np.all(log["x"] == 0) and np.all(log["px"] == 0)


def test_cost_is_non_increasing():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        log = bvp_sweep(LQControlProblem(0.5, 1.0, 2.0, 1.0), [1.0], IntegratorConfig(tau=1e-2, T=3.0),
                        max_sweeps=5)
    hist = log.meta["cost_history"]
    assert len(hist) >= 2
    assert all(b <= a + 1e-15 for a, b in zip(hist, hist[1:]))


def test_costate_ends_at_zero_and_gain_matches_dynamic_programming():
    cfg = IntegratorConfig(tau=1e-2, T=5.0)
    log = bvp_sweep(LQControlProblem(0.0, 1.0, 1.0, 1.0), [1.0], cfg, tol=1e-6, max_sweeps=500)
    assert log.meta["converged"]
    assert log["px"][-1] == 0.0
    gain, _ = discrete_riccati_gain(LQProblem(0.0, 1.0, 1.0, 1.0, 5.0), 1e-2)
    assert abs(-log["v"][0] / log["x"][0] - gain) / gain < 0.02


def test_strict_mode_and_damping_validation():
    prob = LQControlProblem(0.5, 1.0, 2.0, 1.0)
    cfg = IntegratorConfig(tau=1e-2, T=3.0)
    with pytest.raises(NoConvergence):
        bvp_sweep(prob, [1.0], cfg, max_sweeps=1, strict=True)
    with pytest.raises(ValueError):
        bvp_sweep(prob, [1.0], cfg, gamma=0.0)


def test_network_sweep_keeps_output_costate_zero_without_loss():
    sysm = single_weight_system()
    cfg = IntegratorConfig(tau=1e-2, T=5.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        log = network_bvp_sweep(sysm, [0.0], [0.5], cfg, max_sweeps=20)
    px = log["px2"]
    assert np.max(np.abs(px)) <= 1e-10
    w = log["w2_1"]
    assert np.all(np.isfinite(w)) and np.max(np.abs(w)) <= 0.5 + 1e-12
    assert math.isfinite(log.meta["cost"])
