"""Acceptance criteria 1-11, one test each.

Every test prints a ``PASS criterion N: ...`` or ``FAIL criterion N: ...``
line (collected again in the terminal summary) and then asserts.
Run directly with ``python tests/test_acceptance.py`` to print the lines only.
"""
import json
import subprocess
import sys
import warnings

import numpy as np

from hamlearn.bvp import LQControlProblem, bvp_sweep
from hamlearn.config import load_config
from hamlearn.experiments import build_system, column_labels, run_experiment
from hamlearn.integrator import IntegratorConfig
from hamlearn.lq import DivisionNearZero, LQProblem, discrete_riccati_gain, grid_problems, simultaneous_flip_check
from hamlearn.verify import (
    check_adjoint,
    check_backprop_limit,
    check_backprop_oracle,
    check_bibo,
    check_blowup,
    check_lambda_equivalence,
    check_local_vs_general,
    check_riccati_grid,
)

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # run as a script
    ACCEPTANCE_LINES = []


def report(number, passed, detail):
    line = f"{'PASS' if passed else 'FAIL'} criterion {number}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    return passed


def _describe(checks):
    return "; ".join(f"{c.name} {c.value:.3e} ({c.relation} {c.threshold:.0e}: {'ok' if c.passed else 'no'})"
                     for c in checks)


def test_criterion_1_local_equals_general():
    check = check_local_vs_general(n_nets=100, tol=1e-12)
    assert report(1, check.passed, _describe([check]))


def test_criterion_2_rescaled_costate_equivalence():
    checks = [check_lambda_equivalence(False, tau=1e-4, T=1.0, tol=1e-6),
              check_lambda_equivalence(True, tau=1e-4, T=1.0, tol=1e-6)]
    assert report(2, all(c.passed for c in checks), _describe(checks))


def test_criterion_3_backprop_limit():
    checks = [check_backprop_oracle(1e-7)] + check_backprop_limit((1e2, 1e3, 1e4), 1e-2)
    assert report(3, all(c.passed for c in checks), _describe(checks))


def test_criterion_4_adjoint_identity():
    check = check_adjoint(T=2.0, tau=1e-3, tol=1e-4)
    assert report(4, check.passed, _describe([check]))


def test_criterion_5_forward_blowup_vs_sweep():
    checks = check_blowup(seeds=range(10), limit=1e6)
    assert report(5, all(c.passed for c in checks), _describe(checks))


def _reversed_sign_summary():
    """Flip check under the x' = a x - s p sign: how many grid problems lose x, worst residual otherwise."""
    vanished, worst = 0, 0.0
    for prob in grid_problems():
        try:
            worst = max(worst, simultaneous_flip_check(1.0, 0.0, prob, tau=1e-4, T=20.0,
                                                       convention="reversed").residual)
        except DivisionNearZero:
            vanished += 1
    return f"with x' = a x - s p: x vanished on {vanished}/{len(grid_problems())} problems, " \
           f"worst residual elsewhere {worst:.3e}"


def test_criterion_6_riccati():
    checks = check_riccati_grid(tol_root=1e-6, tol_flip=1e-5, limit=1e6)
    detail = _describe(checks) + f"; grid points {len(grid_problems())}" \
        + "; " + _reversed_sign_summary()
    assert report(6, all(c.passed for c in checks), detail)


def test_criterion_7_lq_gain():
    a, b, q, r, T, tau = 0.0, 1.0, 1.0, 1.0, 5.0, 1e-2
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        log = bvp_sweep(LQControlProblem(a, b, q, r), [1.0], IntegratorConfig(tau=tau, T=T),
                        tol=1e-6, max_sweeps=500)
    gain = -log["v"][0] / log["x"][0]
    oracle, _ = discrete_riccati_gain(LQProblem(a, b, q, r, T), tau)
    rel = abs(gain - oracle) / abs(oracle)
    passed = rel <= 0.02 and log.meta["converged"]
    assert report(7, passed, f"sweep gain {gain:.6f}, dynamic-programming gain {oracle:.6f}, "
                             f"relative error {rel:.3e} (<= 2e-02), sweeps {log.meta['sweeps']}")


def test_criterion_8_bibo():
    check = check_bibo(runs=50, tau=1e-2, margin=0.05)
    assert report(8, check.passed, "worst excess over |x(0)| + B " + _describe([check]))


def test_criterion_9_accuracy_weight_ordering():
    low, high = load_config("sinusoid_q100"), load_config("sinusoid_q1000")
    assert (low.hamiltonian.r, low.hamiltonian.r_w, low.graph.n_hidden) == (0.1, 1.0, 5)
    rows = []
    for seed in range(5):
        e100 = run_experiment(low.replace("seed", seed))[1]["mean_abs_error"]
        e1000 = run_experiment(high.replace("seed", seed))[1]["mean_abs_error"]
        rows.append((seed, e100, e1000))
    wins = sum(e1000 < e100 for _, e100, e1000 in rows)
    detail = f"q=1000 below q=100 on {wins}/5 seeds; " + ", ".join(
        f"seed {s}: {e100:.4f} vs {e1000:.4f}" for s, e100, e1000 in rows)
    assert report(9, wins == 5, detail)


def test_criterion_10_piecewise_energy_traces():
    cfg = load_config("piecewise_q100")
    log, summary = run_experiment(cfg)
    g, system, _ = build_system(cfg)
    hc = system.cfg
    nh, nw = g.n_hidden, g.n_weights
    Z = log.array(column_labels(g))
    W, PW = Z[:, nh:nh + nw], Z[:, 2 * nh + nw:]
    t = log.t
    phi = np.exp(cfg.hamiltonian.theta * t)
    wdot = -PW / (cfg.hamiltonian.r * hc.c * phi[:, None])
    e = log["x6"] - log["target"]
    recomputed = (cfg.hamiltonian.q * e ** 2 / 2 + cfg.hamiltonian.r_w * np.sum(W ** 2, axis=1) / 2
                  + cfg.hamiltonian.r * np.sum(wdot ** 2, axis=1) / 2) * phi
    lag = log["lagrangian"]
    dev = float(np.max(np.abs(recomputed - lag) / np.maximum(1.0, np.abs(lag))))
    finite = bool(np.all(np.isfinite(lag)) and np.all(np.isfinite(log["hamiltonian"])))
    reached = not summary["blowup"] and abs(summary["t_end"] - cfg.integrator.T) < 1e-9
    passed = reached and finite and dev <= 1e-10
    assert report(10, passed, f"horizon {summary['t_end']:.3f} of {cfg.integrator.T}, "
                              f"backward rows {summary['backward_rows']}, traces finite {finite}, "
                              f"Lagrangian recomputation deviation {dev:.3e} (<= 1e-10)")


def test_criterion_11_determinism(tmp_path):
    digests = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        proc = subprocess.run([sys.executable, "-m", "hamlearn.cli", "run", "--config", "piecewise_q100",
                               "--out", str(out), "--seed", "7"], capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        digests.append(((out / "trajectory.csv").read_bytes(), json.loads((out / "summary.json").read_text())))
    same = digests[0][0] == digests[1][0]
    assert report(11, same and digests[0][1] == digests[1][1],
                  f"two runs of piecewise_q100 seed 7: trajectory.csv identical {same} "
                  f"({len(digests[0][0])} bytes)")


if __name__ == "__main__":
    import tempfile
    from pathlib import Path

    tests = [(int(name.split("_")[2]), fn) for name, fn in globals().items() if name.startswith("test_criterion_")]
    for _, fn in sorted(tests, key=lambda item: item[0]):
        try:
            fn(Path(tempfile.mkdtemp())) if "tmp_path" in fn.__code__.co_varnames else fn()
        except AssertionError:
            pass
