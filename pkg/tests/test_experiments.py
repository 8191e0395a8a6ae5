import json

import numpy as np
import pytest

from hamlearn.config import load_config
from hamlearn.experiments import (
    TargetSignal,
    build_system,
    column_labels,
    initial_state,
    run_experiment,
    sweep,
    write_outputs,
)
from hamlearn.integrator import IntegratorConfig, NumericalBlowup, integrate
from hamlearn.policy import make_policy


def short(cfg, T=0.05):
    return cfg.replace_many({"integrator.T": T, "integrator.record_stride": 5})


def test_sinusoid_and_piecewise_targets():
    s = TargetSignal.sinusoid(0.5, 1.0)
    assert s(0.25) == pytest.approx(0.5)
    pw = TargetSignal.piecewise([{"duration": 1.0, "amplitude": 1.0, "frequency": 0.5},
                                 {"duration": 1.0, "value": 0.8}])
    assert pw(0.0) == pytest.approx(1.0)
    assert pw(1.5) == pytest.approx(0.8)
    assert pw.end == pytest.approx(2.0)
    default = TargetSignal.default_piecewise(3.0)
    grid = np.linspace(0, 3.0, 301)
    assert np.all(np.isfinite(default(grid)))
    assert default.end == pytest.approx(3.0)


def test_initialisation_is_seeded():
    cfg = load_config("sinusoid_q100")
    g, _, _ = build_system(cfg)
    x0, w0, px0, pw0 = initial_state(cfg, g)
    assert not x0.any() and not px0.any() and not pw0.any()
    assert np.all(np.abs(w0) <= cfg.init_weight_scale)
    assert np.array_equal(w0, initial_state(cfg, g)[1])
    assert not np.array_equal(w0, initial_state(cfg.replace("seed", 1), g)[1])


def test_null_task_gives_zero_traces():
    cfg = short(load_config("sinusoid_q100")).replace_many(
        {"init_weight_scale": 0.0, "hamiltonian.r_w": 0.0, "target.amplitude": 0.0})
    log, summary = run_experiment(cfg)
    for name in ("err", "loss", "reg", "kinetic", "lagrangian", "hamiltonian"):
        assert np.all(log[name] == 0), name
    assert summary["mean_abs_error"] == 0.0


def test_log_columns_and_summary():
    cfg = short(load_config("sinusoid_q100"))
    log, summary = run_experiment(cfg)
    g, _, _ = build_system(cfg)
    for name in column_labels(g) + ["s", "tbar", "target", "err", "loss", "lagrangian", "hamiltonian"]:
        assert name in log.columns
    assert summary["rows"] == len(log) == IntegratorConfig(tau=1e-4, T=0.05, record_stride=5).rows
    assert summary["blowup"] is False
    assert summary["mean_abs_error"] == pytest.approx(np.mean(np.abs(log["err"])))


def test_compiled_euler_path_matches_generic_integrator():
    cfg = short(load_config("piecewise_q100"), T=0.02)
    log, _ = run_experiment(cfg)
    g, system, _ = build_system(cfg)
    ic = cfg.integrator
    ref = integrate(system.phase_rhs(flipped=True), system.pack(*initial_state(cfg, g)),
                    IntegratorConfig(tau=ic.tau, T=ic.T, record_stride=ic.record_stride),
                    make_policy(cfg.policy.kind, cfg.policy.track_radius), column_labels(g))
    a, b = log.array(column_labels(g)), ref.states
    assert np.max(np.abs(a - b)) <= 1e-9 * max(1.0, np.max(np.abs(b)))


def test_rk4_scheme_runs():
    cfg = short(load_config("sinusoid_q100"), T=0.01).replace("integrator.scheme", "rk4")
    log, summary = run_experiment(cfg)
    assert np.all(np.isfinite(log["hamiltonian"])) and summary["steps"] == 100


def test_blowup_propagates_with_partial_outputs(tmp_path):
    cfg = load_config("sinusoid_q100").replace_many({"integrator.blowup": 1.0, "integrator.T": 0.5})
    with pytest.raises(NumericalBlowup) as info:
        run_experiment(cfg)
    exc = info.value
    assert exc.summary["blowup"] is True
    assert "hamiltonian" in exc.log.columns
    paths = write_outputs(tmp_path, cfg, exc.log, exc.summary)
    assert json.loads(paths["summary"].read_text())["blowup"] is True


def test_write_outputs_echoes_resolved_config(tmp_path):
    cfg = short(load_config("sinusoid_q100"))
    log, summary = run_experiment(cfg)
    paths = write_outputs(tmp_path, cfg, log, summary)
    assert paths["config_echo"].read_text() == cfg.echo()
    assert paths["trajectory"].read_text().startswith("t,x2,")


def test_heavy_ball_loss_decreases_on_sinusoid_task():
    cfg = load_config("sinusoid_q1000")
    assert cfg.dynamics.speed == 1000.0 and cfg.hamiltonian.theta > 0
    for seed in range(5):
        log, _ = run_experiment(cfg.replace("seed", seed))
        loss = log["loss"]
        quarter = len(loss) // 4
        assert loss[-quarter:].mean() < loss[:quarter].mean(), seed


def test_track_ball_keeps_phase_within_margin():
    radius = 1e6
    cfg = load_config("sinusoid_q100").replace_many(
        {"policy.kind": "track_ball", "policy.track_radius": radius, "integrator.record_stride": 1,
         "integrator.T": 0.5})
    log, summary = run_experiment(cfg)
    g, system, _ = build_system(cfg)
    Z = log.array(column_labels(g))
    rhs = system.phase_rhs(flipped=True)
    max_rhs2 = max(float(np.sum(rhs(z, t) ** 2)) for z, t in zip(Z, log.t))
    assert np.max(np.sum(Z ** 2, axis=1)) <= radius + cfg.integrator.tau * max_rhs2
    assert summary["backward_rows"] > 0
    # the sign flips at a step exactly when the phase point is outside the ball
    outside = np.sum(Z ** 2, axis=1) > radius
    flips = log["s"][1:] != log["s"][:-1]
    assert np.array_equal(flips, outside[1:])


def test_sweep_orders_rows_by_value_and_records_failures():
    cfg = short(load_config("sinusoid_q100"))
    rows = sweep(cfg, "q", [100.0, 1000.0])
    assert [r["value"] for r in rows] == [100.0, 1000.0] and all(r["ok"] for r in rows)
    bad = sweep(cfg.replace("integrator.blowup", 1e-3), "q", [100.0])
    assert bad[0]["ok"] is False and "blow-up" in bad[0]["error"]
    assert sweep(cfg, "q", []) == []
    with pytest.raises(KeyError):
        sweep(cfg, "momentum", [1.0])


def test_periodic_flip_frequency_sweep_runs():
    cfg = short(load_config("sinusoid_q100")).replace_many(
        {"policy.kind": "periodic", "policy.flip_frequency": 1.0})
    rows = sweep(cfg, "flip_frequency", [0.1, 1.0, 10.0])
    assert all(r["ok"] for r in rows)
    assert all(np.isfinite(r["mean_abs_error"]) for r in rows)
