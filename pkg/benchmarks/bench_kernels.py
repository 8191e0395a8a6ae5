"""Compare the compiled and numpy kernels on the tracking workload.

Usage: python benchmarks/bench_kernels.py [--steps N] [--repeat R]
"""
import argparse
import time

import numpy as np

from hamlearn import backend
from hamlearn.config import load_config
from hamlearn.experiments import build_system, initial_state


def workload(steps):
    cfg = load_config("sinusoid_q100")
    g, system, target = build_system(cfg)
    hc = system.cfg
    tau = cfg.integrator.tau
    U = system.inputs.sample(tau, steps)
    Y = target(np.arange(steps + 1) * tau)[:, None]
    x0, w0, px0, pw0 = initial_state(cfg, g)
    args = (g.src, g.dst, g.d, 0, hc.speed.values, hc.c, hc.m, hc.k, hc.theta, hc.loss.q,
            np.asarray(g.output_hidden, dtype=np.intp), U, Y, tau, steps, 10, True, 0, 0.0,
            x0, w0, px0, pw0, 1e12)
    rng = np.random.default_rng(0)
    rhs_args = (g.src, g.dst, g.d, 0, hc.speed.values, hc.c, hc.m, hc.k, 1.0,
                rng.normal(size=g.n_weights), rng.normal(size=g.n_hidden), np.ones(1),
                rng.normal(size=g.n_hidden), rng.normal(size=g.n_weights), np.zeros(g.n_hidden), True)
    return args, rhs_args


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--steps", type=int, default=20000)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    run_args, rhs_args = workload(args.steps)
    impls = {"python": backend.python_kernels}
    if backend.compiled_kernels is not None:
        impls["cython"] = backend.compiled_kernels
    else:
        print("compiled kernels unavailable; timing the numpy fallback only")
    results = {}
    for name, mod in impls.items():
        run_t = best_of(lambda: mod.run_network_euler(*run_args), args.repeat)
        rhs_t = best_of(lambda: [mod.network_rhs(*rhs_args) for _ in range(1000)], args.repeat) / 1000
        results[name] = (run_t, rhs_t)
        print(f"{name:>7}: run_network_euler {args.steps} steps {run_t * 1e3:9.2f} ms"
              f" | network_rhs {rhs_t * 1e6:8.2f} us/call")
    if len(results) == 2:
        (pr, ph), (cr, ch) = results["python"], results["cython"]
        print(f"speed-up: integration loop {pr / cr:.1f}x, single right-hand side {ph / ch:.1f}x")
        a = backend.python_kernels.run_network_euler(*run_args)[0]
        b = backend.compiled_kernels.run_network_euler(*run_args)[0]
        print(f"max |difference| between backends: {np.max(np.abs(a - b)):.3e}")


if __name__ == "__main__":
    main()
