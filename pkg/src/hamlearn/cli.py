"""Command-line interface: validate, run, sweep, lq, verify.

Exit codes: 0 success, 1 configuration or usage error, 2 numerical failure.
Data and output paths go to stdout; diagnostics go to stderr.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import backend
from .config import ConfigError, load_config, with_seed
from .integrator import NumericalBlowup, write_json
from .lq import (
    DegenerateProblem,
    DivisionNearZero,
    LQProblem,
    algebraic_riccati_roots,
    discrete_riccati_gain,
    riccati_flow,
    simultaneous_flip_check,
    stable_root,
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2
SWEEP_FIELDS = ("value", "ok", "mean_abs_error", "final_abs_error", "blowup", "error")

log = logging.getLogger("hamlearn")


def _print(text: str):
    sys.stdout.write(text if text.endswith("\n") else text + "\n")
    sys.stdout.flush()


def _load(path, seed=None):
    """Parse a config and check that its graph and speed constants can be built."""
    from .experiments import build_network, build_speed

    cfg = with_seed(load_config(path), seed)
    try:
        g = build_network(cfg)
        build_speed(cfg, g.n_hidden)
    except (ValueError, IndexError) as exc:
        raise ConfigError(str(path), [(None, "graph", str(exc))]) from None
    return cfg


def cmd_validate(args) -> int:
    cfg = _load(args.path)
    log.info("valid: %s (seed %d)", args.path, cfg.seed)
    return EXIT_OK


def cmd_run(args) -> int:
    from .experiments import run_experiment, write_outputs

    cfg = _load(args.config, args.seed)
    out = Path(args.out)
    try:
        traj, summary = run_experiment(cfg)
    except NumericalBlowup as exc:
        log.error("%s", exc)
        paths = write_outputs(out, cfg, exc.log, getattr(exc, "summary", {"blowup": True}))
        for p in paths.values():
            _print(str(p))
        return EXIT_NUMERIC
    paths = write_outputs(out, cfg, traj, summary)
    for key in ("trajectory", "summary", "config_echo"):
        _print(str(paths[key]))
    log.info("mean |error| %.6g, final |error| %.6g, backend %s",
             summary["mean_abs_error"], summary["final_abs_error"], backend.NAME)
    return EXIT_OK


def _parse_values(text: str):
    out = []
    for item in (v.strip() for v in text.split(",")):
        if not item:
            continue
        try:
            num = float(item)
            out.append(int(num) if num.is_integer() and "." not in item and "e" not in item.lower() else num)
        except ValueError:
            out.append(item)
    return out


def cmd_sweep(args) -> int:
    from .experiments import sweep

    cfg = _load(args.config, args.seed)
    try:
        rows = sweep(cfg, args.axis, _parse_values(args.values))
    except KeyError as exc:
        raise ConfigError(args.config, [(None, args.axis, f"not an addressable parameter ({exc})")]) from None
    writer = csv.DictWriter(sys.stdout, fieldnames=SWEEP_FIELDS, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: row.get(k, "") for k in SWEEP_FIELDS})
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_json({"axis": args.axis, "rows": rows}, out / "sweep.json")
        (out / "config_echo.yaml").write_text(cfg.echo())
        log.info("wrote %s", out / "sweep.json")
    for row in rows:
        if not row.get("ok"):
            log.warning("cell %s failed: %s", row["value"], row.get("error"))
    return EXIT_OK


def cmd_lq(args) -> int:
    try:
        prob = LQProblem(args.a, args.b, args.q, args.r, args.T)
        roots = algebraic_riccati_roots(prob)
    except (ValueError, DegenerateProblem) as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    theta_star = stable_root(prob)
    try:
        report = simultaneous_flip_check(args.x0, args.p0, prob, tau=args.tau, T=args.T,
                                         record_stride=args.record_stride)
    except DivisionNearZero as exc:
        log.error("%s", exc)
        return EXIT_NUMERIC
    _, flow = riccati_flow(prob, args.p0 / args.x0, args.T, args.tau, flipped=True)
    try:
        reversed_res = simultaneous_flip_check(args.x0, args.p0, prob, tau=args.tau, T=args.T,
                                               record_stride=args.record_stride,
                                               convention="reversed").residual
    except DivisionNearZero:
        reversed_res = float("nan")
    gain, _ = discrete_riccati_gain(prob, 1e-3, args.T)
    verdict = {
        "a": prob.a, "b": prob.b, "q": prob.q, "r": prob.r, "s": prob.s_coef,
        "roots": [{"theta": rt, "stable": st} for rt, st in roots],
        "stable_root": theta_star,
        "feedback_gain": -(prob.b / prob.r) * theta_star,
        "discrete_oracle_gain": -gain,
        "riccati_residual": abs(float(flow[-1]) - theta_star),
        "flip_residual": report.residual,
        "flip_residual_reversed_sign": reversed_res,
        "theta_final": float(report.theta[-1]),
    }
    verdict["ok"] = bool(verdict["riccati_residual"] < 1e-6 and report.residual < 1e-5)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    table = np.column_stack((report.t, report.x, report.p, report.theta))
    with open(out / "lq.csv", "w") as fh:
        fh.write("t,x,p,theta\n")
        for row in table:
            fh.write(",".join("%.17g" % v for v in row) + "\n")
    write_json(verdict, out / "verdict.json")
    _print(json.dumps(verdict, sort_keys=True))
    log.info("wrote %s and %s", out / "lq.csv", out / "verdict.json")
    return EXIT_OK if verdict["ok"] else EXIT_NUMERIC


def cmd_verify(args) -> int:
    from .verify import run_suite

    checks = run_suite(args.suite)
    for c in checks:
        _print(c.line())
    return EXIT_OK if all(c.passed for c in checks) else EXIT_NUMERIC


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with the configuration code rather than argparse's 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    from .verify import SUITES

    parser = _Parser(prog="hamlearn", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("validate", help="check a config file or preset")
    p.add_argument("path", help="config file or preset name")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("run", help="run one experiment")
    p.add_argument("--config", required=True, help="config file or preset name")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run an experiment over values of one parameter")
    p.add_argument("--config", required=True)
    p.add_argument("--axis", required=True, help="parameter name, e.g. q or hamiltonian.theta")
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None, help="optional directory for sweep.json")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("lq", help="scalar linear-quadratic Riccati study")
    for name, default in (("a", 0.0), ("b", 1.0), ("q", 1.0), ("r", 1.0)):
        p.add_argument(f"--{name}", type=float, default=default)
    p.add_argument("--T", type=float, default=20.0)
    p.add_argument("--tau", type=float, default=1e-4)
    p.add_argument("--x0", type=float, default=1.0)
    p.add_argument("--p0", type=float, default=0.0)
    p.add_argument("--record-stride", type=int, default=100)
    p.add_argument("--out", default="lq_out")
    p.set_defaults(func=cmd_lq)

    p = sub.add_parser("verify", help="run an oracle comparison suite")
    p.add_argument("suite", choices=SUITES)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except ConfigError as exc:
        for line in exc.lines():
            sys.stderr.write(line + "\n")
        return EXIT_CONFIG
    except NumericalBlowup as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return EXIT_NUMERIC
    except (FloatingPointError, ArithmeticError) as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return EXIT_NUMERIC
    except (ValueError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
