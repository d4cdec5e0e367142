"""Command-line driver: ``run``, ``sweep``, ``validate`` and ``bench``.

Exit codes: 0 success, 1 configuration error, 2 validation failure.
"""
from __future__ import annotations

import argparse
import contextlib
import math
import os
import sys
import time

import numpy as np

from .experiment import ConfigError, ExperimentConfig, Trajectory, run_experiment

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_VALIDATION = 2

# flag name -> config field
_OVERRIDES = {
    "n": "n_qubits",
    "depth": "depth",
    "p": "meas_rate",
    "seed": "seed",
    "trajectories": "n_trajectories",
    "boundary": "boundary",
    "angle": "initial_angle",
    "orders": "sre_orders",
    "t_rate": "t_gate_rate",
    "record_every": "record_every",
    "out": "output_path",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _add_config_flags(p: argparse.ArgumentParser, sweep: bool = False) -> None:
    p.add_argument("--config", help="key = value config file; flags override it")
    p.add_argument("--n", help="qubits" + (" (comma list allowed)" if sweep else ""))
    p.add_argument("--depth")
    p.add_argument("--p", help="measurement rate" + (" or start:stop:step" if sweep else ""))
    p.add_argument("--seed")
    p.add_argument("--trajectories")
    p.add_argument("--boundary", choices=["ring", "open"])
    p.add_argument("--angle", help="initial angle in radians")
    p.add_argument("--orders", help="comma-separated SRE orders")
    p.add_argument("--t-rate", dest="t_rate", help="T-gate density per layer")
    p.add_argument("--record-every", dest="record_every")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--log-iterations", dest="log_iterations", metavar="PATH",
                   help="write one JSON line per ICCR step")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="iccr", description="ICCR monitored-circuit experiments")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run one configuration")
    _add_config_flags(run)
    run.add_argument("--out", help="CSV output path (default: stdout)")

    sweep = sub.add_parser("sweep", help="grid over p and/or N, one CSV per point")
    _add_config_flags(sweep, sweep=True)
    sweep.add_argument("--out-dir", dest="out_dir", default=".")

    val = sub.add_parser("validate", help="dense-oracle checks on small registers")
    val.add_argument("--max-n", dest="max_n", type=int, default=6)
    val.add_argument("--quick", action="store_true", help="fewer samples per check")

    bench = sub.add_parser("bench", help="wall time versus N")
    bench.add_argument("--n", default="125,250,500,1000", help="comma list of sizes")
    bench.add_argument("--depth", type=int, default=50)
    bench.add_argument("--p", type=float, default=0.1)
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--repeats", type=int, default=3, help="best of this many runs")
    return parser


def _overrides(args, skip=()) -> dict:
    values = {}
    for flag, key in _OVERRIDES.items():
        if flag in skip:
            continue
        v = getattr(args, flag, None)
        if v is not None:
            values[key] = v
    return values


def load_config(args, skip=()) -> ExperimentConfig:
    values = _overrides(args, skip)
    if args.config:
        return ExperimentConfig.from_file(args.config, values)
    return ExperimentConfig.from_mapping(values)


def parse_range(text: str) -> list[float]:
    """``a:b:step`` (inclusive of ``b`` up to rounding) or a comma list."""
    try:
        if ":" in text:
            a, b, step = (float(v) for v in text.split(":"))
            if step <= 0 or b < a:
                raise ConfigError(f"bad range {text!r}")
            count = int(math.floor((b - a) / step + 1e-9)) + 1
            return [round(a + k * step, 12) for k in range(count)]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad range {text!r}") from exc


@contextlib.contextmanager
def _log_sink(path):
    if path is None:
        yield None
        return
    try:
        fh = open(path, "w", encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot open log file {path}: {exc}") from exc
    with fh:
        yield fh


def cmd_run(args) -> int:
    cfg = load_config(args)
    with _log_sink(args.log_iterations) as sink:
        table = run_experiment(cfg, workers=args.workers, log_sink=sink)
    if not cfg.output_path:
        sys.stdout.write(table.to_csv())
    return EXIT_OK


def cmd_sweep(args) -> int:
    base = load_config(args, skip=("p", "n"))
    ps = parse_range(args.p) if args.p else [base.meas_rate]
    ns = [int(v) for v in parse_range(args.n)] if args.n else [base.n_qubits]
    os.makedirs(args.out_dir, exist_ok=True)
    with _log_sink(args.log_iterations) as sink:
        for n in ns:
            for p in ps:
                path = os.path.join(args.out_dir, f"iccr_n{n}_p{p:.4f}.csv")
                cfg = base.replace(n_qubits=n, meas_rate=p, output_path=path)
                run_experiment(cfg, workers=args.workers, log_sink=sink)
                print(path)
    return EXIT_OK


def cmd_validate(args) -> int:
    from .validate import run_validation

    if args.max_n < 2 or args.max_n > 12:
        raise ConfigError("--max-n must lie in [2, 12]")
    results = run_validation(args.max_n, quick=args.quick)
    for r in results:
        print(r.line())
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_VALIDATION


def time_trajectory(n: int, depth: int, p: float, seed: int = 0) -> float:
    """Wall-clock seconds for one trajectory without observable recording."""
    traj = Trajectory(ExperimentConfig(n_qubits=n, depth=depth, meas_rate=p, seed=seed))
    start = time.perf_counter()
    for _ in range(depth):
        traj.advance()
    return time.perf_counter() - start


def scaling_slope(ns, times) -> float:
    """Least-squares slope of log(time) against log(N)."""
    return float(np.polyfit(np.log(ns), np.log(times), 1)[0])


def cmd_bench(args) -> int:
    ns = [int(v) for v in parse_range(args.n)]
    if len(ns) < 2 or min(ns) < 2:
        raise ConfigError("bench needs at least two sizes >= 2")
    time_trajectory(min(ns), 2, args.p, args.seed)  # warm-up: group tables, imports
    times = []
    print("n,depth,p,seconds")
    for n in ns:
        t = min(time_trajectory(n, args.depth, args.p, args.seed) for _ in range(max(1, args.repeats)))
        times.append(t)
        print(f"{n},{args.depth},{args.p:g},{t:.4f}", flush=True)
    print(f"# log-log slope: {scaling_slope(ns, times):.3f}")
    return EXIT_OK


_COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "validate": cmd_validate, "bench": cmd_bench}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
