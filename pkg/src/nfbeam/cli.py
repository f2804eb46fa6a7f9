"""Command-line front end: ``solve``, ``sweep``, ``edof``, ``validate``.

Exit codes: 0 success, 1 solver warning (or failed validation), 2 usage or
configuration error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .config import ConfigError, ExperimentConfig, load_config
from .harness import (
    SOLVERS,
    SWEEP_AXES,
    edof_grid,
    run_sweep,
    run_trial,
    run_validation,
    write_edof,
    write_results,
    write_trace,
)

EXIT_OK = 0
EXIT_WARN = 1
EXIT_USAGE = 2
EXIT_IO = 3


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="path to a key = value config file")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--out", help="output file path")
    common.add_argument("--trials", type=int, help="override the config trial count")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog="nfbeam",
        description="Near-field hybrid beamforming experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", parents=[common], help="solve one scenario")
    solve.add_argument("--solver", choices=SOLVERS, default="wmmse-ts")
    solve.add_argument("--mode", choices=("near", "far"), default="near")
    solve.add_argument("--fixed-streams", type=int, default=None,
                       help="streams per user for the fixed baseline")
    solve.add_argument("--trace-out", default=None,
                       help="also write the per-iteration trace CSV here")
    solve.add_argument("--timing", action="store_true",
                       help="include wall-clock timing (non-deterministic)")

    sweep = sub.add_parser("sweep", parents=[common], help="run a parameter sweep")
    sweep.add_argument("--axis", choices=SWEEP_AXES, required=True)
    sweep.add_argument("--grid", required=True, help="comma-separated sweep values")
    sweep.add_argument("--solver", choices=SOLVERS, default="wmmse-ts")
    sweep.add_argument("--mode", choices=("near", "far"), default="near")
    sweep.add_argument("--fixed-streams", type=int, default=None)
    sweep.add_argument("--timing", action="store_true")

    edof_cmd = sub.add_parser("edof", parents=[common],
                              help="near/far effective-DoF distance grid")
    edof_cmd.add_argument("--grid", default=None,
                          help="comma-separated distances in meters (default 2..20)")

    sub.add_parser("validate", parents=[common], help="run the invariant spot checks")
    return parser


def _load_config(args) -> ExperimentConfig:
    if args.config:
        try:
            cfg = load_config(args.config)
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {args.config}") from exc
    else:
        cfg = ExperimentConfig()
    updates = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.trials is not None:
        updates["trials"] = args.trials
    if updates:
        cfg = cfg.replace(**updates)
    return cfg


def _parse_grid(text: str) -> list[float]:
    try:
        values = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad grid value in {text!r}") from exc
    if not values:
        raise ConfigError("empty sweep grid")
    return values


def _print_record(record, k_users: int, solver: str, mode: str, timing: bool) -> None:
    def fmt(value):
        if value is None:
            return ""
        if isinstance(value, (int, np.integer)):
            return str(int(value))
        return repr(float(value))

    print(f"solver={solver}")
    print(f"mode={mode}")
    print(f"seed={record.seed}")
    print(f"sum_rate_bps_hz={fmt(record.sum_rate)}")
    for k in range(k_users):
        print(f"rate_u{k + 1}={fmt(record.rates[k])}")
    print(f"t_s={record.t_s}")
    print(f"hpc_w={fmt(record.hpc_w)}")
    print(f"tx_power_w={fmt(record.tx_power_w)}")
    print(f"objective={fmt(record.objective)}")
    print(f"iters_inner={record.iters_inner}")
    print(f"iters_outer={fmt(record.iters_outer)}")
    print(f"penalty_final={fmt(record.penalty_final)}")
    if timing:
        print(f"wall_ms={fmt(record.wall_ms)}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args)
        if args.command == "solve":
            record = run_trial(
                cfg,
                cfg.seed,
                solver=args.solver,
                mode=args.mode,
                fixed_streams=args.fixed_streams,
            )
            _print_record(record, cfg.k_users, args.solver, args.mode, args.timing)
            if args.trace_out:
                write_trace(record, args.trace_out)
            if args.out:
                write_results([record], args.out, cfg.k_users, include_timing=args.timing)
            if record.warning:
                print(f"warning: {record.warning}", file=sys.stderr)
                return EXIT_WARN
            return EXIT_OK

        if args.command == "sweep":
            grid = _parse_grid(args.grid)
            records, aggregates = run_sweep(
                cfg,
                args.axis,
                grid,
                solver=args.solver,
                mode=args.mode,
                fixed_streams=args.fixed_streams,
            )
            out = args.out or "results.csv"
            write_results(records, out, cfg.k_users, include_timing=args.timing)
            for agg in aggregates:
                print(
                    f"{agg['sweep_axis']}={agg['sweep_value']!r} "
                    f"mean_sum_rate={agg['mean_sum_rate']!r} "
                    f"mean_hpc_w={agg['mean_hpc_w']!r} "
                    f"mean_objective={agg['mean_objective']!r}"
                )
            warned = [r for r in records if r.warning]
            if warned:
                print(f"warning: {len(warned)} of {len(records)} trials flagged",
                      file=sys.stderr)
                return EXIT_WARN
            return EXIT_OK

        if args.command == "edof":
            if args.grid:
                grid = _parse_grid(args.grid)
            else:
                grid = [float(v) for v in np.arange(2.0, 20.0 + 1e-9, 1.0)]
            rows = edof_grid(cfg, grid)
            out = args.out or "edof.csv"
            write_edof(rows, out)
            return EXIT_OK

        # validate
        checks = run_validation(cfg, cfg.seed)
        failed = 0
        for name, ok, detail in checks:
            status = "PASS" if ok else "FAIL"
            print(f"{status} {name}: {detail}")
            failed += 0 if ok else 1
        return EXIT_OK if failed == 0 else EXIT_WARN
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
