"""Command-line front end: explain, benchmark, oracle-check, and sweep.

Exit codes: 0 success, 2 configuration, 3 I/O or data schema, 4 black-box or
wire-protocol failure, 5 convergence failure (inner divergence or an
oracle-check deviation).
"""
from __future__ import annotations

import argparse
import json
import sys

from .errors import (
    BlackBoxError,
    ConfigError,
    EmptyDatasetError,
    InnerDivergenceError,
    SchemaError,
)
from .runner import RunConfig, load_config, run_benchmark, run_explain, run_oracle_check, run_sweep

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_BLACKBOX = 4
EXIT_CONVERGENCE = 5


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="linex",
        description="Game-theoretic local explanations with LIME/S-LIME baselines",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--seed", type=int, help="override the run seed")
        p.add_argument("--out", help="output directory")
        p.add_argument("--workers", type=int, help="worker pool size (0 = auto)")

    p_explain = sub.add_parser("explain", help="write explanations.jsonl for the test split")
    common(p_explain)
    p_explain.add_argument("--method", choices=["linex", "lime", "slime"])
    p_explain.add_argument("--tau", type=float, help="kernel width factor")

    p_bench = sub.add_parser("benchmark", help="metrics.csv + report.json over the tau grid")
    common(p_bench)
    p_bench.add_argument("--method", choices=["linex", "lime", "slime"],
                         help="restrict the benchmark to a single method")

    p_oracle = sub.add_parser("oracle-check",
                              help="compare the played game against the closed-form equilibria")
    p_oracle.add_argument("--dims", type=int, default=3)
    p_oracle.add_argument("--trials", type=int, default=200)
    p_oracle.add_argument("--seed", type=int, default=7)
    p_oracle.add_argument("--k", type=int, nargs="+", default=[2, 3, 4, 5])
    p_oracle.add_argument("--gamma", type=float, default=1.0)
    p_oracle.add_argument("--mag-max", type=float, default=0.9,
                          help="largest per-coordinate optimum magnitude, as a multiple of gamma")
    p_oracle.add_argument("--tol", type=float, default=1e-3)
    p_oracle.add_argument("--out", help="optional path for the JSON report")

    p_sweep = sub.add_parser("sweep", help="long-form ablation CSV along one axis")
    common(p_sweep)
    p_sweep.add_argument("--axis", choices=["n", "k", "tau"], required=True)
    return parser


def _load_run_config(args) -> RunConfig:
    overrides = {
        "seed": getattr(args, "seed", None),
        "out": getattr(args, "out", None),
        "workers": getattr(args, "workers", None),
        "method": getattr(args, "method", None),
        "tau": getattr(args, "tau", None),
    }
    if getattr(args, "method", None) and args.command == "benchmark":
        overrides["methods"] = [args.method]
    if not args.config:
        raise ConfigError("--config is required for this subcommand")
    return load_config(args.config, overrides)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "oracle-check":
            report = run_oracle_check(args.dims, args.trials, args.seed,
                                      ks=tuple(args.k), gamma=args.gamma,
                                      mag_high=args.mag_max, tol=args.tol)
            print(json.dumps(report, sort_keys=True, indent=2))
            if args.out:
                with open(args.out, "w", encoding="utf-8") as fh:
                    json.dump(report, fh, sort_keys=True, indent=2)
            if report.get("warning"):
                print(f"warning: {report['warning']}", file=sys.stderr)
            return EXIT_OK if report["passed"] else EXIT_CONVERGENCE

        cfg = _load_run_config(args)
        if args.command == "explain":
            rows = run_explain(cfg)
            print(f"wrote {len(rows)} explanations to {cfg.out}/explanations.jsonl")
        elif args.command == "benchmark":
            report = run_benchmark(cfg)
            print(f"wrote {cfg.out}/metrics.csv and {cfg.out}/report.json "
                  f"({report['header']['runtime_seconds']}s)")
        elif args.command == "sweep":
            rows = run_sweep(cfg, args.axis)
            print(f"wrote {len(rows)} rows to {cfg.out}/sweep.csv")
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, SchemaError, EmptyDatasetError, json.JSONDecodeError) as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except InnerDivergenceError as exc:
        print(f"convergence error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except BlackBoxError as exc:
        print(f"black-box error: {exc}", file=sys.stderr)
        return EXIT_BLACKBOX


if __name__ == "__main__":
    sys.exit(main())
