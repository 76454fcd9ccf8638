"""Command-line front end: run / compare / benchmark / presets.

Exit codes: 0 success (per-point divergence is still success, recorded in
the outputs), 2 configuration/schema error, 1 total run failure.
"""

from __future__ import annotations

import argparse
import sys

from .config import ConfigError, load_config, load_preset, parse_config, preset_names


def _add_common(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("-c", "--config", help="path to a YAML run configuration")
    src.add_argument("--preset", help="name of a shipped preset configuration")
    p.add_argument("-o", "--output", help="output directory override")
    p.add_argument("--workers", type=int, help="parallelism override")
    p.add_argument("--rel-tol", type=float, help="integrator rel_tol override")
    p.add_argument("--abs-tol", type=float, help="integrator abs_tol override")
    p.add_argument("--no-plots", action="store_true", help="skip figure rendering")


def _load(args, default_label: str):
    if args.preset:
        data = load_preset(args.preset)
        label = args.preset
    else:
        data = load_config(args.config)
        label = default_label
    return data, label


def _apply_overrides(cfg, args):
    if args.output:
        cfg.output = args.output
    if args.workers is not None:
        cfg.workers = args.workers
    if args.rel_tol is not None:
        cfg.rel_tol = args.rel_tol
    if args.abs_tol is not None:
        cfg.abs_tol = args.abs_tol
    if args.no_plots:
        cfg.plots = False
    return cfg


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qce",
        description="Cluster-expansion simulator for driven-dissipative "
        "bosonic models, with mean-field and Fock-space reference solvers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="single simulation or sweep")
    _add_common(p_run)

    p_cmp = sub.add_parser("compare", help="method comparison on a shared grid")
    _add_common(p_cmp)

    p_bench = sub.add_parser("benchmark", help="cluster-count and timing scaling")
    p_bench.add_argument("-o", "--output", default="runs/benchmark")
    p_bench.add_argument("--max-modes", type=int, default=10)
    p_bench.add_argument("--orders", default="2,4,6", help="comma-separated QCE orders")
    p_bench.add_argument(
        "--E-grid", dest="E_grid", default="2,4,6,10,15,20",
        help="comma-separated drive amplitudes",
    )
    p_bench.add_argument(
        "--fst-truncations", default="10,100",
        help="per-mode dimensions for the FST equation-count rows",
    )
    p_bench.add_argument("--g", type=float, default=0.2)
    p_bench.add_argument("--horizon", type=float, default=10.0)
    p_bench.add_argument(
        "--fst-max-E", type=float, default=6.0,
        help="largest E for which the FST timing is attempted",
    )
    p_bench.add_argument("--budget-seconds", type=float, default=1800.0)
    p_bench.add_argument("--no-plots", action="store_true")

    p_presets = sub.add_parser("presets", help="list or show shipped presets")
    p_presets.add_argument("--show", help="print one preset configuration")

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "presets":
            if args.show:
                import yaml

                print(yaml.safe_dump(load_preset(args.show), sort_keys=False), end="")
            else:
                for name in preset_names():
                    print(name)
            return 0

        if args.command == "benchmark":
            from .harness import execute_benchmark

            written = execute_benchmark(
                output=args.output,
                max_modes=args.max_modes,
                orders=[int(x) for x in args.orders.split(",")],
                E_grid=[float(x) for x in args.E_grid.split(",")],
                fst_truncations=[int(x) for x in args.fst_truncations.split(",")],
                g=args.g,
                horizon=args.horizon,
                fst_max_E=args.fst_max_E,
                budget_seconds=args.budget_seconds,
                plots=not args.no_plots,
            )
            for path in written:
                print(path)
            return 0

        data, label = _load(args, "run")
        if isinstance(data, dict) and "benchmark" in data:
            from .harness import execute_benchmark

            bench = dict(data["benchmark"])
            if args.output:
                bench["output"] = args.output
            bench.setdefault("output", f"runs/{label}")
            if args.no_plots:
                bench["plots"] = False
            for path in execute_benchmark(**bench):
                print(path)
            return 0
        cfg = _apply_overrides(parse_config(data, label_default=label), args)
        if args.command == "compare":
            from .harness import execute_compare

            written = execute_compare(cfg)
        else:
            from .harness import execute_run

            written = execute_run(cfg)
        for path in written:
            print(path)
        return 0
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
