"""Command-line entry point: run configured experiments, reproduce the
benchmark tables at desk scale, and list the built-in examples."""

from __future__ import annotations

import argparse
import sys

from cecert import experiment
from cecert.experiment import ConfigError


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cecert",
        description="Fit least-squares approximations of conditional expectations "
                    "and certify them with Monte Carlo error bounds.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment described by a TOML config file")
    p_run.add_argument("--config", required=True, help="path to the TOML experiment config")

    p_rep = sub.add_parser("reproduce",
                           help="rerun one of the six benchmark tables at desk scale")
    p_rep.add_argument("--table", type=int, required=True, choices=range(1, 7))
    p_rep.add_argument("--scale-m", type=int, default=100_000, dest="scale_m",
                       help="training sample count (default 100000)")
    p_rep.add_argument("--scale-n", type=int, default=1_000_000, dest="scale_n",
                       help="certification sample count (default 1000000)")
    p_rep.add_argument("--seed", type=int, default=0)
    p_rep.add_argument("--market-d", type=int, default=10, dest="market_d",
                       help="asset count for the market tables (default 10)")
    p_rep.add_argument("--nn-steps", type=int, default=None, dest="nn_steps",
                       help="override the network training step count")
    p_rep.add_argument("--output", default=None, help="output file stem (.csv/.json appended)")

    sub.add_parser("list-examples", help="list the built-in example models")
    return parser


def _cmd_run(args) -> int:
    config = experiment.load_config(args.config)
    rows = experiment.run(config)
    if config.fmt == "csv":
        sys.stdout.write(experiment.rows_to_csv(rows))
    elif config.fmt == "json":
        sys.stdout.write(experiment.rows_to_json(rows))
    else:
        sys.stdout.write(experiment.rows_to_pretty(rows, config.ci_level))
    itm = experiment.in_the_money_fraction(config)
    if itm is not None:
        print(f"empirical in-the-money fraction: {itm:.4f}")
    if config.output_path:
        csv_path, json_path = experiment.write_outputs(rows, config.output_path)
        print(f"wrote {csv_path} and {json_path}", file=sys.stderr)
    if any(row.error for row in rows):
        return 2
    return 0


def _cmd_reproduce(args) -> int:
    config, rows = experiment.reproduce_table(
        args.table, m=args.scale_m, n=args.scale_n, seed=args.seed,
        market_d=args.market_d, nn_steps=args.nn_steps, output_path=args.output)
    sys.stdout.write(experiment.format_table_comparison(args.table, rows))
    itm = experiment.in_the_money_fraction(config)
    if itm is not None:
        print(f"empirical in-the-money fraction: {itm:.4f}")
    if config.output_path:
        csv_path, json_path = experiment.write_outputs(rows, config.output_path)
        print(f"wrote {csv_path} and {json_path}", file=sys.stderr)
    if any(row.error for row in rows):
        return 2
    return 0


def _cmd_list_examples() -> int:
    for example_id, description in experiment.list_examples():
        print(f"{example_id:<10} {description}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "reproduce":
            return _cmd_reproduce(args)
        return _cmd_list_examples()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # numerical failure
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
