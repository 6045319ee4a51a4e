#!/usr/bin/env python3
"""Run one benchmark example with the standard regressor ladder and print the
certification table.

Usage:
    python scripts/run_benchmark.py poly4 --m 100000 --n 1000000 --nn-steps 20000
"""

import argparse
import sys

from cecert.experiment import (
    ExperimentConfig,
    RegressorConfig,
    in_the_money_fraction,
    rows_to_pretty,
    run,
    write_outputs,
)


def regressor_ladder(example_id: str, nn_steps: int, with_nn: bool):
    has_feature = example_id != "poly4"
    rows = [RegressorConfig("linear"), RegressorConfig("poly2")]
    if has_feature:
        rows.insert(1, RegressorConfig("linear", include_additional=True))
        rows.append(RegressorConfig("poly2", include_additional=True))
    if with_nn:
        for activation in ("tanh", "relu", "lse"):
            rows.append(RegressorConfig("nn", activation=activation, steps=nn_steps))
            if has_feature:
                rows.append(RegressorConfig("nn", activation=activation,
                                            include_additional=True, steps=nn_steps))
    return tuple(rows)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("example", choices=["poly4", "nonpoly5", "maxcall", "binary"])
    parser.add_argument("--m", type=int, default=100_000, help="training samples")
    parser.add_argument("--n", type=int, default=1_000_000, help="certification samples")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--market-d", type=int, default=10)
    parser.add_argument("--nn-steps", type=int, default=20_000)
    parser.add_argument("--skip-nn", action="store_true",
                        help="only run the linear and polynomial regressors")
    parser.add_argument("--output", help="output file stem (.csv and .json appended)")
    args = parser.parse_args(argv)

    config = ExperimentConfig(
        example_id=args.example,
        regressors=regressor_ladder(args.example, args.nn_steps, not args.skip_nn),
        m=args.m, n=args.n, batch_size=min(100_000, args.n),
        seed=args.seed, market_d=args.market_d)
    rows = run(config)
    sys.stdout.write(rows_to_pretty(rows, config.ci_level))
    itm = in_the_money_fraction(config)
    if itm is not None:
        print(f"empirical in-the-money fraction: {itm:.4f}")
    if args.output:
        csv_path, json_path = write_outputs(rows, args.output)
        print(f"wrote {csv_path} and {json_path}")
    return 2 if any(row.error for row in rows) else 0


if __name__ == "__main__":
    sys.exit(main())
