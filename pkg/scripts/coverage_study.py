#!/usr/bin/env python3
"""Empirical coverage of the confidence intervals for D, C and the one-sided
bound for F, using the polynomial example where all three are known exactly
(D = 1, C = 5, F = 0 for the oracle predictor).

Usage:
    python scripts/coverage_study.py --runs 200 --n 100000
"""

import argparse

from cecert.estimators import certify
from cecert.examples import make_polynomial_example
from cecert.experiment import OracleRegressor, certification_streams
from cecert.model import DistortionSpec


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--runs", type=int, default=100)
    parser.add_argument("--n", type=int, default=100_000)
    parser.add_argument("--ci-level", type=float, default=0.95)
    args = parser.parse_args()

    model = make_polynomial_example()
    fhat = OracleRegressor(model)
    hits_d = hits_c = hits_f = 0
    for seed in range(args.runs):
        report = certify(model, DistortionSpec.none(), fhat, args.n, args.n,
                         certification_streams(seed), ci_level=args.ci_level)
        hits_d += report.ci_d[0] < 1.0 < report.ci_d[1]
        hits_c += report.ci_c[0] < 5.0 < report.ci_c[1]
        hits_f += 0.0 <= report.f_upper
    print(f"{args.runs} runs at N = {args.n}, nominal coverage {args.ci_level:.0%}")
    print(f"D in CI:        {hits_d / args.runs:.1%}")
    print(f"C in CI:        {hits_c / args.runs:.1%}")
    print(f"F <= upper CB:  {hits_f / args.runs:.1%}")


if __name__ == "__main__":
    main()
