"""Least-squares approximation of conditional expectations E[Y | X] for
structural models Y = h(X, V), certified with Monte Carlo estimates and
confidence bounds of the minimal mean squared distance and the
L2-approximation error."""

from cecert.sampling import RngStream, norm_quantile, cholesky_factor
from cecert.model import DistortionSpec, StructuralModel, TripleBatch, sample_pairs, sample_triples
from cecert.estimators import EstimateReport, MomentAccumulator, accumulate, certify, finalize, merge
from cecert.examples import (
    MarketParams,
    make_market_model,
    make_nonpolynomial_example,
    make_polynomial_example,
    tilt_distortion,
)

__all__ = [
    "RngStream",
    "norm_quantile",
    "cholesky_factor",
    "DistortionSpec",
    "StructuralModel",
    "TripleBatch",
    "sample_pairs",
    "sample_triples",
    "EstimateReport",
    "MomentAccumulator",
    "accumulate",
    "merge",
    "finalize",
    "certify",
    "MarketParams",
    "make_polynomial_example",
    "make_nonpolynomial_example",
    "make_market_model",
    "tilt_distortion",
]
