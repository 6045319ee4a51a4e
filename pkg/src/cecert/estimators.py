"""Streaming Monte Carlo estimation of the upper bound U, the conditional norm
C, the minimal mean squared distance D and the certification error F, with
sample variances, confidence intervals and the one-sided error bound."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from cecert.model import DistortionSpec, StructuralModel, TripleBatch, sample_triples
from cecert.sampling import RngStream, norm_quantile

STATISTICS = ("U", "C", "D", "F")


class InsufficientDataError(ValueError):
    """Raised when a report is requested from fewer than two samples."""


@dataclass(frozen=True)
class MomentAccumulator:
    """Mergeable count/mean/M2 state for the four per-sample statistics.

    Merging two accumulators equals accumulating the concatenated data up to
    floating-point reassociation. Variances use the (N - 1) denominator.
    """

    n: int
    mean: np.ndarray  # length 4, ordered as STATISTICS
    m2: np.ndarray    # length 4, running sums of squared deviations

    @classmethod
    def empty(cls) -> "MomentAccumulator":
        return cls(n=0, mean=np.zeros(4), m2=np.zeros(4))


@dataclass(frozen=True)
class EstimateReport:
    """Point estimates, standard errors, confidence intervals and error bounds.

    ``rel_err`` is the signed relative error sign(F_N) sqrt(|F_N| / C_N),
    negative exactly when the raw error estimate F_N is negative due to Monte
    Carlo noise. ``f_upper`` is the one-sided confidence upper bound for the
    squared error, and ``rel_err_upper`` its square root as a fraction of
    sqrt(C_N). Both relative quantities are None when C_N <= 0.
    """

    u_n: float
    c_n: float
    d_n: float
    f_n: float
    stderr_u: float
    stderr_c: float
    stderr_d: float
    stderr_f: float
    ci_level: float
    ci_u: tuple[float, float]
    ci_c: tuple[float, float]
    ci_d: tuple[float, float]
    f_upper: float
    rel_err: Optional[float]
    rel_err_upper: Optional[float]
    n_total: int


def _per_sample_terms(batch: TripleBatch, fhat_values: np.ndarray) -> np.ndarray:
    y, z = batch.Y, batch.Z
    r = y - fhat_values
    u = r * r
    c = y * z
    d = y * (y - z)
    # Algebraically identical to Y Z + fhat (fhat - Y - Z); this arrangement is
    # exact (bit-level) on U - F = (Y - fhat)(Y - Z) when Y == Z.
    f = u - r * (y - z)
    return np.stack([u, c, d, f])


def accumulate(batch: TripleBatch, fhat_values: np.ndarray) -> MomentAccumulator:
    """One-pass moments of the four per-sample statistics for a batch."""
    fhat_values = np.asarray(fhat_values, dtype=np.float64)
    if fhat_values.shape != batch.Y.shape:
        raise ValueError(
            f"fhat values have shape {fhat_values.shape}, batch has {batch.Y.shape}")
    if not np.all(np.isfinite(fhat_values)):
        raise ValueError("fhat values must all be finite")
    terms = _per_sample_terms(batch, fhat_values)
    mean = terms.mean(axis=1)
    m2 = ((terms - mean[:, None]) ** 2).sum(axis=1)
    return MomentAccumulator(n=batch.n, mean=mean, m2=m2)


def merge(a: MomentAccumulator, b: MomentAccumulator) -> MomentAccumulator:
    """Combine two accumulators as if their data had been concatenated."""
    if a.n == 0:
        return b
    if b.n == 0:
        return a
    n = a.n + b.n
    delta = b.mean - a.mean
    frac_b = b.n / n
    mean = a.mean + delta * frac_b
    m2 = a.m2 + b.m2 + delta * delta * (a.n * frac_b)
    return MomentAccumulator(n=n, mean=mean, m2=m2)


def finalize(acc: MomentAccumulator, ci_level: float = 0.95) -> EstimateReport:
    """Turn accumulated moments into the full report at the given coverage.

    Two-sided intervals for U, C, D and a one-sided upper bound for F, all at
    ``ci_level`` coverage (users specify coverage, not a tail parameter).
    """
    if acc.n < 2:
        raise InsufficientDataError(f"need at least 2 samples, have {acc.n}")
    if not (0.0 < ci_level < 1.0):
        raise ValueError("ci_level must lie in (0, 1)")
    n = acc.n
    stderr = np.sqrt(acc.m2 / (n - 1) / n)
    u_n, c_n, d_n, f_n = (float(v) for v in acc.mean)
    se_u, se_c, se_d, se_f = (float(v) for v in stderr)
    q_two = norm_quantile(0.5 + ci_level / 2.0)
    q_one = norm_quantile(ci_level)
    f_upper = f_n + q_one * se_f
    if c_n > 0.0:
        rel_err = math.copysign(math.sqrt(abs(f_n) / c_n), f_n)
        rel_err_upper = math.copysign(math.sqrt(abs(f_upper) / c_n), f_upper)
    else:
        rel_err = None
        rel_err_upper = None
    return EstimateReport(
        u_n=u_n, c_n=c_n, d_n=d_n, f_n=f_n,
        stderr_u=se_u, stderr_c=se_c, stderr_d=se_d, stderr_f=se_f,
        ci_level=ci_level,
        ci_u=(u_n - q_two * se_u, u_n + q_two * se_u),
        ci_c=(c_n - q_two * se_c, c_n + q_two * se_c),
        ci_d=(d_n - q_two * se_d, d_n + q_two * se_d),
        f_upper=f_upper,
        rel_err=rel_err,
        rel_err_upper=rel_err_upper,
        n_total=n,
    )


def certify(
    model: StructuralModel,
    distortion: DistortionSpec,
    fhat,
    n_total: int,
    batch_size: int,
    streams: tuple[RngStream, RngStream, RngStream],
    ci_level: float = 0.95,
) -> EstimateReport:
    """Stream ``n_total`` fresh triples through the estimators in batches.

    ``fhat`` is any object with a ``predict(X) -> values`` method. Memory stays
    bounded by ``batch_size``; the result is independent of the batch split up
    to floating-point reassociation.
    """
    if not (2 <= batch_size <= n_total):
        raise ValueError(f"need n_total >= batch_size >= 2, got {n_total}, {batch_size}")
    acc = MomentAccumulator.empty()
    remaining = n_total
    while remaining > 0:
        m = min(batch_size, remaining)
        batch = sample_triples(model, distortion, m, streams)
        acc = merge(acc, accumulate(batch, fhat.predict(batch.X)))
        remaining -= m
    return finalize(acc, ci_level)
