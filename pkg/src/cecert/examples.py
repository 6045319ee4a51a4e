"""The four benchmark model families with their additional features and
distorted sampling measures, exposed as ready-made StructuralModel instances."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from cecert.model import DistortionSpec, StructuralModel
from cecert.sampling import (
    CorrelationFactor,
    RngStream,
    cholesky_factor,
    correlated_normal_batch,
    norm_quantile,
    standard_normal_batch,
)


def _gaussian_x_sampler(d: int):
    """X sampler for models driven by a d-dimensional standard normal vector.

    Supports the identity measure, a per-coordinate Gaussian shift/scale, and
    point concentration (uniform on a shrinking ball around the center, which
    keeps a fixed draw count per row so chunked generation is reproducible).
    """

    def sampler(stream: RngStream, n: int, distortion: DistortionSpec) -> np.ndarray:
        if distortion.kind == "none":
            return standard_normal_batch(stream, n * d).reshape(n, d)
        if distortion.kind == "gaussian_shift_scale":
            mean = np.broadcast_to(distortion.mean, (d,))
            stdev = np.broadcast_to(distortion.stdev, (d,))
            w = standard_normal_batch(stream, n * d).reshape(n, d)
            return mean + stdev * w
        if distortion.kind == "point_concentration":
            center = distortion.center
            if center.shape != (d,):
                raise ValueError(f"concentration center must have length {d}")
            w = standard_normal_batch(stream, n * d).reshape(n, d)
            u = stream.uniform_open(n)
            norms = np.maximum(np.linalg.norm(w, axis=1), 1e-300)
            radii = distortion.radius_scale * u ** (1.0 / d)
            return center + w * (radii / norms)[:, None]
        raise ValueError(f"distortion kind {distortion.kind!r} is not supported by this model")

    return sampler


def _standard_normal_v_sampler(k: int):
    def sampler(stream: RngStream, n: int) -> np.ndarray:
        return standard_normal_batch(stream, n * k).reshape(n, k)

    return sampler


def make_polynomial_example() -> StructuralModel:
    """Four-dimensional model Y = X1 + X2^2 + X3 X4 + V with standard normal
    inputs and a known conditional mean."""

    def h(x, v):
        return x[..., 0] + x[..., 1] ** 2 + x[..., 2] * x[..., 3] + v[..., 0]

    def fbar(x):
        return x[..., 0] + x[..., 1] ** 2 + x[..., 2] * x[..., 3]

    return StructuralModel(
        d=4, k=1,
        x_sampler=_gaussian_x_sampler(4),
        v_sampler=_standard_normal_v_sampler(1),
        h=h, oracle_fbar=fbar, name="poly4",
    )


def make_nonpolynomial_example() -> StructuralModel:
    """Five-dimensional model
    Y = 5 log(5 + (X1+V1)^2 X2^2 + V2^2) tanh((X3+V3)(X4+V4)(X5+V5)^2)
    with the noise-suppressed value h(x, 0) as additional feature."""

    def h(x, v):
        x1, x2 = x[..., 0] + v[..., 0], x[..., 1]
        inner = 5.0 + x1 * x1 * x2 * x2 + v[..., 1] ** 2
        prod = (x[..., 2] + v[..., 2]) * (x[..., 3] + v[..., 3]) * (x[..., 4] + v[..., 4]) ** 2
        return 5.0 * np.log(inner) * np.tanh(prod)

    def feature(x):
        return h(x, np.zeros_like(x))

    return StructuralModel(
        d=5, k=5,
        x_sampler=_gaussian_x_sampler(5),
        v_sampler=_standard_normal_v_sampler(5),
        h=h, additional_feature=feature, name="nonpoly5",
    )


@dataclass(frozen=True)
class MarketParams:
    """Zero-rate lognormal market with equicorrelated drivers."""

    d: int
    s0: float = 10.0
    sigma: Optional[tuple[float, ...]] = None  # default (10 + i/2)% per asset
    rho: float = 0.30
    t: float = 1.0 / 52.0
    maturity: float = 1.0 / 3.0
    strike: float = 16.3

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("asset count must be positive")
        if not (0.0 < self.t < self.maturity):
            raise ValueError("need 0 < t < maturity")
        if self.d > 1 and not (-1.0 / (self.d - 1) < self.rho < 1.0):
            raise ValueError("equicorrelation matrix is not positive definite")
        if self.sigma is None:
            sigma = tuple((10.0 + 0.5 * (i + 1)) / 100.0 for i in range(self.d))
            object.__setattr__(self, "sigma", sigma)
        elif len(self.sigma) != self.d or any(s <= 0.0 for s in self.sigma):
            raise ValueError("need one strictly positive volatility per asset")

    def correlation_matrix(self) -> np.ndarray:
        R = np.full((self.d, self.d), self.rho)
        np.fill_diagonal(R, 1.0)
        return R

    def correlation_factor(self) -> CorrelationFactor:
        return cholesky_factor(self.correlation_matrix())


def tilt_shift(params: MarketParams, level: float) -> np.ndarray:
    """The driver shift b = Q^T v / ||Q^T v||_2 * q_level for v = (1, ..., 1)."""
    q = norm_quantile(level)
    qt_v = params.correlation_factor().lower.T @ np.ones(params.d)
    return qt_v / np.linalg.norm(qt_v) * q


def in_tail_region(params: MarketParams, W: np.ndarray, level: float) -> np.ndarray:
    """Membership of driver rows in the upper-tail region
    {w : v^T Q w / ||v^T Q||_2 >= q_level}."""
    qt_v = params.correlation_factor().lower.T @ np.ones(params.d)
    proj = np.asarray(W) @ qt_v / np.linalg.norm(qt_v)
    return proj >= norm_quantile(level)


def tilt_distortion(params: MarketParams, level: float) -> DistortionSpec:
    """Tail tilt of the Gaussian driver; the shifted driver lies in the
    original upper (1 - level) tail region with probability 1/2."""
    return DistortionSpec.tail_tilt(level)


def make_market_model(params: MarketParams, payoff: str) -> StructuralModel:
    """X = asset prices at the conditioning time, V = log-return noise to
    maturity, h = discounted payoff of the chosen option."""
    if payoff not in ("max_call", "binary"):
        raise ValueError(f"payoff must be 'max_call' or 'binary', got {payoff!r}")
    d = params.d
    factor = params.correlation_factor()
    sigma = np.asarray(params.sigma)
    sqrt_t = np.sqrt(params.t)
    tau = params.maturity - params.t
    strike = params.strike

    def x_sampler(stream: RngStream, n: int, distortion: DistortionSpec) -> np.ndarray:
        if distortion.kind == "none":
            shift = None
        elif distortion.kind == "tail_tilt":
            shift = tilt_shift(params, distortion.level)
        else:
            raise ValueError(
                f"distortion kind {distortion.kind!r} is not supported by market models")
        g = correlated_normal_batch(stream, factor, n, shift=shift)
        return params.s0 * np.exp(sigma * sqrt_t * g - 0.5 * sigma**2 * params.t)

    def v_sampler(stream: RngStream, n: int) -> np.ndarray:
        g = correlated_normal_batch(stream, factor, n)
        return sigma * np.sqrt(tau) * g

    def h(x, v):
        s_T = x * np.exp(v - 0.5 * sigma**2 * tau)
        best = np.max(s_T, axis=-1)
        if payoff == "max_call":
            return np.maximum(best - strike, 0.0)
        return 10.0 * (best >= strike).astype(np.float64)

    def feature(x):
        return np.max(x, axis=-1)

    return StructuralModel(
        d=d, k=d,
        x_sampler=x_sampler, v_sampler=v_sampler, h=h,
        additional_feature=feature, name=f"market_{payoff}",
    )


EXAMPLE_IDS = ("poly4", "nonpoly5", "maxcall", "binary")


def get_example(example_id: str, market_d: int = 10) -> StructuralModel:
    """Resolve a registry identifier to a model instance."""
    if example_id == "poly4":
        return make_polynomial_example()
    if example_id == "nonpoly5":
        return make_nonpolynomial_example()
    if example_id == "maxcall":
        return make_market_model(MarketParams(d=market_d), "max_call")
    if example_id == "binary":
        return make_market_model(MarketParams(d=market_d), "binary")
    raise KeyError(f"unknown example {example_id!r}; known: {', '.join(EXAMPLE_IDS)}")


def describe_examples(market_d: int = 10) -> list[tuple[str, str]]:
    return [
        ("poly4", "4-dim polynomial model with known conditional mean, 1-dim noise"),
        ("nonpoly5", "5-dim non-polynomial model, 5-dim noise, additional feature h(x, 0)"),
        ("maxcall", f"max-call option on {market_d} correlated lognormal assets (default d = {market_d})"),
        ("binary", f"binary option on {market_d} correlated lognormal assets (default d = {market_d})"),
    ]
