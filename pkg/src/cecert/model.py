"""Structural models Y = h(X, V) with V independent of X, distorted sampling
measures for X, and generation of the (X, Y, Z) triples driving the estimators."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from cecert.sampling import RngStream


class EvaluationError(RuntimeError):
    """Raised when a model function produces a non-finite value."""


@dataclass(frozen=True)
class DistortionSpec:
    """Data description of the sampling measure for X.

    ``kind = "none"`` reproduces the model's original X distribution through
    the same code path. The built-in kinds cover a Gaussian shift/scale of the
    driving noise, a tail tilt of the Gaussian driver, and a measure
    concentrating around a point (shrinking-support distortion). Custom
    measures require a custom ``x_sampler`` on the model; absolute continuity
    with respect to the original X distribution is the caller's responsibility
    and cannot be checked here.
    """

    kind: str = "none"
    mean: Optional[np.ndarray] = None
    stdev: Optional[np.ndarray] = None
    level: Optional[float] = None
    center: Optional[np.ndarray] = None
    radius_scale: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("none", "gaussian_shift_scale", "tail_tilt", "point_concentration"):
            raise ValueError(f"unknown distortion kind {self.kind!r}")
        if self.kind == "gaussian_shift_scale":
            if self.mean is None or self.stdev is None:
                raise ValueError("gaussian_shift_scale needs mean and stdev")
            if np.any(np.asarray(self.stdev) <= 0.0):
                raise ValueError("gaussian_shift_scale stdevs must be strictly positive")
        if self.kind == "tail_tilt" and not (0.0 < self.level < 1.0):
            raise ValueError("tail_tilt level must lie in (0, 1)")
        if self.kind == "point_concentration":
            if self.center is None or self.radius_scale is None or self.radius_scale <= 0.0:
                raise ValueError("point_concentration needs a center and a positive radius scale")

    @classmethod
    def none(cls) -> "DistortionSpec":
        return cls(kind="none")

    @classmethod
    def gaussian_shift_scale(cls, mean, stdev) -> "DistortionSpec":
        return cls(kind="gaussian_shift_scale",
                   mean=np.atleast_1d(np.asarray(mean, dtype=np.float64)),
                   stdev=np.atleast_1d(np.asarray(stdev, dtype=np.float64)))

    @classmethod
    def tail_tilt(cls, level: float) -> "DistortionSpec":
        return cls(kind="tail_tilt", level=float(level))

    @classmethod
    def point_concentration(cls, center, radius_scale: float) -> "DistortionSpec":
        return cls(kind="point_concentration",
                   center=np.asarray(center, dtype=np.float64),
                   radius_scale=float(radius_scale))


@dataclass(frozen=True)
class StructuralModel:
    """The triple (X sampler, V sampler, h) realizing Y = h(X, V).

    ``h`` and ``additional_feature`` are written against the trailing axis
    (``x[..., i]``), so one callable serves both a single row and an (n, d)
    batch. ``oracle_fbar``, when present, is the true conditional mean; this is
    checked statistically (the certification error vanishes for it).
    """

    d: int
    k: int
    x_sampler: Callable[[RngStream, int, DistortionSpec], np.ndarray]
    v_sampler: Callable[[RngStream, int], np.ndarray]
    h: Callable[[np.ndarray, np.ndarray], np.ndarray]
    oracle_fbar: Optional[Callable[[np.ndarray], np.ndarray]] = None
    additional_feature: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = ""


@dataclass(frozen=True)
class TripleBatch:
    """Aligned arrays (X^n, Y^n = h(X^n, V^n), Z^n = h(X^n, Vtilde^n)).

    Y and Z share the same X rows but use independent noise draws, so the
    marginal law of Z equals the marginal law of Y.
    """

    X: np.ndarray
    Y: np.ndarray
    Z: np.ndarray

    @property
    def n(self) -> int:
        return self.Y.shape[0]


def _check_finite(values: np.ndarray, what: str) -> np.ndarray:
    bad = ~np.isfinite(values)
    if np.any(bad):
        row = int(np.argmax(bad))
        raise EvaluationError(f"{what} produced a non-finite value at row {row}")
    return values


def eval_h(model: StructuralModel, X: np.ndarray, V: np.ndarray) -> np.ndarray:
    """Evaluate h row-wise over aligned batches, aborting on non-finite output."""
    try:
        out = np.asarray(model.h(X, V), dtype=np.float64)
        vectorized_ok = out.shape == (X.shape[0],)
    except (TypeError, ValueError):
        vectorized_ok = False
    if not vectorized_ok:
        out = np.array([model.h(X[i], V[i]) for i in range(X.shape[0])], dtype=np.float64)
    return _check_finite(out, "h")


def sample_pairs(
    model: StructuralModel,
    distortion: DistortionSpec,
    n: int,
    streams: tuple[RngStream, RngStream],
) -> tuple[np.ndarray, np.ndarray]:
    """Training pairs (X, Y) with X drawn under the distorted measure."""
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    x_stream, v_stream = streams
    X = model.x_sampler(x_stream, n, distortion)
    V = model.v_sampler(v_stream, n)
    Y = eval_h(model, X, V)
    return X, Y


def sample_triples(
    model: StructuralModel,
    distortion: DistortionSpec,
    n: int,
    streams: tuple[RngStream, RngStream, RngStream],
) -> TripleBatch:
    """A TripleBatch with the conditionally independent copy Z = h(X, Vtilde)."""
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    x_stream, v_stream, vtilde_stream = streams
    X = model.x_sampler(x_stream, n, distortion)
    V = model.v_sampler(v_stream, n)
    Vt = model.v_sampler(vtilde_stream, n)
    Y = eval_h(model, X, V)
    Z = eval_h(model, X, Vt)
    return TripleBatch(X=X, Y=Y, Z=Z)


def eval_feature(model: StructuralModel, X: np.ndarray) -> np.ndarray:
    """The additional feature a(X) per row."""
    if model.additional_feature is None:
        raise ValueError(f"model {model.name!r} has no additional feature configured")
    out = np.asarray(model.additional_feature(X), dtype=np.float64)
    if out.shape != (X.shape[0],):
        raise ValueError(f"additional feature returned shape {out.shape} for {X.shape[0]} rows")
    return _check_finite(out, "additional feature")
