"""Linear and second-order polynomial least squares: feature construction,
normal equations via Cholesky, and the truncated-SVD pseudoinverse fallback."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

# The Cholesky path is refused above this condition estimate of A^T A and the
# caller falls back to the truncated SVD.
CONDITION_THRESHOLD = 1e10


class IllConditionedError(np.linalg.LinAlgError):
    """Signals that the normal equations are too ill-conditioned for Cholesky."""


@dataclass(frozen=True)
class FeatureSpec:
    """Design-matrix layout: intercept, x_1..x_d, then x_i x_j for i <= j in
    lexicographic order (degree 2 only), then the additional feature a(x)."""

    degree: int
    d: int
    include_additional: bool = False

    def __post_init__(self):
        if self.degree not in (1, 2):
            raise ValueError(f"degree must be 1 or 2, got {self.degree}")
        if self.d < 1:
            raise ValueError(f"input dimension must be positive, got {self.d}")

    @property
    def n_columns(self) -> int:
        p = 1 + self.d
        if self.degree == 2:
            p += self.d * (self.d + 1) // 2
        if self.include_additional:
            p += 1
        return p


@dataclass(frozen=True)
class LinearModelFit:
    beta: np.ndarray
    spec: FeatureSpec
    solver_used: str  # "cholesky" or "truncated_svd"
    cutoff_c: Optional[float] = None
    singular_values: Optional[np.ndarray] = None
    fit_seconds: float = 0.0


def build_design(X: np.ndarray, spec: FeatureSpec, a_values: np.ndarray | None = None) -> np.ndarray:
    """Design matrix in the fixed column order."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != spec.d:
        raise ValueError(f"X must be (n, {spec.d}), got shape {X.shape}")
    if spec.include_additional != (a_values is not None):
        raise ValueError("a_values must be present exactly when include_additional is set")
    n, d = X.shape
    cols = [np.ones(n), *(X[:, i] for i in range(d))]
    if spec.degree == 2:
        for i in range(d):
            for j in range(i, d):
                cols.append(X[:, i] * X[:, j])
    if a_values is not None:
        a_values = np.asarray(a_values, dtype=np.float64)
        if a_values.shape != (n,):
            raise ValueError(f"a_values must have length {n}, got shape {a_values.shape}")
        cols.append(a_values)
    return np.column_stack(cols)


def solve_cholesky(A: np.ndarray, y: np.ndarray,
                   condition_threshold: float = CONDITION_THRESHOLD) -> np.ndarray:
    """Solve the normal equations A^T A beta = A^T y via a Cholesky factorization.

    Raises IllConditionedError when the condition estimate of A^T A exceeds the
    threshold or a non-positive pivot occurs, so the caller can fall back to
    the truncated SVD. One step of iterative refinement keeps the residual of
    the normal equations below 1e-8 relative even near the threshold.
    """
    A = np.asarray(A, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    gram = A.T @ A
    rhs = A.T @ y
    cond = np.linalg.cond(gram)
    if not np.isfinite(cond) or cond > condition_threshold:
        raise IllConditionedError(f"condition estimate {cond:.3e} exceeds {condition_threshold:.1e}")
    try:
        factor = scipy.linalg.cho_factor(gram, lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise IllConditionedError(f"non-positive pivot in Cholesky: {exc}") from exc
    beta = scipy.linalg.cho_solve(factor, rhs)
    beta += scipy.linalg.cho_solve(factor, rhs - gram @ beta)
    return beta


def default_cutoff(singular_values: np.ndarray, n: int, p: int) -> float:
    return float(np.finfo(np.float64).eps * singular_values[0] * max(n, p))


def solve_truncated_svd(A: np.ndarray, y: np.ndarray,
                        cutoff: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Minimum-norm least squares solution discarding singular values <= cutoff.

    ``cutoff = None`` selects eps * lambda_1 * max(n, p). Returns the solution
    and the singular values of A.
    """
    A = np.asarray(A, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if cutoff is not None and cutoff < 0.0:
        raise ValueError(f"cutoff must be non-negative, got {cutoff}")
    u, s, vt = np.linalg.svd(A, full_matrices=False)
    if cutoff is None:
        cutoff = default_cutoff(s, *A.shape)
    keep = s > cutoff
    if not np.any(keep):
        return np.zeros(A.shape[1]), s
    beta = vt[keep].T @ ((u[:, keep].T @ y) / s[keep])
    return beta, s


def fit(
    spec: FeatureSpec,
    X: np.ndarray,
    y: np.ndarray,
    a_values: np.ndarray | None = None,
    cutoff: float | None = None,
    solver: str = "auto",
) -> LinearModelFit:
    """Fit the least squares coefficients over the configured feature columns.

    ``solver = "auto"`` uses the truncated SVD whenever the additional feature
    is included, otherwise Cholesky with a fallback to SVD if the normal
    equations are ill-conditioned. ``"cholesky"`` and ``"svd"`` force a path.
    """
    if solver not in ("auto", "cholesky", "svd"):
        raise ValueError(f"unknown solver {solver!r}")
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1 or y.shape[0] == 0:
        raise ValueError("y must be a non-empty vector")
    start = time.perf_counter()
    A = build_design(X, spec, a_values)
    if A.shape[0] < A.shape[1]:
        import warnings
        warnings.warn(f"underdetermined fit: {A.shape[0]} rows for {A.shape[1]} columns")
    use_svd = solver == "svd" or (solver == "auto" and spec.include_additional)
    beta = None
    if not use_svd:
        try:
            beta = solve_cholesky(A, y)
            solver_used = "cholesky"
            cutoff_used, singular_values = None, None
        except IllConditionedError:
            if solver == "cholesky":
                raise
            use_svd = True
    if use_svd:
        beta, singular_values = solve_truncated_svd(A, y, cutoff)
        cutoff_used = cutoff if cutoff is not None else default_cutoff(singular_values, *A.shape)
        solver_used = "truncated_svd"
    return LinearModelFit(
        beta=beta, spec=spec, solver_used=solver_used, cutoff_c=cutoff_used,
        singular_values=singular_values, fit_seconds=time.perf_counter() - start,
    )


def predict(fitted: LinearModelFit, X: np.ndarray, a_values: np.ndarray | None = None) -> np.ndarray:
    """Evaluate the fitted function on a batch of inputs."""
    return build_design(X, fitted.spec, a_values) @ fitted.beta
