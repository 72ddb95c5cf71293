"""Squared-MMD estimators: complete U-statistic, linear-time, incomplete,
and the per-feature multivariate statistic with its covariance."""
from __future__ import annotations

import numpy as np

from .core import DataShapeError, Design, MultiStat, derive_rng
from .kernels import KernelSpec, _apply, gram_matrix, kernel_eval


def mmd_h(x, xp, y, yp, spec: KernelSpec) -> float:
    """Pairwise U-statistic kernel K(x,x') + K(y,y') - K(x',y) - K(x,y')."""
    return (
        kernel_eval(spec, x, xp)
        + kernel_eval(spec, y, yp)
        - kernel_eval(spec, xp, y)
        - kernel_eval(spec, x, yp)
    )


def _check_two_sample(X: np.ndarray, Y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if X.shape != Y.shape:
        raise DataShapeError(f"samples must have equal shape, got {X.shape} vs {Y.shape}")
    return X, Y


def _offdiag_sum(M: np.ndarray) -> float:
    return float(M.sum() - np.trace(M))


def mmd_u(X: np.ndarray, Y: np.ndarray, spec: KernelSpec) -> float:
    """Unbiased complete U-statistic (1/(n(n-1))) sum_{i != j} h(z_i, z_j)."""
    X, Y = _check_two_sample(X, Y)
    n = X.shape[0]
    if n < 2:
        raise DataShapeError("need n >= 2")
    kxx = gram_matrix(spec, X, X)
    kyy = gram_matrix(spec, Y, Y)
    kxy = gram_matrix(spec, X, Y)
    return (_offdiag_sum(kxx) + _offdiag_sum(kyy) - 2.0 * _offdiag_sum(kxy)) / (n * (n - 1))


def mmd_linear(X: np.ndarray, Y: np.ndarray, spec: KernelSpec) -> float:
    """Linear-time estimator (2/n) sum_i h(z_{2i}, z_{2i-1}).

    An odd trailing observation is dropped.
    """
    X, Y = _check_two_sample(X, Y)
    n = X.shape[0]
    if n < 2:
        raise DataShapeError("need n >= 2")
    m = n // 2
    a = 2 * np.arange(m) + 1
    b = 2 * np.arange(m)
    vals = _pair_h(X[a], Y[a], X[b], Y[b], spec)
    return float(vals.mean())


def _pair_h(Xi, Yi, Xj, Yj, spec: KernelSpec) -> np.ndarray:
    """Row-wise h values for paired blocks of observations."""

    def k(A, B):
        diff = A - B
        return _apply(spec, np.einsum("ij,ij->i", diff, diff))

    return k(Xi, Xj) + k(Yi, Yj) - k(Xj, Yi) - k(Xi, Yj)


def mmd_incomplete(X: np.ndarray, Y: np.ndarray, spec: KernelSpec, design: Design) -> float:
    """Incomplete estimator (1/|D|) sum_{(i,j) in D} h(z_i, z_j)."""
    X, Y = _check_two_sample(X, Y)
    if design.arity != 2:
        raise DataShapeError("pair design required")
    if design.tuples.max() >= X.shape[0]:
        raise DataShapeError("design indices exceed sample size")
    i = design.tuples[:, 0]
    j = design.tuples[:, 1]
    return float(_pair_h(X[i], Y[i], X[j], Y[j], spec).mean())


def _pair_h_matrix(X, Y, specs, design: Design) -> np.ndarray:
    """(l, d) matrix of per-feature h values, one row per design tuple."""
    i = design.tuples[:, 0]
    j = design.tuples[:, 1]
    cols = []
    for f, spec in enumerate(specs):
        xi, xj = X[i, f], X[j, f]
        yi, yj = Y[i, f], Y[j, f]
        cols.append(
            _apply(spec, (xi - xj) ** 2)
            + _apply(spec, (yi - yj) ** 2)
            - _apply(spec, (xj - yi) ** 2)
            - _apply(spec, (xi - yj) ** 2)
        )
    return np.column_stack(cols)


def _h_covariance(H: np.ndarray, ddof: int) -> np.ndarray:
    centered = H - H.mean(axis=0)
    sigma = centered.T @ centered / (H.shape[0] - ddof)
    return (sigma + sigma.T) / 2.0


def mmd_multistat(
    X: np.ndarray,
    Y: np.ndarray,
    specs: list[KernelSpec],
    r: float = 1.0,
    rng: np.random.Generator | None = None,
    feature_names: list[str] | None = None,
) -> MultiStat:
    """Per-feature scaled statistic sqrt(l) * MMD^2_inc with its covariance.

    A single pair design of size l = round(r * n) is shared across features;
    sigma is the sample covariance (divisor l - 1) of the per-tuple vectors
    of feature-wise h values.
    """
    from .designs import sample_pair_design

    X, Y = _check_two_sample(X, Y)
    n, d = X.shape
    if len(specs) != d:
        raise DataShapeError("need one kernel spec per feature")
    l = int(round(r * n))
    if l < 2:
        raise DataShapeError("design size round(r * n) must be >= 2")
    if rng is None:
        rng = derive_rng(0)
    design = sample_pair_design(n, l, rng)
    H = _pair_h_matrix(X, Y, specs, design)
    t = np.sqrt(l) * H.mean(axis=0)
    sigma = _h_covariance(H, ddof=1)
    return MultiStat(t=t, sigma=sigma, l=l, feature_names=list(feature_names or []))
