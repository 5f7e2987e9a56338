"""Least-squares engine, restriction tests, ADL fits and stability tests."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy import linalg

from . import critical_values as cv
from .data import ObservationSeries
from .distributions import chi_square_survival, f_survival
from .errors import (
    CollinearityError,
    DegenerateFitError,
    DegenerateSeriesError,
    DomainError,
    InsufficientDataError,
    RestrictionError,
)

__all__ = [
    "DesignMatrix",
    "RegressionFit",
    "WaldResult",
    "AdlSpec",
    "CusumResult",
    "ols_fit",
    "schwarz_criterion",
    "wald_linear_restriction",
    "adl_fit",
    "lop_coefficient_sum_test",
    "recursive_residuals",
    "cusum_test",
    "cusum_sq_test",
    "chi_square_survival",
    "f_survival",
]

# smallest/largest singular value of the column-normalized design
COLLINEARITY_RTOL = 1e-10
DEGENERATE_SIGMA2 = 1e-12


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    names: tuple[str, ...]
    matrix: np.ndarray

    def __post_init__(self):
        names = tuple(self.names)
        X = np.asarray(self.matrix, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2 or X.shape[1] != len(names):
            raise DomainError(f"design has {X.shape} entries for {len(names)} names")
        if len(set(names)) != len(names):
            raise DomainError(f"design column names must be unique: {names}")
        X = X.copy()
        X.setflags(write=False)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "matrix", X)

    @classmethod
    def from_columns(cls, columns: Mapping[str, Sequence[float]]) -> "DesignMatrix":
        names = tuple(columns)
        if not names:
            raise DomainError("design needs at least one column")
        cols = [np.asarray(columns[n], dtype=float) for n in names]
        lengths = {c.shape[0] for c in cols}
        if len(lengths) != 1:
            raise DomainError(f"design columns differ in length: {sorted(lengths)}")
        return cls(names, np.column_stack(cols))

    @property
    def rows(self) -> int:
        return self.matrix.shape[0]

    def column(self, name: str) -> np.ndarray:
        return self.matrix[:, self.names.index(name)]


@dataclass(frozen=True, eq=False)
class RegressionFit:
    names: tuple[str, ...]
    params: np.ndarray
    covariance: np.ndarray
    residuals: np.ndarray
    sigma2: float
    ssr: float
    r2: float
    nobs: int
    k: int
    dw: float
    meta: Mapping[str, object] = field(default_factory=dict)

    @property
    def coefficients(self) -> dict[str, float]:
        return {n: float(b) for n, b in zip(self.names, self.params)}

    @property
    def bse(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.covariance), 0.0, None))

    def coef(self, name: str) -> float:
        return float(self.params[self.names.index(name)])

    def tvalue(self, name: str) -> float:
        j = self.names.index(name)
        return float(self.params[j] / np.sqrt(self.covariance[j, j]))


def _check_rank(R: np.ndarray, X: np.ndarray) -> None:
    norms = np.linalg.norm(X, axis=0)
    if np.any(norms == 0.0):
        raise CollinearityError("design contains an all-zero column")
    s = linalg.svdvals(R / norms)
    if s[-1] < COLLINEARITY_RTOL * s[0]:
        raise CollinearityError(
            f"design is rank deficient (singular value ratio {s[-1] / s[0]:.3e})"
        )


def _has_constant(X: np.ndarray) -> bool:
    return bool(np.any(np.all(X == X[:1, :], axis=0) & (X[0] != 0)))


def ols_fit(X: DesignMatrix, y) -> RegressionFit:
    """Least squares through a QR decomposition of the design."""
    y = np.asarray(y, dtype=float)
    A = X.matrix
    T, k = A.shape
    if y.shape != (T,):
        raise DomainError(f"dependent variable has shape {y.shape}, design has {T} rows")
    if T <= k:
        raise InsufficientDataError(f"{T} observations for {k} regressors")
    if k == 0:
        resid = y.copy()
        params = np.zeros(0)
        cov = np.zeros((0, 0))
    else:
        Q, R = linalg.qr(A, mode="economic")
        _check_rank(R, A)
        params = linalg.solve_triangular(R, Q.T @ y)
        resid = y - A @ params
        Rinv = linalg.solve_triangular(R, np.eye(k))
        cov_unscaled = Rinv @ Rinv.T
    ssr = float(resid @ resid)
    sigma2 = ssr / (T - k)
    if k:
        cov = sigma2 * cov_unscaled
    if k and _has_constant(A):
        tss = float(np.sum((y - y.mean()) ** 2))
    else:
        tss = float(y @ y)
    r2 = 1.0 - ssr / tss if tss > 0 else (1.0 if ssr == 0 else 0.0)
    dw = float(np.sum(np.diff(resid) ** 2) / ssr) if ssr > 0 else float("nan")
    resid.setflags(write=False)
    return RegressionFit(X.names, params, cov, resid, sigma2, ssr, r2, T, k, dw)


def schwarz_criterion(fit: RegressionFit) -> float:
    """ln(SSR/T) + k ln(T)/T; lower is better."""
    if fit.sigma2 <= DEGENERATE_SIGMA2:
        raise DegenerateFitError(f"residual variance {fit.sigma2:.3e} is degenerate")
    T = fit.nobs
    return float(np.log(fit.ssr / T) + fit.k * np.log(T) / T)


@dataclass(frozen=True)
class WaldResult:
    statistic: float
    df: int
    pvalue: float


def wald_linear_restriction(fit: RegressionFit, R, q) -> WaldResult:
    """Wald test of R b = q, referred to chi-square(rows of R)."""
    R = np.atleast_2d(np.asarray(R, dtype=float))
    q = np.atleast_1d(np.asarray(q, dtype=float))
    m, k = R.shape
    if k != fit.k:
        raise RestrictionError(f"restriction has {k} columns, fit has {fit.k} coefficients")
    if q.shape != (m,):
        raise RestrictionError(f"target vector has shape {q.shape}, expected ({m},)")
    if m > k or m < 1:
        raise RestrictionError(f"{m} restrictions on {k} coefficients")
    if np.linalg.matrix_rank(R) < m:
        raise RestrictionError("restriction matrix is not of full row rank")
    V = R @ fit.covariance @ R.T
    V = 0.5 * (V + V.T)
    d = np.sqrt(np.diag(V)) if np.all(np.diag(V) > 0) else None
    if d is None:
        raise RestrictionError("restriction variance is zero")
    C = V / np.outer(d, d)
    if np.linalg.eigvalsh(C)[0] <= 1e-12:
        raise RestrictionError("restriction covariance is singular")
    diff = R @ fit.params - q
    W = float(diff @ linalg.solve(V, diff, assume_a="pos"))
    W = max(W, 0.0)
    return WaldResult(W, m, chi_square_survival(W, m))


# --------------------------------------------------------------------------
# ADL(p, q)

@dataclass(frozen=True)
class AdlSpec:
    p: int
    q: int
    layout: Mapping[str, tuple[str, int]] = field(default_factory=dict)

    def __post_init__(self):
        if self.p < 1 or self.q < 0:
            raise DomainError(f"ADL orders need p >= 1 and q >= 0, got p={self.p}, q={self.q}")
        if not self.layout:
            lay = {f"y.L{j}": ("y", j) for j in range(1, self.p + 1)}
            lay.update({f"x.L{j}": ("x", j) for j in range(0, self.q + 1)})
            object.__setattr__(self, "layout", lay)

    @property
    def slope_names(self) -> tuple[str, ...]:
        return tuple(self.layout)


def adl_fit(y: ObservationSeries, x: ObservationSeries, spec: AdlSpec) -> RegressionFit:
    """y_t on a constant, p lags of y and lags 0..q of x."""
    if len(y) != len(x) or not np.array_equal(y.dates, x.dates):
        raise DomainError("ADL series must share one calendar")
    T = len(y)
    if T <= spec.p + spec.q + 2:
        raise InsufficientDataError(f"ADL({spec.p},{spec.q}) needs more than {spec.p + spec.q + 2} points")
    start = max(spec.p, spec.q)
    src = {"y": y.values, "x": x.values}
    cols = {"const": np.ones(T - start)}
    for name, (var, j) in spec.layout.items():
        cols[name] = src[var][start - j: T - j]
    return ols_fit(DesignMatrix.from_columns(cols), y.values[start:])


def lop_coefficient_sum_test(fit: RegressionFit, spec: AdlSpec) -> WaldResult:
    """Wald test that the own-lag and distributed-lag coefficients sum to one."""
    R = np.array([[1.0 if n in spec.layout else 0.0 for n in fit.names]])
    return wald_linear_restriction(fit, R, [1.0])


# --------------------------------------------------------------------------
# CUSUM / CUSUM of squares

@dataclass(frozen=True, eq=False)
class CusumResult:
    t: np.ndarray        # 1-based observation index of each path point
    path: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    stable: bool
    first_crossing: int | None
    recursive_residuals: np.ndarray

    @property
    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return self.lower, self.upper


def recursive_residuals(y, X=None) -> np.ndarray:
    """Standardized one-step-ahead prediction errors w_{k+1}, ..., w_T.

    With ``X=None`` the model is intercept-only.
    """
    y = np.asarray(y, dtype=float)
    T = y.shape[0]
    if X is None:
        t = np.arange(1, T)
        prev_mean = np.cumsum(y)[:-1] / t
        return (y[1:] - prev_mean) * np.sqrt(t / (t + 1.0))
    X = np.asarray(X, dtype=float)
    k = X.shape[1]
    XtX_inv = linalg.inv(X[:k].T @ X[:k])
    b = XtX_inv @ X[:k].T @ y[:k]
    out = np.empty(T - k)
    for i in range(k, T):
        x = X[i]
        f = 1.0 + x @ XtX_inv @ x
        e = y[i] - x @ b
        out[i - k] = e / np.sqrt(f)
        g = XtX_inv @ x
        XtX_inv = XtX_inv - np.outer(g, g) / f
        b = b + g * e / f
    return out


def _recursive_or_raise(y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.shape[0] < 10:
        raise InsufficientDataError("stability tests need at least 10 observations")
    w = recursive_residuals(y)
    scale = max(1.0, float(np.max(np.abs(y))))
    if float(w @ w) <= (1e-12 * scale) ** 2 * w.shape[0]:
        raise DegenerateSeriesError("recursive residuals have zero variance")
    return w


def _first_crossing(t, path, lower, upper):
    out = np.flatnonzero((path < lower) | (path > upper))
    return int(t[out[0]]) if out.size else None


def cusum_test(y) -> CusumResult:
    """Brown-Durbin-Evans CUSUM for an intercept-only model, 5% bounds."""
    w = _recursive_or_raise(y)
    k = 1
    n = w.shape[0]                    # T - k
    sigma = np.sqrt(w @ w / n)        # full-sample regression standard error
    path = np.cumsum(w) / sigma
    t = np.arange(k + 1, k + n + 1)
    half = 0.948 * (np.sqrt(n) + 2.0 * (t - k) / np.sqrt(n))
    return CusumResult(t, path, -half, half, bool(np.all(np.abs(path) <= half)),
                       _first_crossing(t, path, -half, half), w)


def cusum_sq_test(y) -> CusumResult:
    """CUSUM of squares with 5% bands from the tabulated c0 line."""
    w = _recursive_or_raise(y)
    k = 1
    n = w.shape[0]
    sq = w**2
    path = np.cumsum(sq) / sq.sum()
    path[-1] = 1.0
    t = np.arange(k + 1, k + n + 1)
    c0 = cv.cusumsq_c0(n)
    centre = (t - k) / n
    lower, upper = centre - c0, centre + c0
    return CusumResult(t, path, lower, upper,
                       bool(np.all((path >= lower) & (path <= upper))),
                       _first_crossing(t, path, lower, upper), w)
