"""ADF and KPSS tests with SBC lag selection and Bartlett long-run variance."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy import linalg

from . import critical_values as cv
from .data import ObservationSeries
from .errors import (
    CollinearityError,
    ConfigurationError,
    DegenerateSeriesError,
    DomainError,
    InsufficientDataError,
)
from .linreg import DEGENERATE_SIGMA2, DesignMatrix, RegressionFit, _check_rank, ols_fit

__all__ = [
    "DeterministicSpec",
    "UnitRootOutcome",
    "LongRunVariance",
    "adf_test",
    "kpss_test",
    "long_run_variance",
    "default_max_lags",
    "default_bandwidth",
    "deterministic_terms",
]


class DeterministicSpec(str, enum.Enum):
    NONE = "none"
    CONSTANT = "constant"
    CONSTANT_AND_TREND = "constant_and_trend"

    @property
    def n_terms(self) -> int:
        return {"none": 0, "constant": 1, "constant_and_trend": 2}[self.value]


def _spec(spec) -> DeterministicSpec:
    try:
        return DeterministicSpec(spec)
    except ValueError:
        raise ConfigurationError(f"unknown deterministic spec {spec!r}") from None


def deterministic_terms(spec, t: np.ndarray) -> tuple[list[str], np.ndarray]:
    """Columns for the deterministic part evaluated at time indices ``t``."""
    spec = _spec(spec)
    names, cols = [], []
    if spec.n_terms >= 1:
        names.append("const")
        cols.append(np.ones(t.shape[0]))
    if spec.n_terms == 2:
        names.append("trend")
        cols.append(t.astype(float))
    return names, (np.column_stack(cols) if cols else np.empty((t.shape[0], 0)))


def default_max_lags(nobs: int) -> int:
    """Schwert rule 12 (T/100)^(1/4)."""
    return int(math.floor(12.0 * (nobs / 100.0) ** 0.25))


def default_bandwidth(nobs: int) -> int:
    """Bartlett bandwidth 4 (T/100)^(2/9)."""
    return int(math.floor(4.0 * (nobs / 100.0) ** (2.0 / 9.0)))


@dataclass(frozen=True)
class LongRunVariance:
    value: float
    bandwidth: int
    kernel: str = "bartlett"


def long_run_variance(residuals, bandwidth: int | None = None) -> LongRunVariance:
    u = np.asarray(residuals, dtype=float)
    T = u.shape[0]
    if T == 0:
        raise DomainError("long-run variance of an empty vector")
    if bandwidth is None:
        bandwidth = default_bandwidth(T)
    if bandwidth < 0:
        raise DomainError("bandwidth must be nonnegative")
    ell = min(int(bandwidth), T - 1)
    d = u - u.mean()
    value = float(d @ d) / T
    for j in range(1, ell + 1):
        gamma_j = float(d[j:] @ d[:-j]) / T
        value += 2.0 * (1.0 - j / (ell + 1.0)) * gamma_j
    return LongRunVariance(max(value, 0.0), int(bandwidth))


@dataclass(frozen=True, eq=False)
class UnitRootOutcome:
    test: str
    statistic: float
    lags_used: int
    spec: DeterministicSpec
    critical_values: Mapping[str, float]
    nobs: int
    fit: RegressionFit | None = None
    long_run_variance: float | None = None
    meta: Mapping[str, object] = field(default_factory=dict)

    @property
    def null_hypothesis(self) -> str:
        return "unit root" if self.test == "ADF" else "stationarity"

    def rejects(self, level: float) -> bool:
        c = self.critical_values[cv.level_key(level)]
        return self.statistic < c if self.test == "ADF" else self.statistic > c

    @property
    def reject_at(self) -> float | None:
        for lv in (0.01, 0.05, 0.10):
            if self.rejects(lv):
                return lv
        return None


# --------------------------------------------------------------------------
# ADF core, shared with the residual-based cointegration tests

@dataclass(frozen=True)
class _AdfCore:
    statistic: float
    lags: int
    nobs: int
    sbc: tuple[float, ...]


def _adf_design(x: np.ndarray, spec: DeterministicSpec, p: int, start: int):
    """Regression of dx_t on det, x_{t-1}, dx_{t-1..p} for t >= start (0-based, start > p)."""
    dx = np.diff(x)                       # dx[t-1] = x_t - x_{t-1}
    T = x.shape[0]
    t = np.arange(start, T)
    _, det = deterministic_terms(spec, t + 1)
    cols = [det, x[t - 1][:, None]]
    for j in range(1, p + 1):
        cols.append(dx[t - 1 - j][:, None])
    return np.hstack(cols), dx[t - 1], det.shape[1]


def _tstat_column(X: np.ndarray, y: np.ndarray, j: int):
    Q, R = linalg.qr(X, mode="economic", check_finite=False)
    _check_rank(R, X)
    qty = Q.T @ y
    b = linalg.solve_triangular(R, qty, check_finite=False)
    resid = y - X @ b
    n, k = X.shape
    s2 = float(resid @ resid) / (n - k)
    if s2 <= DEGENERATE_SIGMA2:
        raise DegenerateSeriesError(f"ADF regression fits exactly (sigma2={s2:.3e})")
    Rinv = linalg.solve_triangular(R, np.eye(k), check_finite=False)
    se = math.sqrt(s2 * float(Rinv[j] @ Rinv[j]))
    return b[j] / se


def _adf_core(x: np.ndarray, spec: DeterministicSpec, max_lags: int, lags: int | None) -> _AdfCore:
    k0 = spec.n_terms
    if lags is not None:
        p = int(lags)
        sbc = ()
    else:
        pmax = int(max_lags)
        X, y, _ = _adf_design(x, spec, pmax, pmax + 1)
        n = y.shape[0]
        try:
            Q, R = linalg.qr(X, mode="economic", check_finite=False)
            _check_rank(R, X)
        except CollinearityError as exc:
            raise DegenerateSeriesError(f"ADF regression is degenerate: {exc}") from None
        qty = Q.T @ y
        ssr_full = float(np.sum((y - Q @ qty) ** 2))
        tail = np.concatenate([np.cumsum((qty[::-1]) ** 2)[::-1][1:], [0.0]])
        # tail[j] = sum of squared projections on columns beyond j
        crit = []
        for p in range(pmax + 1):
            k = k0 + 1 + p
            ssr = ssr_full + float(tail[k - 1])
            if ssr / (n - k) <= DEGENERATE_SIGMA2:
                raise DegenerateSeriesError("ADF regression fits exactly")
            crit.append(math.log(ssr / n) + k * math.log(n) / n)
        p = int(np.argmin(crit))
        sbc = tuple(crit)
    X, y, _ = _adf_design(x, spec, p, p + 1)
    try:
        stat = _tstat_column(X, y, k0)
    except CollinearityError as exc:
        raise DegenerateSeriesError(f"ADF regression is degenerate: {exc}") from None
    return _AdfCore(float(stat), p, y.shape[0], sbc)


def _resolve_max_lags(T: int, spec: DeterministicSpec, max_lags: int | None) -> int:
    k0 = spec.n_terms
    if max_lags is None:
        cap = (T - 1) // 2 - k0 - 1
        pmax = max(0, min(default_max_lags(T), cap, T - 10))
    else:
        pmax = int(max_lags)
        if pmax < 0:
            raise DomainError("max_lags must be nonnegative")
    if T < pmax + 10:
        raise InsufficientDataError(f"ADF with up to {pmax} lags needs at least {pmax + 10} points, got {T}")
    if T - pmax - 1 <= k0 + 1 + pmax:
        raise InsufficientDataError(f"too few observations ({T}) for {pmax} ADF lags")
    return pmax


def adf_test(series, spec=DeterministicSpec.CONSTANT, max_lags: int | None = None,
             *, lags: int | None = None) -> UnitRootOutcome:
    """Augmented Dickey-Fuller t-test of a unit root.

    The lag order minimizes SBC over ``0..max_lags`` on the sample trimmed
    for ``max_lags``; the chosen regression is then refitted on every
    available observation.  ``lags`` fixes the order and skips the search.
    """
    spec = _spec(spec)
    x = series.values if isinstance(series, ObservationSeries) else np.asarray(series, dtype=float)
    T = x.shape[0]
    if lags is not None:
        if lags < 0:
            raise DomainError("lags must be nonnegative")
        pmax = _resolve_max_lags(T, spec, lags)
    else:
        pmax = _resolve_max_lags(T, spec, max_lags)
    core = _adf_core(x, spec, pmax, lags)
    X, y, _ = _adf_design(x, spec, core.lags, core.lags + 1)
    names = deterministic_terms(spec, np.arange(1))[0] + ["x.L1"] + [f"dx.L{j}" for j in range(1, core.lags + 1)]
    fit = ols_fit(DesignMatrix(tuple(names), X), y)
    return UnitRootOutcome(
        "ADF", core.statistic, core.lags, spec,
        cv.adf_critical_values(spec.value, core.nobs), core.nobs, fit,
        meta={"max_lags": pmax, "sbc": core.sbc},
    )


def kpss_test(series, spec=DeterministicSpec.CONSTANT, bandwidth: int | None = None) -> UnitRootOutcome:
    """KPSS LM test of (trend) stationarity."""
    spec = _spec(spec)
    if spec is DeterministicSpec.NONE:
        raise ConfigurationError("KPSS needs a constant or constant_and_trend spec")
    x = series.values if isinstance(series, ObservationSeries) else np.asarray(series, dtype=float)
    T = x.shape[0]
    if T < 10:
        raise InsufficientDataError(f"KPSS needs at least 10 points, got {T}")
    names, det = deterministic_terms(spec, np.arange(1, T + 1))
    try:
        fit = ols_fit(DesignMatrix(tuple(names), det), x)
    except CollinearityError as exc:
        raise DegenerateSeriesError(str(exc)) from None
    u = np.asarray(fit.residuals)
    scale = float(np.mean(x**2))
    gamma0 = float(np.mean((u - u.mean()) ** 2))
    if gamma0 == 0.0 or gamma0 <= 1e-20 * max(scale, 1e-300):
        raise DegenerateSeriesError("KPSS residuals have zero variance")
    if bandwidth is None:
        bandwidth = default_bandwidth(T)
    lrv = long_run_variance(u, bandwidth)
    if lrv.value <= 0.0:
        raise DegenerateSeriesError("long-run variance is zero")
    S = np.cumsum(u)
    stat = float(S @ S) / T**2 / lrv.value
    return UnitRootOutcome(
        "KPSS", stat, lrv.bandwidth, spec, cv.kpss_critical_values(spec.value), T, fit,
        long_run_variance=lrv.value,
    )
