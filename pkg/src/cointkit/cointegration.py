"""Residual-based cointegration: Engle-Granger and Gregory-Hansen one-break tests.

The Gregory-Hansen statistics are infima over an exhaustive breakpoint
grid.  By default the per-break least-squares fits are obtained from
suffix sums of the cross-product matrices rather than refitting each
design from scratch (``method="naive"`` refits by QR).
"""
from __future__ import annotations

import csv
import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy import linalg

from . import critical_values as cv
from .data import ObservationSeries
from .errors import (
    CollinearityError,
    ConfigurationError,
    DegenerateError,
    DomainError,
    InsufficientDataError,
)
from .linreg import DEGENERATE_SIGMA2, DesignMatrix, RegressionFit, ols_fit
from .unitroot import (
    DeterministicSpec,
    _adf_core,
    _resolve_max_lags,
    default_bandwidth,
    deterministic_terms,
    long_run_variance,
)

__all__ = [
    "BreakModel",
    "BreakDummy",
    "StatisticKind",
    "CointegrationOutcome",
    "PhillipsZ",
    "engle_granger_test",
    "breakpoint_grid",
    "gh_design",
    "gh_fit_at",
    "gh_residual_profile",
    "phillips_z",
    "gh_test",
    "write_profile_csv",
]


class BreakModel(str, enum.Enum):
    LEVEL_SHIFT = "level_shift"
    LEVEL_SHIFT_WITH_TREND = "level_shift_with_trend"
    REGIME_SHIFT = "regime_shift"

    @property
    def code(self) -> str:
        return {"level_shift": "C", "level_shift_with_trend": "C/T", "regime_shift": "C/S"}[self.value]

    @classmethod
    def parse(cls, value) -> "BreakModel":
        if isinstance(value, cls):
            return value
        for m in cls:
            if value in (m.value, m.code):
                return m
        raise ConfigurationError(f"unknown break model {value!r}")


class StatisticKind(str, enum.Enum):
    EG_ADF = "EG_ADF"
    GH_ADF_STAR = "GH_ADF_star"
    GH_ZT_STAR = "GH_Zt_star"
    GH_ZA_STAR = "GH_Za_star"

    @classmethod
    def parse(cls, value) -> "StatisticKind":
        if isinstance(value, cls):
            return value
        aliases = {"ADF": cls.GH_ADF_STAR, "ADF*": cls.GH_ADF_STAR, "Zt": cls.GH_ZT_STAR,
                   "Zt*": cls.GH_ZT_STAR, "Za": cls.GH_ZA_STAR, "Za*": cls.GH_ZA_STAR}
        if value in aliases:
            return aliases[value]
        try:
            return cls(value)
        except ValueError:
            raise ConfigurationError(f"unknown statistic kind {value!r}") from None

    @property
    def table_key(self) -> str:
        return {"GH_ADF_star": "ADF", "GH_Zt_star": "Zt", "GH_Za_star": "Za"}[self.value]


@dataclass(frozen=True)
class BreakDummy:
    tau: float
    break_index: int

    def __post_init__(self):
        if not 0.0 < self.tau < 1.0:
            raise DomainError(f"break fraction must lie in (0, 1), got {self.tau}")

    @classmethod
    def at(cls, n: int, break_index: int) -> "BreakDummy":
        return cls(break_index / n, break_index)

    def values(self, n: int) -> np.ndarray:
        """phi_t = 0 for the first ``break_index`` observations, 1 afterwards."""
        phi = np.zeros(n)
        phi[self.break_index:] = 1.0
        return phi


@dataclass(frozen=True, eq=False)
class CointegrationOutcome:
    statistic_kind: StatisticKind
    statistic: float | None
    critical_values: Mapping[str, float]
    fit_at_break: RegressionFit
    m: int
    nobs: int
    breakpoint: BreakDummy | None = None
    model: BreakModel | None = None
    profile: np.ndarray | None = None      # rows of (tau, break_index, statistic)
    lags: int | None = None
    exact: bool = False
    meta: Mapping[str, object] = field(default_factory=dict)

    def rejects(self, level: float) -> bool:
        """True when the no-cointegration null is rejected at ``level``."""
        if self.exact:
            return True
        return self.statistic < self.critical_values[cv.level_key(level)]

    @property
    def reject_at(self) -> float | None:
        for lv in (0.01, 0.05, 0.10):
            if self.rejects(lv):
                return lv
        return None


def _matrix(x_set) -> np.ndarray:
    if isinstance(x_set, ObservationSeries):
        return x_set.values[:, None]
    if isinstance(x_set, np.ndarray):
        return x_set[:, None] if x_set.ndim == 1 else x_set
    cols = [s.values if isinstance(s, ObservationSeries) else np.asarray(s, dtype=float) for s in x_set]
    return np.column_stack(cols)


def _check_calendar(y, x_set) -> None:
    if not isinstance(y, ObservationSeries) or isinstance(x_set, np.ndarray):
        return
    members = [x_set] if isinstance(x_set, ObservationSeries) else list(x_set)
    for s in members:
        if isinstance(s, ObservationSeries) and not np.array_equal(s.dates, y.dates):
            raise DomainError(f"{s.name} does not share the calendar of {y.name}")


def _vector(y) -> np.ndarray:
    return y.values if isinstance(y, ObservationSeries) else np.asarray(y, dtype=float)


# --------------------------------------------------------------------------
# Engle-Granger

def engle_granger_test(y, x_set, spec=DeterministicSpec.CONSTANT, max_lags: int | None = None) -> CointegrationOutcome:
    """Two-step test: static regression, then ADF (no deterministics) on its residuals.

    An exact linear relation (zero stage-one residual variance) is reported
    as ``exact=True`` with ``statistic=None``.
    """
    spec = DeterministicSpec(spec)
    if spec is DeterministicSpec.NONE:
        raise ConfigurationError("Engle-Granger tables exist for constant and constant_and_trend only")
    _check_calendar(y, x_set)
    yv, X = _vector(y), _matrix(x_set)
    n, m = X.shape
    if n < 30:
        raise InsufficientDataError(f"Engle-Granger needs at least 30 observations, got {n}")
    det_names, det = deterministic_terms(spec, np.arange(1, n + 1))
    names = tuple(det_names) + tuple(f"x{j + 1}" for j in range(m))
    fit = ols_fit(DesignMatrix(names, np.hstack([det, X])), yv)
    crit = cv.engle_granger_critical_values(spec.value, m + 1, None)
    if fit.sigma2 <= DEGENERATE_SIGMA2:
        return CointegrationOutcome(StatisticKind.EG_ADF, None, crit, fit, m, n, exact=True,
                                    meta={"spec": spec.value})
    pmax = _resolve_max_lags(n, DeterministicSpec.NONE, max_lags)
    core = _adf_core(np.asarray(fit.residuals), DeterministicSpec.NONE, pmax, None)
    crit = cv.engle_granger_critical_values(spec.value, m + 1, core.nobs)
    return CointegrationOutcome(StatisticKind.EG_ADF, core.statistic, crit, fit, m, n,
                                lags=core.lags, meta={"spec": spec.value, "adf_nobs": core.nobs})


# --------------------------------------------------------------------------
# Gregory-Hansen

def breakpoint_grid(n: int, trim: float = 0.15) -> list[BreakDummy]:
    """Every break index floor(n tau) for tau in [trim, 1 - trim]."""
    if not 0.0 < trim < 0.5:
        raise ConfigurationError(f"trim must lie in (0, 0.5), got {trim}")
    if n < 20:
        raise InsufficientDataError(f"breakpoint grid needs n >= 20, got {n}")
    lo = int(math.floor(n * trim + 1e-9))
    hi = int(math.floor(n * (1.0 - trim) + 1e-9))
    lo = max(lo, 1)
    hi = min(hi, n - 1)
    return [BreakDummy.at(n, b) for b in range(lo, hi + 1)]


def gh_design(x: np.ndarray, model: BreakModel, dummy: BreakDummy) -> tuple[tuple[str, ...], np.ndarray]:
    n, m = x.shape
    phi = dummy.values(n)
    names = ["const", "shift"]
    cols = [np.ones(n), phi]
    if model is BreakModel.LEVEL_SHIFT_WITH_TREND:
        names.append("trend")
        cols.append(np.arange(1, n + 1, dtype=float))
    names += [f"x{j + 1}" for j in range(m)]
    cols += [x[:, j] for j in range(m)]
    if model is BreakModel.REGIME_SHIFT:
        names += [f"x{j + 1}.shift" for j in range(m)]
        cols += [x[:, j] * phi for j in range(m)]
    return tuple(names), np.column_stack(cols)


def _n_regressors(model: BreakModel, m: int) -> int:
    return {BreakModel.LEVEL_SHIFT: 2 + m, BreakModel.LEVEL_SHIFT_WITH_TREND: 3 + m,
            BreakModel.REGIME_SHIFT: 2 + 2 * m}[model]


def _check_sides(n: int, k: int, dummy: BreakDummy) -> None:
    if dummy.break_index < k + 2 or n - dummy.break_index < k + 2:
        raise InsufficientDataError(
            f"break at index {dummy.break_index} leaves fewer than {k + 2} observations on one side"
        )


def gh_fit_at(y, x_set, model, dummy: BreakDummy) -> RegressionFit:
    model = BreakModel.parse(model)
    _check_calendar(y, x_set)
    yv, X = _vector(y), _matrix(x_set)
    n, m = X.shape
    _check_sides(n, _n_regressors(model, m), dummy)
    names, A = gh_design(X, model, dummy)
    return ols_fit(DesignMatrix(names, A), yv)


class _SuffixCrossProducts:
    """Cross-product blocks of the break regression as suffix sums over t.

    Base columns (const, [trend], x) do not depend on the break; the dummy
    columns (phi, [x*phi]) only contribute sums over t >= break_index, so
    every X'X and X'y is assembled from one reversed cumulative sum.
    """

    def __init__(self, y: np.ndarray, x: np.ndarray, model: BreakModel):
        n, m = x.shape
        self.y, self.x, self.model = y, x, model
        base = [np.ones(n)]
        if model is BreakModel.LEVEL_SHIFT_WITH_TREND:
            base.append(np.arange(1, n + 1, dtype=float) / n)   # rescaled for conditioning
        base += [x[:, j] for j in range(m)]
        self.B = np.column_stack(base)
        self.kB = self.B.shape[1]
        self.xcols = list(range(self.kB - m, self.kB))
        # V_t = [1, x_t] (the dummy interacts with these), W_t = [B_t, y_t]
        V = np.column_stack([np.ones(n), x]) if model is BreakModel.REGIME_SHIFT else np.ones((n, 1))
        W = np.column_stack([self.B, y])
        outer = W[:, :, None] * V[:, None, :]
        self.suffix = np.cumsum(outer[::-1], axis=0)[::-1]
        self.BtB = self.B.T @ self.B
        self.Bty = self.B.T @ y
        self.nV = V.shape[1]
        self.vidx = [0] + (self.xcols if model is BreakModel.REGIME_SHIFT else [])

    def residuals(self, b: int) -> np.ndarray:
        S = self.suffix[b]                      # (kB + 1) x nV
        kB, nV = self.kB, self.nV
        BtD = S[:kB, :]
        Dty = S[kB, :]
        DtD = S[self.vidx, :]
        k = kB + nV
        G = np.empty((k, k))
        G[:kB, :kB] = self.BtB
        G[:kB, kB:] = BtD
        G[kB:, :kB] = BtD.T
        G[kB:, kB:] = 0.5 * (DtD + DtD.T)
        g = np.concatenate([self.Bty, Dty])
        d = np.sqrt(np.diag(G))
        if np.any(d == 0.0):
            raise CollinearityError("break regression has an all-zero column")
        Gs = G / np.outer(d, d)
        ev = np.linalg.eigvalsh(Gs)
        if ev[0] <= 1e-12 * ev[-1]:
            raise CollinearityError("break regression is rank deficient")
        beta = linalg.solve(Gs, g / d, assume_a="pos", check_finite=False) / d
        e = self.y - self.B @ beta[:kB]
        shift = beta[kB]
        if self.model is BreakModel.REGIME_SHIFT:
            e[b:] -= shift + self.x[b:] @ beta[kB + 1:]
        else:
            e[b:] -= shift
        return e


def gh_residual_profile(y, x_set, model, grid: Sequence[BreakDummy], method: str = "incremental"):
    """Residual vectors of the break regression at every grid point (generator)."""
    model = BreakModel.parse(model)
    yv, X = _vector(y), _matrix(x_set)
    n, m = X.shape
    k = _n_regressors(model, m)
    for d in grid:
        _check_sides(n, k, d)
    if method == "naive":
        for d in grid:
            names, A = gh_design(X, model, d)
            yield d, np.asarray(ols_fit(DesignMatrix(names, A), yv).residuals)
    elif method == "incremental":
        acc = _SuffixCrossProducts(yv, X, model)
        for d in grid:
            yield d, acc.residuals(d.break_index)
    else:
        raise ConfigurationError(f"unknown grid method {method!r}")


@dataclass(frozen=True)
class PhillipsZ:
    Za: float
    Zt: float
    rho: float
    long_run_variance: float
    bandwidth: int
    nobs: int


def phillips_z(residuals, bandwidth: int | None = None) -> PhillipsZ:
    """Phillips Z_alpha and Z_t from the AR(1) of the residuals.

    Uses the long-run variance of the AR(1) innovations with Bartlett
    weights; ``bandwidth=0`` removes the serial-correlation correction.
    """
    u = np.asarray(residuals, dtype=float)
    if u.shape[0] < 10:
        raise InsufficientDataError("Phillips Z statistics need at least 10 observations")
    y, x = u[1:], u[:-1]
    n = y.shape[0]
    sxx = float(x @ x)
    if sxx <= 0.0:
        raise DegenerateError("residuals have zero variance")
    rho = float(x @ y) / sxx
    eps = y - rho * x
    if bandwidth is None:
        bandwidth = default_bandwidth(n)
    gamma0 = long_run_variance(eps, 0).value
    lrv = long_run_variance(eps, bandwidth).value
    if lrv <= 0.0 or gamma0 <= 1e-28 * sxx / n:
        raise DegenerateError("AR(1) innovations have zero variance")
    lam = 0.5 * (lrv - gamma0)
    m2 = sxx / n**2
    sig = math.sqrt(lrv)
    za = n * (rho - 1.0) - lam / m2
    zt = (rho - 1.0) * math.sqrt(sxx) / sig - lam / (sig * math.sqrt(m2))
    return PhillipsZ(za, zt, rho, lrv, int(bandwidth), n)


def _grid_statistic(kind: StatisticKind, e: np.ndarray, pmax: int, bandwidth):
    if kind is StatisticKind.GH_ADF_STAR:
        core = _adf_core(e, DeterministicSpec.NONE, pmax, None)
        return core.statistic, core.lags
    z = phillips_z(e, bandwidth)
    return (z.Zt if kind is StatisticKind.GH_ZT_STAR else z.Za), z.bandwidth


def gh_test(y, x_set, model=BreakModel.LEVEL_SHIFT, statistic_kind=StatisticKind.GH_ADF_STAR,
            trim: float = 0.15, *, max_lags: int | None = None, bandwidth: int | None = None,
            method: str = "incremental", workers: int = 1) -> CointegrationOutcome:
    """Gregory-Hansen infimum test of no cointegration against one break.

    ``workers > 1`` evaluates disjoint grid chunks concurrently; each grid
    point is computed identically, so the result matches a sequential run
    bit for bit.
    """
    model = BreakModel.parse(model)
    kind = StatisticKind.parse(statistic_kind)
    if kind is StatisticKind.EG_ADF:
        raise ConfigurationError("use engle_granger_test for the no-break statistic")
    _check_calendar(y, x_set)
    yv, X = _vector(y), _matrix(x_set)
    n, m = X.shape
    if n < 50:
        raise InsufficientDataError(f"Gregory-Hansen needs at least 50 observations, got {n}")
    if not 1 <= m <= 6:
        raise ConfigurationError(f"Gregory-Hansen tables cover 1..6 regressors, got {m}")
    grid = breakpoint_grid(n, trim)
    pmax = _resolve_max_lags(n, DeterministicSpec.NONE, max_lags) if kind is StatisticKind.GH_ADF_STAR else 0

    def run(chunk):
        return [(d, *_grid_statistic(kind, e, pmax, bandwidth))
                for d, e in gh_residual_profile(yv, X, model, chunk, method)]

    if workers > 1 and len(grid) > 1:
        size = -(-len(grid) // workers)
        chunks = [grid[i:i + size] for i in range(0, len(grid), size)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = [r for part in pool.map(run, chunks) for r in part]
    else:
        rows = run(grid)
    profile = np.array([(d.tau, d.break_index, s) for d, s, _ in rows])
    best = int(np.argmin(profile[:, 2]))
    d_best = rows[best][0]
    fit = gh_fit_at(yv, X, model, d_best)
    crit = cv.gh_critical_values(model.value, kind.table_key, m)
    return CointegrationOutcome(
        kind, float(profile[best, 2]), crit, fit, m, n, breakpoint=d_best, model=model,
        profile=profile, lags=int(rows[best][2]),
        meta={"trim": trim, "method": method, "grid_size": len(grid)},
    )


def write_profile_csv(outcome: CointegrationOutcome, path) -> None:
    if outcome.profile is None:
        raise ConfigurationError("outcome carries no breakpoint profile")
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["tau", "break_index", "statistic"])
        for tau, b, s in outcome.profile:
            w.writerow([f"{tau:.6f}", int(b), f"{s:.10f}"])
