"""Granger causality F tests in levels VARs and in error-correction form."""
from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .data import MarketPanel
from .distributions import chi_square_survival, f_survival
from .errors import ConfigurationError, InsufficientDataError
from .formatting import fmt_pvalue, starred, stars
from .linreg import DesignMatrix, ols_fit
from .vecm import VecmModel

__all__ = ["CausalityOutcome", "CausalityMatrix", "granger_test", "causality_matrix"]

MODES = ("levels_var", "vecm")


@dataclass(frozen=True)
class CausalityOutcome:
    cause: str
    effect: str
    statistic: float
    df: tuple[int, int]
    pvalue: float
    includes_ec_term: bool
    lag_order: int
    mode: str
    nobs: int
    ssr_restricted: float
    ssr_unrestricted: float

    @property
    def chi2_statistic(self) -> float:
        return self.df[0] * self.statistic

    @property
    def chi2_pvalue(self) -> float:
        return chi_square_survival(self.chi2_statistic, self.df[0])

    @property
    def marker(self) -> str:
        return stars(self.pvalue)


def _lag_orders(names, p: int, lags: Mapping[str, int] | None) -> dict[str, int]:
    orders = {n: p for n in names}
    if lags:
        unknown = set(lags) - set(names)
        if unknown:
            raise ConfigurationError(f"lag map names unknown markets: {sorted(unknown)}")
        orders.update({k: int(v) for k, v in lags.items()})
    if any(v < 0 for v in orders.values()):
        raise ConfigurationError("lag orders must be nonnegative")
    return orders


def _f_from_fits(restricted, unrestricted, q: int):
    dfd = unrestricted.nobs - unrestricted.k
    if dfd < 1:
        raise InsufficientDataError("no residual degrees of freedom in the unrestricted regression")
    diff = restricted.ssr - unrestricted.ssr
    scale = max(restricted.ssr, 1e-300)
    if diff < 0.0 and diff > -1e-12 * scale:
        diff = 0.0
    if unrestricted.ssr <= 0.0:
        stat = 0.0 if diff == 0.0 else float("inf")
    else:
        stat = (diff / q) / (unrestricted.ssr / dfd)
    stat = max(stat, 0.0)
    return stat, (q, dfd), f_survival(stat, q, dfd)


def _levels_regressions(X, names, cause, effect, orders):
    T = X.shape[0]
    start = max(orders.values())
    if T - start < 10:
        raise InsufficientDataError(f"{T} observations are too few for lag order {start}")
    n = T - start
    cols = {"const": np.ones(n)}
    for j, name in enumerate(names):
        for k in range(1, orders[name] + 1):
            cols[f"{name}.L{k}"] = X[start - k:T - k, j]
    y = X[start:, names.index(effect)]
    dropped = [c for c in cols if c.startswith(f"{cause}.L")]
    return cols, y, dropped


def _vecm_regressions(model: VecmModel, names, cause, effect, orders):
    X = model.data
    T = X.shape[0]
    p = model.p
    t = np.arange(p, T)
    dx = np.diff(X, axis=0)
    cols = {"const": np.ones(t.shape[0])}
    ec = model.error_correction_terms()
    for c in range(model.r):
        cols[f"ec{c + 1}.L1"] = ec[:, c]
    for j, name in enumerate(names):
        for k in range(1, min(orders[name], p)):
            cols[f"d{name}.L{k}"] = dx[t - 1 - k, j]
    y = dx[t - 1, names.index(effect)]
    dropped = [c for c in cols if c.startswith(f"d{cause}.L") or c.startswith("ec")]
    return cols, y, dropped


def granger_test(panel: MarketPanel, cause: str, effect: str, p: int = 2, mode: str = "levels_var",
                 model: VecmModel | None = None, lags: Mapping[str, int] | None = None) -> CausalityOutcome:
    """F test that ``cause`` does not Granger-cause ``effect``.

    In ``levels_var`` mode the unrestricted regression is the ``effect``
    equation of a levels VAR(p) and the restriction removes every lag of
    ``cause``.  In ``vecm`` mode the regression is in differences with
    ``p - 1`` lags plus the lagged error-correction terms of ``model``, and
    the restriction removes the lagged differences of ``cause`` together
    with the error-correction terms.
    """
    if mode not in MODES:
        raise ConfigurationError(f"causality mode must be one of {MODES}, got {mode!r}")
    names = list(panel.names)
    for nm in (cause, effect):
        if nm not in names:
            raise ConfigurationError(f"unknown market {nm!r}")
    if cause == effect:
        raise ConfigurationError("cause and effect must be different markets")
    if p < 1:
        raise ConfigurationError("lag order p must be at least 1")
    if mode == "vecm":
        if model is None:
            raise ConfigurationError("vecm mode needs a fitted VecmModel")
        if model.r < 1:
            raise ConfigurationError("vecm mode needs a model with rank at least 1")
        if tuple(model.names) != tuple(names) or model.data.shape != panel.values.shape \
                or not np.array_equal(model.data, panel.values):
            raise ConfigurationError("VecmModel was not fitted on this panel")
        orders = _lag_orders(names, model.p, lags)
        cols, y, dropped = _vecm_regressions(model, names, cause, effect, orders)
        lag_order = model.p
    else:
        orders = _lag_orders(names, p, lags)
        cols, y, dropped = _levels_regressions(panel.values, names, cause, effect, orders)
        lag_order = p
    keep = {k: v for k, v in cols.items() if k not in dropped}
    unrestricted = ols_fit(DesignMatrix.from_columns(cols), y)
    restricted = ols_fit(DesignMatrix.from_columns(keep), y)
    q = len(dropped)
    if q == 0:
        raise ConfigurationError(f"no coefficients of {cause!r} to test (lag order 0)")
    stat, df, pvalue = _f_from_fits(restricted, unrestricted, q)
    return CausalityOutcome(cause, effect, stat, df, pvalue, mode == "vecm", lag_order, mode,
                            unrestricted.nobs, restricted.ssr, unrestricted.ssr)


@dataclass(frozen=True)
class CausalityMatrix:
    names: tuple[str, ...]
    cells: Mapping[tuple[str, str], CausalityOutcome]
    mode: str

    def cell(self, cause: str, effect: str) -> CausalityOutcome | None:
        return self.cells.get((cause, effect))

    def __len__(self):
        return len(self.cells)

    def table(self) -> list[list[str]]:
        """Rows = cause, columns = effect; diagonal left blank."""
        out = [["cause\\effect", *self.names]]
        for c in self.names:
            row = [c]
            for e in self.names:
                o = self.cells.get((c, e))
                row.append("" if o is None else starred(o.statistic, o.marker))
            out.append(row)
        return out

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            csv.writer(fh, lineterminator="\n").writerows(self.table())

    def long_rows(self) -> list[list[str]]:
        rows = [["cause", "effect", "F", "df_num", "df_den", "pvalue", "chi2", "marker"]]
        for c in self.names:
            for e in self.names:
                o = self.cells.get((c, e))
                if o is not None:
                    rows.append([c, e, f"{o.statistic:.5f}", str(o.df[0]), str(o.df[1]),
                                 fmt_pvalue(o.pvalue), f"{o.chi2_statistic:.5f}", o.marker])
        return rows


def causality_matrix(panel: MarketPanel, p: int = 2, mode: str = "levels_var",
                     model: VecmModel | None = None, lags: Mapping[str, int] | None = None,
                     workers: int | None = None) -> CausalityMatrix:
    names = tuple(panel.names)
    if len(names) < 2:
        raise ConfigurationError("a causality matrix needs at least two markets")
    pairs = [(c, e) for c in names for e in names if c != e]

    def run(pair):
        return granger_test(panel, pair[0], pair[1], p, mode, model, lags)

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, pairs))
    else:
        results = [run(pr) for pr in pairs]
    return CausalityMatrix(names, dict(zip(pairs, results)), mode)
