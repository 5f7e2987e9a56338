"""Read-only access to the embedded critical-value tables.

Sources are documented in ``docs/critical_values.md``.  Every lookup returns
a fresh ``{"1%", "5%", "10%"}`` dict.
"""
from __future__ import annotations

import json
import math
from functools import lru_cache
from importlib import resources

from .errors import ConfigurationError

LEVELS = ("1%", "5%", "10%")
LEVEL_VALUES = {"1%": 0.01, "5%": 0.05, "10%": 0.10}


@lru_cache(maxsize=1)
def _tables() -> dict:
    raw = resources.files("cointkit").joinpath("critical_values.json").read_text()
    return json.loads(raw)


def level_key(level: float) -> str:
    for key, val in LEVEL_VALUES.items():
        if math.isclose(level, val):
            return key
    raise ConfigurationError(f"significance level must be one of 0.01, 0.05, 0.10; got {level}")


def _surface(coefs, nobs):
    if nobs is None or math.isinf(nobs):
        return coefs[0]
    x = 1.0 / nobs
    return coefs[0] + coefs[1] * x + coefs[2] * x**2 + coefs[3] * x**3


def adf_critical_values(kind: str, nobs: int | None = None) -> dict[str, float]:
    """MacKinnon response-surface values; ``nobs=None`` gives the asymptotic row."""
    try:
        tab = _tables()["adf"][kind]
    except KeyError:
        raise ConfigurationError(f"no ADF table for deterministic kind {kind!r}") from None
    return {lv: _surface(tab[lv], nobs) for lv in LEVELS}


def engle_granger_critical_values(kind: str, n_vars: int, nobs: int | None = None) -> dict[str, float]:
    """Residual-based cointegration values for ``n_vars`` = regressors + 1."""
    try:
        tab = _tables()["engle_granger"][kind][str(n_vars)]
    except KeyError:
        raise ConfigurationError(
            f"no Engle-Granger table for kind {kind!r} with {n_vars} variables"
        ) from None
    return {lv: _surface(tab[lv], nobs) for lv in LEVELS}


def kpss_critical_values(kind: str) -> dict[str, float]:
    try:
        return dict(_tables()["kpss"][kind])
    except KeyError:
        raise ConfigurationError(f"no KPSS table for deterministic kind {kind!r}") from None


_GH_MODEL_KEYS = {"level_shift": "C", "level_shift_with_trend": "C/T", "regime_shift": "C/S",
                  "C": "C", "C/T": "C/T", "C/S": "C/S"}


def gh_critical_values(model: str, statistic: str, m: int) -> dict[str, float]:
    """Gregory-Hansen values; ``statistic`` is ``ADF``, ``Zt`` or ``Za``."""
    block = "Za" if statistic == "Za" else "ADF_Zt"
    if statistic not in ("ADF", "Zt", "Za"):
        raise ConfigurationError(f"unknown Gregory-Hansen statistic {statistic!r}")
    try:
        return dict(_tables()["gregory_hansen"][block][str(m)][_GH_MODEL_KEYS[model]])
    except KeyError:
        raise ConfigurationError(f"no Gregory-Hansen table for model {model!r}, m={m}") from None


def johansen_trace_critical_values(deterministic: str, n_minus_r: int) -> dict[str, float]:
    try:
        return dict(_tables()["johansen_trace"][deterministic][str(n_minus_r)])
    except KeyError:
        raise ConfigurationError(
            f"no trace table for {deterministic!r} with i - r = {n_minus_r}"
        ) from None


def cusumsq_c0(n: int) -> float:
    """5% CUSUM-of-squares band half-width for ``n`` recursive residuals."""
    tab = {int(k): v for k, v in _tables()["cusumsq_c0"].items()}
    grid = sorted(tab)
    if n < grid[0]:
        raise ConfigurationError(f"CUSUM-of-squares table starts at n={grid[0]}")
    if n > grid[-1]:
        # Brownian-bridge scaling beyond the tabulated range
        return tab[grid[-1]] * math.sqrt(grid[-1] / n)
    if n in tab:
        return tab[n]
    hi = next(g for g in grid if g > n)
    lo = max(g for g in grid if g < n)
    w = (n - lo) / (hi - lo)
    return (1 - w) * tab[lo] + w * tab[hi]
