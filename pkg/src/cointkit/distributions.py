"""Survival functions for the chi-square and F reference distributions."""
from __future__ import annotations

import math

from scipy import special

from .errors import DomainError


def chi_square_survival(x: float, df: int) -> float:
    """P(chi2_df > x), via the regularized upper incomplete gamma function."""
    if df < 1 or int(df) != df:
        raise DomainError(f"degrees of freedom must be a positive integer, got {df}")
    if not x >= 0.0:
        raise DomainError(f"chi-square statistic must be nonnegative, got {x}")
    if x == 0.0:
        return 1.0
    if math.isinf(x):
        return 0.0
    return float(special.gammaincc(df / 2.0, x / 2.0))


def f_survival(x: float, df1: int, df2: int) -> float:
    """P(F_{df1,df2} > x), via the regularized incomplete beta function."""
    for d in (df1, df2):
        if d < 1 or int(d) != d:
            raise DomainError(f"degrees of freedom must be positive integers, got {df1}, {df2}")
    if not x >= 0.0:
        raise DomainError(f"F statistic must be nonnegative, got {x}")
    if x == 0.0:
        return 1.0
    if math.isinf(x):
        return 0.0
    return float(special.betainc(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * x)))
