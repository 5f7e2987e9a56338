"""Fixed-precision rendering shared by table exports and the report."""
from __future__ import annotations

import math


def stars(pvalue: float | None) -> str:
    if pvalue is None or math.isnan(pvalue):
        return ""
    if pvalue < 0.01:
        return "**"
    if pvalue < 0.05:
        return "*"
    return ""


def stars_from_level(level: float | None) -> str:
    """Markers from the smallest level at which a test rejects."""
    if level is None:
        return ""
    return "**" if level <= 0.01 + 1e-12 else "*" if level <= 0.05 + 1e-12 else ""


def fmt_stat(x: float | None) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "NA"
    return f"{x:.5f}"


def fmt_pvalue(p: float | None) -> str:
    if p is None or math.isnan(p):
        return "NA"
    return f"{p:.6f}"


def starred(x: float | None, marker: str) -> str:
    text = fmt_stat(x)
    return f"{text} {marker}" if marker else text
