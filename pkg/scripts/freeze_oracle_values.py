"""Compute reference values with the independent oracles and write tests/expected.py.

Run from the repository root:  python3 scripts/freeze_oracle_values.py
"""
from __future__ import annotations

import math
import pprint
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "tests"))

import fixtures as fx  # noqa: E402
import oracles as orc  # noqa: E402


def default_max_lags(T, k0):
    return max(0, min(math.floor(12 * (T / 100) ** 0.25), (T - 1) // 2 - k0 - 1, T - 10))


def _plain(v):
    if isinstance(v, dict):
        return {k: _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if hasattr(v, "item"):
        return v.item()
    return v


def build() -> dict:
    out = {}
    s = orc.ols_summary([[1.0] * 5, fx.OLS5_X], fx.OLS5_Y)
    out["ols5"] = {"beta": s["beta"], "ssr": s["ssr"], "se": s["se"]}

    y, x = fx.ADL12_Y, fx.ADL12_X
    rows = range(1, 12)
    cols = [[1.0] * 11, [y[t - 1] for t in rows], [x[t] for t in rows], [x[t - 1] for t in rows]]
    s = orc.ols_summary(cols, [y[t] for t in rows])
    inv, s2 = s["inv"], s["s2"]
    from fractions import Fraction
    beta = [Fraction(b) for b in orc.normal_equations(cols, [y[t] for t in rows])[0]]
    excess = sum(beta[1:]) - 1
    var = s2 * sum(inv[a][b] for a in range(1, 4) for b in range(1, 4))
    out["adl12"] = {"beta": s["beta"], "lop_wald": float(excess * excess / var)}

    out["adf15_p0"] = orc.adf_tstat_fixed(fx.ADF15, 0)[0]
    out["kpss10_bw0"] = orc.kpss_stat(fx.KPSS10, 0)
    out["kpss10_bw2_trend"] = orc.kpss_stat(fx.KPSS10, 2, trend=True)
    out["desc5"] = orc.moments(fx.DESC5)

    s = orc.ols_summary([[1.0] * 30, fx.EG30_X], fx.EG30_Y)
    e = [float(r) for r in s["resid"]]
    pmax = default_max_lags(30, 0)
    p = orc.adf_sbc_select(e, pmax, constant=False)
    out["eg30"] = {"beta": s["beta"], "lags": p, "statistic": orc.adf_tstat_fixed(e, p, constant=False)[0]}

    n = len(fx.GH20_Y)
    phi = [1.0 if t >= fx.GH20_BREAK else 0.0 for t in range(n)]
    out["gh20_c"] = orc.ols_summary([[1.0] * n, phi, fx.GH20_X], fx.GH20_Y)["beta"]

    za, zt, rho = orc.phillips(fx.PZ15, 2)
    out["pz15_bw2"] = {"Za": za, "Zt": zt, "rho": rho}

    pmax = default_max_lags(fx.GHP_N, 0)
    prof = orc.gh_profile(fx.GHP_Y, fx.GHP_X, "C", 0.15, pmax)
    out["ghp_c_adf"] = {"break_index": [b for b, _ in prof], "statistic": [v for _, v in prof]}

    out["joh40_restricted"] = orc.johansen_eigenvalues(fx.JOH40, 2, True)[0]
    out["joh40_unrestricted"] = orc.johansen_eigenvalues(fx.JOH40, 2, False)[0]

    X = fx.VAR13
    ys = [r[0] for r in X[1:]]
    cols = [[1.0] * 12, [r[0] for r in X[:-1]], [r[1] for r in X[:-1]]]
    out["var13_eq0"] = orc.ols_summary(cols, ys)["beta"]

    c, e = fx.GR60_CAUSE, fx.GR60_EFFECT
    rows = range(2, 60)
    yv = [e[t] for t in rows]
    base = [[1.0] * 58, [e[t - 1] for t in rows], [e[t - 2] for t in rows]]
    full = base + [[c[t - 1] for t in rows], [c[t - 2] for t in rows]]
    F, q, dfd = orc.two_regression_f(yv, full, base)
    out["gr60_levels_p2"] = {"F": F, "df": [q, dfd]}

    path, crossing = orc.cusum_path(fx.CUSUM40)
    out["cusum40"] = {"crossing": crossing, "path_last": path[-1]}
    out["cusumsq_alt40"] = orc.cusumsq_path(fx.ALT40)

    out["f_survival_4_1_30"] = orc.f_survival_quadrature(4.0, 1, 30)
    out["t_two_sided_2_30"] = 2 * (1 - orc.t_cdf_quadrature(2.0, 30))
    return out


if __name__ == "__main__":
    values = build()
    text = '"""Reference values frozen from tests/oracles.py by scripts/freeze_oracle_values.py."""\n\n'
    text += "EXPECTED = " + pprint.pformat(_plain(values), width=100, sort_dicts=True) + "\n"
    (ROOT / "tests" / "expected.py").write_text(text)
    print(text)
