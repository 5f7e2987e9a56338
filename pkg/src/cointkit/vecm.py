"""Reduced-rank (Johansen) estimation of the error-correction model.

Sample convention: with ``p`` lags in levels the effective sample is
``t = p, ..., T-1`` (0-based), i.e. ``T - p`` observations, shared by the
rank test, the VECM and every restriction test built on it.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy import linalg

from . import critical_values as cv
from .data import MarketPanel
from .distributions import chi_square_survival
from .errors import (
    CollinearityError,
    ConfigurationError,
    InsufficientDataError,
    RankDomainError,
    RestrictionError,
)
from .linreg import DesignMatrix, RegressionFit, WaldResult, ols_fit, wald_linear_restriction

__all__ = [
    "VecmDeterministic",
    "RankTestOutcome",
    "VecmModel",
    "VarFit",
    "RestrictionTestResult",
    "SumTestResult",
    "johansen_rank_test",
    "vecm_estimate",
    "beta_restriction_test",
    "homogeneity_restriction",
    "levels_var_fit",
    "var_sum_integration_test",
    "select_var_order",
    "format_vecm",
]


class VecmDeterministic(str, enum.Enum):
    RESTRICTED_CONSTANT = "restricted_constant"
    UNRESTRICTED_CONSTANT = "unrestricted_constant"


def _det(value) -> VecmDeterministic:
    try:
        return VecmDeterministic(value)
    except ValueError:
        raise ConfigurationError(f"unknown VECM deterministic option {value!r}") from None


def _values(panel) -> np.ndarray:
    return panel.values if isinstance(panel, MarketPanel) else np.asarray(panel, dtype=float)


def _names(panel, i) -> tuple[str, ...]:
    return panel.names if isinstance(panel, MarketPanel) else tuple(f"x{j + 1}" for j in range(i))


@dataclass(frozen=True, eq=False)
class _Moments:
    Z0: np.ndarray          # dx_t
    Z1: np.ndarray          # x_{t-1} (with a trailing 1 when restricted)
    Z2: np.ndarray          # lagged differences (with a 1 when unrestricted)
    R0: np.ndarray
    R1: np.ndarray
    S00: np.ndarray
    S01: np.ndarray
    S11: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns v with v' S11 v = 1
    nobs: int


def _partial_out(Z: np.ndarray, Z2: np.ndarray) -> np.ndarray:
    if Z2.shape[1] == 0:
        return Z.copy()
    coef, *_ = linalg.lstsq(Z2, Z)
    return Z - Z2 @ coef


def _reduced_rank(S00, S01, S11):
    """Solve |lambda S11 - S10 S00^-1 S01| = 0 through Cholesky of S11."""
    try:
        L = linalg.cholesky(S11, lower=True)
    except linalg.LinAlgError:
        raise CollinearityError("S11 is not positive definite") from None
    try:
        c00 = linalg.cho_factor(S00, lower=True)
    except linalg.LinAlgError:
        raise CollinearityError("S00 is not positive definite") from None
    A = linalg.solve_triangular(L, S01.T, lower=True)           # L^-1 S10
    M = A @ linalg.cho_solve(c00, A.T)
    M = 0.5 * (M + M.T)
    lam, W = linalg.eigh(M)
    order = np.argsort(lam)[::-1]
    lam, W = lam[order], W[:, order]
    V = linalg.solve_triangular(L.T, W, lower=False)
    return np.clip(lam, 0.0, 1.0 - 1e-15), V


def _moments(X: np.ndarray, p: int, det: VecmDeterministic) -> _Moments:
    T, i = X.shape
    if p < 1:
        raise ConfigurationError("lag order p must be at least 1")
    if T <= i * p + 10:
        raise InsufficientDataError(f"{T} observations are too few for {i} variables and p={p}")
    dx = np.diff(X, axis=0)                  # dx[t-1] = x_t - x_{t-1}
    t = np.arange(p, T)
    n = t.shape[0]
    Z0 = dx[t - 1]
    Z1 = X[t - 1]
    lagged = [dx[t - 1 - j] for j in range(1, p)]
    if det is VecmDeterministic.RESTRICTED_CONSTANT:
        Z1 = np.column_stack([Z1, np.ones(n)])
        Z2 = np.column_stack(lagged) if lagged else np.empty((n, 0))
    else:
        Z2 = np.column_stack(lagged + [np.ones(n)])
    R0 = _partial_out(Z0, Z2)
    R1 = _partial_out(Z1, Z2)
    S00 = R0.T @ R0 / n
    S01 = R0.T @ R1 / n
    S11 = R1.T @ R1 / n
    lam, V = _reduced_rank(S00, S01, S11)
    return _Moments(Z0, Z1, Z2, R0, R1, S00, S01, S11, lam, V, n)


# --------------------------------------------------------------------------
# rank test

@dataclass(frozen=True, eq=False)
class RankTestOutcome:
    eigenvalues: np.ndarray
    trace_stats: np.ndarray            # index r = 0..i, trace_stats[i] == 0
    critical_values: tuple[Mapping[str, float], ...]   # for r = 0..i-1
    selected_rank: int
    level: float
    nobs: int
    p: int
    deterministic: VecmDeterministic


def johansen_rank_test(panel, p: int = 2, deterministic="restricted_constant",
                       level: float = 0.05) -> RankTestOutcome:
    """Sequential trace test; the selected rank is the first non-rejected r."""
    det = _det(deterministic)
    X = _values(panel)
    i = X.shape[1]
    if i > 7:
        raise ConfigurationError("trace critical values are tabulated for at most 7 variables")
    mom = _moments(X, p, det)
    lam = mom.eigenvalues[:i]
    logs = np.log1p(-lam)
    trace = np.array([-mom.nobs * float(np.sum(logs[r:])) for r in range(i)] + [0.0])
    crit = tuple(cv.johansen_trace_critical_values(det.value, i - r) for r in range(i))
    key = cv.level_key(level)
    selected = next((r for r in range(i) if trace[r] < crit[r][key]), i)
    return RankTestOutcome(lam, trace, crit, selected, level, mom.nobs, p, det)


# --------------------------------------------------------------------------
# VECM

@dataclass(frozen=True, eq=False)
class VecmModel:
    names: tuple[str, ...]
    p: int
    r: int
    deterministic: VecmDeterministic
    numeraire: int
    alpha: np.ndarray            # i x r
    beta: np.ndarray             # i x r, numeraire-normalized
    beta_const: np.ndarray       # r (restricted constant; zeros otherwise)
    gamma: tuple[np.ndarray, ...]
    mu: np.ndarray               # unrestricted intercept (zeros when restricted)
    sigma: np.ndarray
    residuals: np.ndarray
    fitted: np.ndarray
    beta_cov: np.ndarray         # covariance of the free elements of vec(beta_full)
    beta_se: np.ndarray          # same shape as beta_full, zero on normalized entries
    eigenvalues: np.ndarray
    nobs: int
    data: np.ndarray = field(repr=False)
    moments: _Moments = field(repr=False)
    meta: Mapping[str, object] = field(default_factory=dict)

    @property
    def dims(self) -> int:
        return self.alpha.shape[0]

    @property
    def beta_full(self) -> np.ndarray:
        """Cointegrating vectors including the restricted-constant row."""
        if self.deterministic is VecmDeterministic.RESTRICTED_CONSTANT:
            return np.vstack([self.beta, self.beta_const[None, :]])
        return self.beta

    @property
    def pi(self) -> np.ndarray:
        return self.alpha @ self.beta.T

    def error_correction_terms(self) -> np.ndarray:
        """beta' x_{t-1} (plus constant) on the estimation sample."""
        return self.moments.Z1 @ self.beta_full

    def levels_form(self) -> tuple[np.ndarray, tuple[np.ndarray, ...]]:
        """Intercept and A_1..A_p of the implied levels VAR."""
        i = self.dims
        G = list(self.gamma)
        A = []
        for k in range(1, self.p + 1):
            Ak = np.zeros((i, i))
            if k == 1:
                Ak += np.eye(i) + self.pi
            if k <= self.p - 1:
                Ak += G[k - 1]
            if k >= 2:
                Ak -= G[k - 2]
            A.append(Ak)
        c = self.mu + self.alpha @ self.beta_const
        return c, tuple(A)

    def levels_fitted_differences(self) -> np.ndarray:
        """Fitted dx_t recomputed from the levels-VAR representation."""
        c, A = self.levels_form()
        X = self.data
        t = np.arange(self.p, X.shape[0])
        xhat = np.tile(c, (t.shape[0], 1))
        for k, Ak in enumerate(A, start=1):
            xhat += X[t - k] @ Ak.T
        return xhat - X[t - 1]


def _normalization_rows(i: int, r: int, numeraire: int) -> list[int]:
    rows = [numeraire] + [j for j in range(i) if j != numeraire]
    return rows[:r]


def vecm_estimate(panel, p: int = 2, r: int = 1, deterministic="restricted_constant",
                  numeraire: int | str = 0) -> VecmModel:
    det = _det(deterministic)
    X = _values(panel)
    T, i = X.shape
    names = _names(panel, i)
    if isinstance(numeraire, str):
        if numeraire not in names:
            raise ConfigurationError(f"unknown numeraire market {numeraire!r}")
        numeraire = names.index(numeraire)
    if not 0 <= numeraire < i:
        raise ConfigurationError(f"numeraire index {numeraire} out of range")
    if not 1 <= r <= i - 1:
        raise RankDomainError(f"cointegration rank must lie in 1..{i - 1}, got {r}")
    mom = _moments(X, p, det)
    n = mom.nobs
    norm = _normalization_rows(i, r, numeraire)
    raw = mom.eigenvectors[:, :r]
    pivot = raw[norm, :]
    if abs(np.linalg.det(pivot)) < 1e-300:
        raise CollinearityError("cointegrating vectors cannot be normalized on the numeraire")
    beta_full = raw @ np.linalg.inv(pivot)
    beta_full[norm, :] = np.eye(r)
    ec = mom.Z1 @ beta_full
    reg = np.column_stack([ec, mom.Z2])
    coef, *_ = linalg.lstsq(reg, mom.Z0)
    alpha = coef[:r].T
    rest = coef[r:].T                          # i x cols(Z2)
    gamma = tuple(rest[:, (k - 1) * i: k * i] for k in range(1, p))
    if det is VecmDeterministic.UNRESTRICTED_CONSTANT:
        mu = rest[:, -1].copy()
        beta, beta_const = beta_full, np.zeros(r)
    else:
        mu = np.zeros(i)
        beta, beta_const = beta_full[:i], beta_full[i]
    fitted = reg @ coef
    resid = mom.Z0 - fitted
    sigma = resid.T @ resid / n
    sigma = 0.5 * (sigma + sigma.T)
    # information for the free rows of beta given alpha and sigma
    free = [j for j in range(beta_full.shape[0]) if j not in norm]
    a_info = alpha.T @ linalg.solve(sigma, alpha, assume_a="pos")
    R1f = mom.R1[:, free]
    b_info = R1f.T @ R1f
    beta_cov = np.kron(linalg.inv(a_info), linalg.inv(b_info))
    se = np.zeros_like(beta_full)
    diag = np.sqrt(np.clip(np.diag(beta_cov), 0.0, None))
    for c in range(r):
        se[free, c] = diag[c * len(free):(c + 1) * len(free)]
    return VecmModel(
        names, p, r, det, numeraire, alpha, beta, beta_const, gamma, mu, sigma, resid, fitted,
        beta_cov, se, mom.eigenvalues, n, X.copy(), mom,
        meta={"normalization_rows": norm, "free_rows": free},
    )


# --------------------------------------------------------------------------
# restrictions on beta

@dataclass(frozen=True)
class RestrictionTestResult:
    statistic: float
    df: int
    pvalue: float
    restricted_eigenvalues: tuple[float, ...]


def homogeneity_restriction(model: VecmModel, variables: Sequence[int | str] | None = None) -> np.ndarray:
    """H with beta = H phi imposing that the listed coefficients sum to zero.

    With the numeraire fixed at 1 this is "numeraire = 1, the others sum to
    -1"; for a pair it is the (1, -1) proportionality restriction.  The
    restricted-constant row stays free.
    """
    rows = model.beta_full.shape[0]
    if variables is None:
        idx = list(range(model.dims))
    else:
        idx = [model.names.index(v) if isinstance(v, str) else int(v) for v in variables]
    Rt = np.zeros((1, rows))
    Rt[0, idx] = 1.0
    return linalg.null_space(Rt)


def beta_restriction_test(model: VecmModel, H) -> RestrictionTestResult:
    """Likelihood-ratio test of beta = H phi (same H for every vector)."""
    H = np.asarray(H, dtype=float)
    if H.ndim == 1:
        H = H[:, None]
    mom = model.moments
    rows = mom.S11.shape[0]
    if H.shape[0] != rows:
        raise RestrictionError(f"H must have {rows} rows, got {H.shape[0]}")
    s = H.shape[1]
    r = model.r
    if np.linalg.matrix_rank(H) < s:
        raise RestrictionError("H must have full column rank")
    if s < r:
        raise RestrictionError(f"H leaves {s} free directions for rank {r}: unidentified")
    df = r * (rows - s)
    if df < 1:
        raise RestrictionError("restriction is not binding")
    try:
        lam_h, _ = _reduced_rank(mom.S00, mom.S01 @ H, H.T @ mom.S11 @ H)
    except CollinearityError as exc:
        raise RestrictionError(f"restricted model is unidentified: {exc}") from None
    lam = mom.eigenvalues[:r]
    stat = mom.nobs * float(np.sum(np.log1p(-lam_h[:r]) - np.log1p(-lam)))
    if stat < 0.0:
        stat = 0.0 if stat > -1e-9 * max(1.0, mom.nobs) else stat
    return RestrictionTestResult(stat, df, chi_square_survival(max(stat, 0.0), df),
                                 tuple(float(v) for v in lam_h[:r]))


# --------------------------------------------------------------------------
# levels VAR

@dataclass(frozen=True, eq=False)
class VarFit:
    names: tuple[str, ...]
    p: int
    deterministic: str
    equations: tuple[RegressionFit, ...]
    nobs: int

    def equation(self, name: str) -> RegressionFit:
        return self.equations[self.names.index(name)]


def _var_design(X: np.ndarray, names, lags: Mapping[str, int] | int, deterministic: str, start: int):
    T, i = X.shape
    n = T - start
    cols, cnames = [], []
    if deterministic == "constant":
        cols.append(np.ones(n))
        cnames.append("const")
    elif deterministic != "none":
        raise ConfigurationError(f"levels VAR deterministic must be 'constant' or 'none', got {deterministic!r}")
    for j, name in enumerate(names):
        pj = lags if isinstance(lags, int) else lags.get(name, 0)
        for k in range(1, pj + 1):
            cols.append(X[start - k: T - k, j])
            cnames.append(f"{name}.L{k}")
    return DesignMatrix(tuple(cnames), np.column_stack(cols))


def levels_var_fit(panel, p: int = 2, deterministic: str = "constant") -> VarFit:
    """Equation-by-equation OLS of each x_it on a constant and p lags of all variables."""
    X = _values(panel)
    T, i = X.shape
    names = _names(panel, i)
    if p < 1:
        raise ConfigurationError("lag order p must be at least 1")
    if T <= i * p + 10:
        raise InsufficientDataError(f"{T} observations are too few for a VAR({p}) in {i} variables")
    design = _var_design(X, names, p, deterministic, p)
    eqs = tuple(ols_fit(design, X[p:, j]) for j in range(i))
    return VarFit(names, p, deterministic, eqs, T - p)


@dataclass(frozen=True)
class SumTestResult:
    sum: float
    statistic: float
    df: int
    pvalue: float
    nobs: int


def var_sum_integration_test(panel, p: int = 2, equation_index: int = 0,
                             deterministic: str = "constant") -> SumTestResult:
    """Wald test that every lag coefficient of one VAR equation sums to one."""
    fit = levels_var_fit(panel, p, deterministic).equations[equation_index]
    R = np.array([[0.0 if n == "const" else 1.0 for n in fit.names]])
    w: WaldResult = wald_linear_restriction(fit, R, [1.0])
    return SumTestResult(float(R[0] @ fit.params), w.statistic, w.df, w.pvalue, fit.nobs)


def select_var_order(panel, max_p: int = 8, deterministic: str = "constant") -> int:
    """Lag order minimizing the system Schwarz criterion on a common sample."""
    X = _values(panel)
    T, i = X.shape
    names = _names(panel, i)
    best, best_p = math.inf, 1
    for p in range(1, max_p + 1):
        design = _var_design(X, names, p, deterministic, max_p)
        resid = np.column_stack([ols_fit(design, X[max_p:, j]).residuals for j in range(i)])
        n = resid.shape[0]
        sign, logdet = np.linalg.slogdet(resid.T @ resid / n)
        if sign <= 0:
            raise CollinearityError("VAR residual covariance is singular")
        crit = logdet + design.matrix.shape[1] * i * math.log(n) / n
        if crit < best - 1e-12:
            best, best_p = crit, p
    return best_p


# --------------------------------------------------------------------------
# text dump

def _fmt_matrix(M: np.ndarray, rows: Sequence[str], cols: Sequence[str]) -> list[str]:
    width = 12
    out = [" " * 10 + "".join(f"{c:>{width}}" for c in cols)]
    for name, row in zip(rows, M):
        out.append(f"{name:<10}" + "".join(f"{v:>{width}.5f}" for v in row))
    return out


def format_vecm(model: VecmModel, rank: RankTestOutcome | None = None) -> str:
    names = list(model.names)
    vecs = [f"CE{j + 1}" for j in range(model.r)]
    lines = [
        f"VECM  p={model.p}  r={model.r}  deterministic={model.deterministic.value}  "
        f"numeraire={names[model.numeraire]}  nobs={model.nobs}",
        "",
        "eigenvalues: " + " ".join(f"{v:.6f}" for v in model.eigenvalues[:model.dims]),
    ]
    if rank is not None:
        lines += ["", "trace test (r, statistic, 10%, 5%, 1%)"]
        for r in range(len(rank.critical_values)):
            c = rank.critical_values[r]
            lines.append(f"  r<={r}  {rank.trace_stats[r]:>12.5f}  {c['10%']:>9.2f}  {c['5%']:>9.2f}  {c['1%']:>9.2f}")
        lines.append(f"  selected rank at {rank.level:.0%}: {rank.selected_rank}")
    rows = names + (["const"] if model.deterministic is VecmDeterministic.RESTRICTED_CONSTANT else [])
    lines += ["", "beta (normalized)"] + _fmt_matrix(model.beta_full, rows, vecs)
    lines += ["", "beta std. errors"] + _fmt_matrix(model.beta_se, rows, vecs)
    lines += ["", "alpha"] + _fmt_matrix(model.alpha, names, vecs)
    for k, G in enumerate(model.gamma, start=1):
        lines += ["", f"Gamma_{k}"] + _fmt_matrix(G, names, names)
    if model.deterministic is VecmDeterministic.UNRESTRICTED_CONSTANT:
        lines += ["", "mu"] + _fmt_matrix(model.mu[:, None], names, ["mu"])
    lines += ["", "Sigma"] + _fmt_matrix(model.sigma, names, names)
    return "\n".join(lines) + "\n"
