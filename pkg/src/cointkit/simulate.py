"""Synthetic data-generating processes and the Monte Carlo harness.

Innovations come from a counter-based generator: the standard normal draw
for dimension ``d`` at step ``t`` depends only on ``(seed, d, t)``, so panels
are reproducible regardless of how replications are scheduled.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Callable, Mapping

import numpy as np
from scipy import linalg, special

from .data import MarketPanel
from .errors import CointkitError, ConfigurationError, HarnessError

__all__ = [
    "DgpSpec",
    "McResult",
    "generate",
    "innovations",
    "standard_normal_stream",
    "monte_carlo",
    "load_dgp_spec",
    "dump_dgp_spec",
    "QUANTILE_LEVELS",
]

KINDS = ("random_walk", "cointegrated_system", "break_shift")
BREAK_MODELS = ("level_shift", "regime_shift")
QUANTILE_LEVELS = (0.01, 0.05, 0.10, 0.50, 0.90, 0.95, 0.99)
START_DATE = "1973-01-01"


@dataclass(frozen=True)
class DgpSpec:
    """Declarative description of a simulated panel.

    For ``cointegrated_system`` and ``break_shift`` the recursion is

        dx_t = alpha (beta' x_{t-1} - ce_constant - shift_t) + sum_k gamma_k dx_{t-k} + mu + e_t

    where ``shift_t`` is zero before the break.  ``shift_vector`` has one
    entry for ``level_shift`` (the intercept moves by that amount) and ``dims``
    entries for ``regime_shift`` (``beta`` moves by that vector).
    """

    kind: str
    dims: int
    T: int
    seed: int = 0
    innovation_cov: tuple[tuple[float, ...], ...] | None = None
    alpha: tuple[tuple[float, ...], ...] | None = None
    beta: tuple[tuple[float, ...], ...] | None = None
    gamma: tuple[tuple[tuple[float, ...], ...], ...] = ()
    mu: tuple[float, ...] | None = None
    ce_constant: tuple[float, ...] | None = None
    break_tau: float | None = None
    break_model: str = "level_shift"
    shift_vector: tuple[float, ...] | None = None
    burn_in: int | None = None
    names: tuple[str, ...] | None = None
    start_date: str = START_DATE

    def __post_init__(self):
        for f in fields(self):
            object.__setattr__(self, f.name, _tupled(getattr(self, f.name)))
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown DGP kind {self.kind!r}")
        if self.dims < 1 or self.T < 1:
            raise ConfigurationError("dims and T must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigurationError("seed must be a 64-bit unsigned integer")
        if self.burn_in is not None and self.burn_in < 0:
            raise ConfigurationError("burn_in must be nonnegative")
        if self.names is not None and len(self.names) != self.dims:
            raise ConfigurationError("names must have one entry per dimension")
        cov = self.covariance
        if cov.shape != (self.dims, self.dims) or not np.allclose(cov, cov.T):
            raise ConfigurationError("innovation_cov must be a symmetric dims x dims matrix")
        if np.linalg.eigvalsh(cov).min() < -1e-12 * max(1.0, np.abs(cov).max()):
            raise ConfigurationError("innovation_cov must be positive semidefinite")
        if self.kind != "random_walk":
            self._check_system()

    def _check_system(self):
        if self.alpha is None or self.beta is None:
            raise ConfigurationError(f"{self.kind} needs alpha and beta")
        a, b = self.alpha_matrix, self.beta_matrix
        if a.shape[0] != self.dims or b.shape[0] != self.dims or a.shape[1] != b.shape[1]:
            raise ConfigurationError(
                f"alpha {a.shape} and beta {b.shape} are inconsistent with dims={self.dims}"
            )
        r = a.shape[1]
        if np.linalg.matrix_rank(a) != r or np.linalg.matrix_rank(b) != r:
            raise ConfigurationError("alpha and beta must both have full column rank")
        for g in self.gamma_matrices:
            if g.shape != (self.dims, self.dims):
                raise ConfigurationError("each gamma matrix must be dims x dims")
        if self.mu is not None and len(self.mu) != self.dims:
            raise ConfigurationError("mu must have dims entries")
        if self.ce_constant is not None and len(self.ce_constant) != r:
            raise ConfigurationError("ce_constant must have one entry per cointegrating vector")
        if self.kind == "break_shift":
            if self.break_tau is None or not 0.0 < self.break_tau < 1.0:
                raise ConfigurationError("break_tau must lie in (0, 1)")
            if self.break_model not in BREAK_MODELS:
                raise ConfigurationError(f"break_model must be one of {BREAK_MODELS}")
            if r != 1:
                raise ConfigurationError("break_shift supports a single cointegrating vector")
            want = 1 if self.break_model == "level_shift" else self.dims
            if self.shift_vector is None or len(self.shift_vector) != want:
                raise ConfigurationError(f"{self.break_model} needs a shift_vector of length {want}")

    # -- derived views
    @property
    def covariance(self) -> np.ndarray:
        if self.innovation_cov is None:
            return np.eye(self.dims)
        return np.atleast_2d(np.asarray(self.innovation_cov, dtype=float))

    @property
    def alpha_matrix(self) -> np.ndarray:
        a = np.asarray(self.alpha, dtype=float)
        return a[:, None] if a.ndim == 1 else a

    @property
    def beta_matrix(self) -> np.ndarray:
        b = np.asarray(self.beta, dtype=float)
        return b[:, None] if b.ndim == 1 else b

    @property
    def gamma_matrices(self) -> list[np.ndarray]:
        return [np.asarray(g, dtype=float) for g in self.gamma]

    @property
    def effective_burn_in(self) -> int:
        if self.burn_in is not None:
            return int(self.burn_in)
        return 0 if self.kind == "random_walk" else 200

    @property
    def break_index(self) -> int | None:
        """0-based first post-break observation of the returned panel."""
        if self.kind != "break_shift":
            return None
        return int(math.floor(self.T * self.break_tau))

    def with_seed(self, seed: int) -> "DgpSpec":
        return _replace(self, seed=int(seed))

    def to_dict(self) -> dict:
        return {k: _plain(v) for k, v in asdict(self).items()}

    @classmethod
    def from_dict(cls, doc: Mapping) -> "DgpSpec":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(doc) - known)
        if unknown:
            raise ConfigurationError(f"unknown DGP spec keys: {', '.join(unknown)}")
        missing = [k for k in ("kind", "dims", "T") if k not in doc]
        if missing:
            raise ConfigurationError(f"DGP spec is missing required keys: {', '.join(missing)}")
        return cls(**{k: _tupled(v) for k, v in doc.items()})


def _replace(spec: DgpSpec, **changes) -> DgpSpec:
    doc = {f.name: getattr(spec, f.name) for f in fields(spec)}
    doc.update(changes)
    return DgpSpec(**doc)


def _tupled(v):
    if isinstance(v, np.ndarray):
        v = v.tolist()
    if isinstance(v, (list, tuple)):
        return tuple(_tupled(x) for x in v)
    if isinstance(v, np.generic):
        return v.item()
    return v


def _plain(v):
    if isinstance(v, tuple):
        return [_plain(x) for x in v]
    return v


def load_dgp_spec(path) -> DgpSpec:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigurationError(f"{path}: DGP spec must be a JSON object")
    return DgpSpec.from_dict(doc)


def dump_dgp_spec(spec: DgpSpec, path) -> None:
    Path(path).write_text(json.dumps(spec.to_dict(), indent=2, sort_keys=True) + "\n")


# --------------------------------------------------------------------------
# innovations

def standard_normal_stream(seed: int, dim: int, n: int) -> np.ndarray:
    """First ``n`` N(0,1) draws of the stream keyed by ``(seed, dim)``."""
    bitgen = np.random.Philox(key=int(seed) | (int(dim) << 64))
    raw = bitgen.random_raw(n)
    u = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
    return special.ndtri(u)


def _factor(cov: np.ndarray) -> np.ndarray:
    try:
        return linalg.cholesky(cov, lower=True)
    except linalg.LinAlgError:
        w, V = linalg.eigh(cov)
        return V * np.sqrt(np.clip(w, 0.0, None))


def _all_innovations(spec: DgpSpec) -> np.ndarray:
    n = spec.effective_burn_in + spec.T
    Z = np.column_stack([standard_normal_stream(spec.seed, d, n) for d in range(spec.dims)])
    return Z @ _factor(spec.covariance).T


def innovations(spec: DgpSpec) -> np.ndarray:
    """The T x dims innovations entering the returned (post burn-in) panel."""
    return _all_innovations(spec)[spec.effective_burn_in:]


# --------------------------------------------------------------------------
# generation

def _simulate_system(spec: DgpSpec, eps: np.ndarray) -> np.ndarray:
    n, i = eps.shape
    alpha, beta = spec.alpha_matrix, spec.beta_matrix
    gammas = spec.gamma_matrices
    mu = np.zeros(i) if spec.mu is None else np.asarray(spec.mu, dtype=float)
    const = np.zeros(beta.shape[1]) if spec.ce_constant is None else np.asarray(spec.ce_constant, dtype=float)
    start_break = None
    if spec.kind == "break_shift":
        start_break = spec.effective_burn_in + spec.break_index
        shift = np.asarray(spec.shift_vector, dtype=float)
    x = np.zeros((n, i))
    dx = np.zeros((n, i))
    prev = np.zeros(i)
    for t in range(n):
        after = start_break is not None and t >= start_break
        if after and spec.break_model == "regime_shift":
            z = (beta[:, 0] + shift) @ prev - const
        else:
            z = beta.T @ prev - const
            if after:
                z = z - shift
        step = alpha @ z + mu + eps[t]
        for k, g in enumerate(gammas, start=1):
            if t - k >= 0:
                step = step + g @ dx[t - k]
        dx[t] = step
        x[t] = prev + step
        prev = x[t]
    return x


def generate(spec: DgpSpec) -> MarketPanel:
    eps = _all_innovations(spec)
    if spec.kind == "random_walk":
        x = np.cumsum(eps, axis=0)
    else:
        x = _simulate_system(spec, eps)
    x = x[spec.effective_burn_in:]
    names = spec.names or tuple(f"x{d + 1}" for d in range(spec.dims))
    calendar = np.busday_offset(np.datetime64(spec.start_date, "D"), np.arange(spec.T), roll="forward")
    return MarketPanel(
        names, calendar, x,
        provenance=(f"simulate:{spec.kind}:seed={spec.seed}",),
        metadata={"dgp": spec.to_dict()},
    )


# --------------------------------------------------------------------------
# Monte Carlo

@dataclass(frozen=True, eq=False)
class McResult:
    replications: int
    rejection_rate: float
    statistic_quantiles: Mapping[float, float]
    seeds_used: range
    failures: int = 0
    failure_messages: tuple[str, ...] = ()
    statistics: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)
    rejections: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=bool), repr=False)


def _evaluate(test, panel, level):
    out = test(panel)
    if isinstance(out, tuple):
        stat, rejected = out
    elif isinstance(out, (bool, np.bool_)):
        stat, rejected = math.nan, bool(out)
    else:
        stat, rejected = out.statistic, out.rejects(level)
    return (math.nan if stat is None else float(stat)), bool(rejected)


def monte_carlo(spec: DgpSpec, reps: int, test: Callable, level: float = 0.05,
                workers: int | None = None, max_failure_rate: float = 0.05) -> McResult:
    """Run ``test`` on ``reps`` panels with seeds ``spec.seed + k``.

    ``test`` returns ``(statistic, rejected)``, a bare boolean, or an object
    with ``statistic`` and ``rejects(level)``.  Library errors raised inside
    a replication are counted as failures and excluded.
    """
    if reps < 1:
        raise ConfigurationError("reps must be at least 1")
    seeds = range(spec.seed, spec.seed + reps)

    def one(seed):
        try:
            return _evaluate(test, generate(spec.with_seed(seed)), level), None
        except (CointkitError, np.linalg.LinAlgError, FloatingPointError) as exc:
            return None, f"seed {seed}: {type(exc).__name__}: {exc}"

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, seeds))
    else:
        results = [one(s) for s in seeds]

    msgs = tuple(m for _, m in results if m is not None)
    ok = [r for r, _ in results if r is not None]
    if len(msgs) > max_failure_rate * reps or not ok:
        raise HarnessError(f"{len(msgs)} of {reps} replications failed; first: {msgs[:1]}")
    stats = np.array([s for s, _ in ok])
    rej = np.array([r for _, r in ok], dtype=bool)
    finite = stats[np.isfinite(stats)]
    quant = {q: float(v) for q, v in zip(QUANTILE_LEVELS, np.quantile(finite, QUANTILE_LEVELS))} if finite.size else {}
    return McResult(reps, float(rej.mean()), quant, seeds, len(msgs), msgs, stats, rej)
