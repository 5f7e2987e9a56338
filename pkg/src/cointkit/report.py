"""Analysis configuration, the end-to-end pipeline and report rendering."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import scipy

from . import __version__
from .causality import causality_matrix
from .cointegration import (
    BreakModel,
    StatisticKind,
    engle_granger_test,
    gh_test,
    write_profile_csv,
)
from .critical_values import LEVEL_VALUES
from .data import (
    AlignmentRoles,
    MarketPanel,
    apply_closing_time_alignment,
    descriptive_stats,
    difference,
    log_transform,
    read_panel_csv,
    rebase_to_relative,
)
from .errors import CointkitError, ConfigurationError, DomainError, MissingBaseError
from .formatting import fmt_pvalue, fmt_stat, starred, stars, stars_from_level
from .linreg import cusum_sq_test, cusum_test
from .unitroot import adf_test, kpss_test
from .vecm import (
    beta_restriction_test,
    format_vecm,
    homogeneity_restriction,
    johansen_rank_test,
    var_sum_integration_test,
    vecm_estimate,
)

__all__ = ["AnalysisConfig", "ReportBlock", "ReportDocument", "run_pipeline", "write_report", "TESTS"]

TESTS = ("descriptive", "unit_root", "stability", "gh", "johansen", "causality", "multivariate", "bivariate")
FORMATS = ("text", "csv-bundle")
TABLE_FILES = {
    "T1": "T1_unit_root.csv",
    "T2": "T2_gregory_hansen.csv",
    "T3": "T3_causality.csv",
    "T4": "T4_multivariate.csv",
    "T5": "T5_bivariate.csv",
}


@dataclass(frozen=True)
class AnalysisConfig:
    input: str | None = None
    base_date: str | None = None
    numeraire: str | None = None
    p: int = 2
    rank: int = 1
    unit_root_specs: tuple[str, ...] = ("constant", "constant_and_trend")
    vecm_deterministic: str = "restricted_constant"
    var_deterministic: str = "constant"
    gh_models: tuple[str, ...] = ("level_shift", "level_shift_with_trend", "regime_shift")
    gh_statistics: tuple[str, ...] = ("ADF", "Zt", "Za")
    gh_regressand: str | None = None
    trim: float = 0.15
    level: float = 0.05
    causality_mode: str = "levels_var"
    alignment: Mapping[str, Sequence[str]] = field(default_factory=dict)
    tests: tuple[str, ...] = TESTS
    seed: int = 0
    output: str | None = None
    format: str = "text"
    workers: int = 1
    profiles: bool = False

    def __post_init__(self):
        if self.p < 1:
            raise ConfigurationError("p must be at least 1")
        if self.rank < 1:
            raise ConfigurationError("rank must be at least 1")
        if not any(math.isclose(self.level, v) for v in LEVEL_VALUES.values()):
            raise ConfigurationError(f"level must be one of 0.01, 0.05, 0.10; got {self.level}")
        if not 0.0 < self.trim < 0.5:
            raise ConfigurationError("trim must lie in (0, 0.5)")
        bad = [t for t in self.tests if t not in TESTS]
        if bad:
            raise ConfigurationError(f"unknown tests {bad}; choose from {TESTS}")
        if self.format not in FORMATS:
            raise ConfigurationError(f"format must be one of {FORMATS}")
        if self.causality_mode not in ("levels_var", "vecm"):
            raise ConfigurationError("causality_mode must be 'levels_var' or 'vecm'")
        unknown = set(self.alignment) - {"first_to_close", "last_to_close"}
        if unknown:
            raise ConfigurationError(f"unknown alignment keys {sorted(unknown)}")
        for name in self.gh_models:
            BreakModel.parse(name)
        for name in self.gh_statistics:
            StatisticKind.parse(name)
        if self.workers < 1:
            raise ConfigurationError("workers must be at least 1")

    @classmethod
    def from_dict(cls, doc: Mapping) -> "AnalysisConfig":
        if not isinstance(doc, Mapping):
            raise ConfigurationError("configuration must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(doc) - known)
        if unknown:
            raise ConfigurationError(f"unknown configuration keys: {', '.join(unknown)}")
        clean = {}
        for k, v in doc.items():
            clean[k] = tuple(v) if isinstance(v, list) else v
        try:
            return cls(**clean)
        except TypeError as exc:
            raise ConfigurationError(f"invalid configuration: {exc}") from None

    @classmethod
    def load(cls, path) -> "AnalysisConfig":
        try:
            doc = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path}: invalid JSON: {exc}") from None
        return cls.from_dict(doc)

    def replace(self, **changes) -> "AnalysisConfig":
        doc = {f.name: getattr(self, f.name) for f in fields(self)}
        doc.update({k: v for k, v in changes.items() if v is not None})
        return AnalysisConfig(**doc)

    def echo(self) -> dict:
        out = {}
        for f in fields(self):
            if f.name in ("output", "workers", "format", "profiles"):
                continue
            v = getattr(self, f.name)
            if f.name == "input" and v is not None:
                v = Path(v).name
            out[f.name] = list(v) if isinstance(v, tuple) else (dict(v) if isinstance(v, Mapping) else v)
        return out


@dataclass
class ReportBlock:
    key: str
    title: str
    columns: tuple[str, ...]
    rows: list[tuple[str, ...]] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    error: str | None = None
    preformatted: str | None = None


@dataclass
class ReportDocument:
    metadata: dict
    blocks: list[ReportBlock]
    notes: list[str]
    profiles: dict = field(default_factory=dict)

    @property
    def failed(self) -> bool:
        return any(b.error for b in self.blocks)

    def block(self, key: str) -> ReportBlock | None:
        return next((b for b in self.blocks if b.key == key), None)


# --------------------------------------------------------------------------
# pipeline stages

def _validate_markets(cfg: AnalysisConfig, names: Sequence[str]) -> None:
    refs = [("numeraire", cfg.numeraire), ("gh_regressand", cfg.gh_regressand)]
    refs += [(f"alignment.{k}", n) for k, v in cfg.alignment.items() for n in v]
    for label, name in refs:
        if name is not None and name not in names:
            raise ConfigurationError(f"{label} references unknown market {name!r}")
    if cfg.rank > len(names) - 1 and any(t in cfg.tests for t in ("johansen", "causality", "multivariate")):
        if len(names) > 1:
            raise ConfigurationError(f"rank {cfg.rank} exceeds {len(names) - 1} for {len(names)} markets")


def _log_panel(raw: MarketPanel, base_date) -> MarketPanel:
    base = base_date if base_date is not None else str(raw.calendar[0])
    return raw.map_series(lambda s: log_transform(rebase_to_relative(s, base)))


def _descriptive_block(panel: MarketPanel) -> ReportBlock:
    block = ReportBlock("P1", "Descriptive statistics of log returns",
                        ("market", "nobs", "mean", "variance", "skewness", "ex.kurtosis", "jarque_bera"))
    for name in panel.names:
        d = descriptive_stats(difference(panel.series(name)))
        block.rows.append((name, str(d.nobs), f"{d.mean:.6f}", f"{d.variance:.6e}", fmt_stat(d.skewness),
                           fmt_stat(d.excess_kurtosis), fmt_stat(d.jarque_bera)))
    return block


def _stability_block(panel: MarketPanel) -> ReportBlock:
    block = ReportBlock("P2", "CUSUM and CUSUM-Q stability of log returns on a constant (5% bounds)",
                        ("market", "test", "stable", "first_crossing"))
    for name in panel.names:
        r = difference(panel.series(name))
        for label, fn in (("CUSUM", cusum_test), ("CUSUM-Q", cusum_sq_test)):
            res = fn(r.values)
            crossing = "-" if res.first_crossing is None else str(r.dates[int(res.first_crossing) - 1])
            block.rows.append((name, label, "yes" if res.stable else "no", crossing))
    return block


def _unit_root_block(panel: MarketPanel, cfg: AnalysisConfig, notes: list[str]) -> ReportBlock:
    block = ReportBlock("T1", "Unit root and stationarity tests in levels and first differences",
                        ("market", "form", "test", "spec", "statistic", "lags/bw", "nobs", "cv_1%", "cv_5%"))
    for name in panel.names:
        lv = panel.series(name)
        for form, s in (("levels", lv), ("differences", difference(lv))):
            for spec in cfg.unit_root_specs:
                for test in (adf_test, kpss_test):
                    out = test(s, spec)
                    block.rows.append((
                        name, form, out.test, spec, starred(out.statistic, stars_from_level(out.reject_at)),
                        str(out.lags_used), str(out.nobs),
                        f"{out.critical_values['1%']:.3f}", f"{out.critical_values['5%']:.3f}",
                    ))
    block.notes.append("ADF: lag order by SBC up to 12(T/100)^(1/4); KPSS: Bartlett bandwidth 4(T/100)^(2/9).")
    notes.append("T1 ADF critical values: finite-sample response surface at the regression sample size.")
    return block


def _gh_block(log_panel: MarketPanel, cfg: AnalysisConfig, notes: list[str], profiles: dict) -> ReportBlock:
    block = ReportBlock(
        "T2", "Residual-based cointegration tests with one structural break",
        ("model", "statistic_kind", "statistic", "tau", "break_index", "break_date", "lags", "nobs", "cv_1%", "cv_5%"),
    )
    names = list(log_panel.names)
    dep = cfg.gh_regressand or names[0]
    roles = AlignmentRoles(frozenset(cfg.alignment.get("first_to_close", ())),
                           frozenset(cfg.alignment.get("last_to_close", ())))
    view = apply_closing_time_alignment(log_panel, roles).view(dep)
    offsets = view.metadata.get("lag_offsets", {})
    y = view.series(dep)
    xs = [view.series(n) for n in names if n != dep]
    notes.append(f"T2 regressand {dep}; regressors {', '.join(n for n in names if n != dep)}; "
                 f"lag offsets {json.dumps(dict(sorted(offsets.items())), sort_keys=True)}; trim {cfg.trim}.")
    eg = engle_granger_test(y, xs, "constant")
    if eg.exact:
        block.rows.append(("none", "EG_ADF", "exact", "-", "-", "-", "-", str(eg.nobs), "-", "-"))
    else:
        block.rows.append(("none", "EG_ADF", starred(eg.statistic, stars_from_level(eg.reject_at)), "-", "-", "-",
                           str(eg.lags), str(eg.nobs),
                           f"{eg.critical_values['1%']:.3f}", f"{eg.critical_values['5%']:.3f}"))
    for model in cfg.gh_models:
        for stat in cfg.gh_statistics:
            out = gh_test(y, xs, model, stat, cfg.trim, workers=cfg.workers)
            bp = out.breakpoint
            date = str(y.dates[bp.break_index])
            block.rows.append((
                out.model.code, out.statistic_kind.value, starred(out.statistic, stars_from_level(out.reject_at)),
                f"{bp.tau:.5f}", str(bp.break_index), date, "-" if out.lags is None else str(out.lags),
                str(out.nobs), f"{out.critical_values['1%']:.2f}", f"{out.critical_values['5%']:.2f}",
            ))
            profiles[(out.model.value, out.statistic_kind.value)] = out
    block.notes.append("break_date is the first observation of the post-break regime.")
    return block


def _johansen_stage(panel: MarketPanel, cfg: AnalysisConfig, notes: list[str]):
    rank = johansen_rank_test(panel, cfg.p, cfg.vecm_deterministic, cfg.level)
    numeraire = cfg.numeraire or panel.names[0]
    model = vecm_estimate(panel, cfg.p, cfg.rank, cfg.vecm_deterministic, numeraire)
    notes.append(f"Johansen trace test selects rank {rank.selected_rank} at {cfg.level:.0%}; "
                 f"VECM estimated at configured rank {cfg.rank} (p={cfg.p}, {cfg.vecm_deterministic}, "
                 f"numeraire {numeraire}, nobs {model.nobs}).")
    return rank, model


def _causality_block(panel: MarketPanel, cfg: AnalysisConfig, model, notes: list[str]) -> ReportBlock:
    mat = causality_matrix(panel, cfg.p, cfg.causality_mode,
                           model if cfg.causality_mode == "vecm" else None, workers=cfg.workers)
    table = mat.table()
    block = ReportBlock("T3", f"Granger causality F statistics (rows cause, columns effect; mode {mat.mode})",
                        tuple(table[0]), [tuple(r) for r in table[1:]])
    any_cell = next(iter(mat.cells.values()))
    notes.append(f"T3 mode {mat.mode}, lag order {any_cell.lag_order}, F df ({any_cell.df[0]}, {any_cell.df[1]}), "
                 f"nobs {any_cell.nobs}.")
    block.notes.append("Chi-square form equals df_num times F.")
    return block


def _multivariate_block(panel: MarketPanel, cfg: AnalysisConfig, rank, model, notes: list[str]) -> ReportBlock:
    block = ReportBlock("T4", "Long-run integration tests for the multivariate system",
                        ("test", "equation", "estimate", "statistic", "df", "pvalue", "nobs"))
    for j, name in enumerate(panel.names):
        res = var_sum_integration_test(panel, cfg.p, j, cfg.var_deterministic)
        block.rows.append(("sum_of_lag_coefficients=1", name, f"{res.sum:.5f}",
                           starred(res.statistic, stars(res.pvalue)), str(res.df), fmt_pvalue(res.pvalue),
                           str(res.nobs)))
    H = homogeneity_restriction(model)
    lr = beta_restriction_test(model, H)
    block.rows.append(("beta_coefficients_sum_to_zero", "-", "-", starred(lr.statistic, stars(lr.pvalue)),
                       str(lr.df), fmt_pvalue(lr.pvalue), str(model.nobs)))
    for j, name in enumerate(panel.names):
        for c in range(model.r):
            block.rows.append((f"beta_CE{c + 1}", name, f"{model.beta[j, c]:.5f}", "-", "-",
                               f"se {model.beta_se[j, c]:.5f}", str(model.nobs)))
    block.preformatted = format_vecm(model, rank)
    block.notes.append("Standard errors come from the analytic information matrix of the reduced-rank problem.")
    notes.append(f"T4 levels VAR deterministic {cfg.var_deterministic}; beta restriction df {lr.df}.")
    return block


def _bivariate_block(panel: MarketPanel, cfg: AnalysisConfig, notes: list[str]) -> ReportBlock:
    block = ReportBlock("T5", "Bivariate integration tests, H0: beta = (1, -1)",
                        ("pair", "beta_2", "statistic", "pvalue", "nobs"))
    names = panel.names
    for a in range(len(names)):
        for b in range(a + 1, len(names)):
            sub = panel.select([names[a], names[b]])
            try:
                model = vecm_estimate(sub, cfg.p, 1, cfg.vecm_deterministic, 0)
                lr = beta_restriction_test(model, homogeneity_restriction(model))
            except CointkitError as exc:
                block.rows.append((f"{names[a]}-{names[b]}", "NA", "NA", "NA", "-"))
                block.notes.append(f"{names[a]}-{names[b]}: {type(exc).__name__}: {exc}")
                continue
            block.rows.append((f"{names[a]}-{names[b]}", f"{model.beta[1, 0]:.5f}",
                               starred(lr.statistic, stars(lr.pvalue)), fmt_pvalue(lr.pvalue), str(model.nobs)))
    notes.append(f"T5 bivariate VECMs at rank 1, p={cfg.p}, {cfg.vecm_deterministic}; LR statistics are chi-square(1).")
    return block


def _guard(key: str, title: str, fn, *args) -> ReportBlock:
    try:
        return fn(*args)
    except CointkitError as exc:
        return ReportBlock(key, title, (), error=f"{type(exc).__name__}: {exc}")


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def run_pipeline(config: AnalysisConfig) -> ReportDocument:
    """Run the configured test sequence; block failures are recorded, not raised.

    Configuration and input errors propagate (they mean no report).
    """
    if config.input is None:
        raise ConfigurationError("no input file configured")
    raw = read_panel_csv(config.input)
    _validate_markets(config, raw.names)
    metadata = {
        "tool": "cointkit",
        "version": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "input_sha256": _sha256(config.input),
        "config": config.echo(),
        "markets": list(raw.names),
        "raw_nobs": raw.nobs,
        "first_date": str(raw.calendar[0]),
        "last_date": str(raw.calendar[-1]),
    }
    notes: list[str] = []
    blocks: list[ReportBlock] = []
    profiles: dict = {}
    tests = set(config.tests)
    if not tests:
        return ReportDocument(metadata, blocks, notes)
    try:
        lp = _log_panel(raw, config.base_date)
    except (MissingBaseError, DomainError) as exc:
        raise ConfigurationError(f"cannot rebase input: {exc}") from None
    metadata["base_date"] = config.base_date or str(raw.calendar[0])
    if "descriptive" in tests:
        blocks.append(_guard("P1", "Descriptive statistics", _descriptive_block, lp))
    if "stability" in tests:
        blocks.append(_guard("P2", "Stability tests", _stability_block, lp))
    if "unit_root" in tests:
        blocks.append(_guard("T1", "Unit root tests", _unit_root_block, lp, config, notes))
    if "gh" in tests:
        if lp.dims < 2:
            blocks.append(ReportBlock("T2", "Gregory-Hansen tests", (), error="needs at least two markets"))
        else:
            blocks.append(_guard("T2", "Gregory-Hansen tests", _gh_block, lp, config, notes, profiles))
    rank = model = None
    jerr = None
    if tests & {"johansen", "causality", "multivariate"} and lp.dims >= 2:
        try:
            rank, model = _johansen_stage(lp, config, notes)
        except CointkitError as exc:
            jerr = f"{type(exc).__name__}: {exc}"
    if "causality" in tests:
        if lp.dims < 2:
            blocks.append(ReportBlock("T3", "Granger causality", (), error="needs at least two markets"))
        elif config.causality_mode == "vecm" and model is None:
            blocks.append(ReportBlock("T3", "Granger causality", (), error=f"VECM unavailable: {jerr}"))
        else:
            blocks.append(_guard("T3", "Granger causality", _causality_block, lp, config, model, notes))
    if "multivariate" in tests or "johansen" in tests:
        if model is None:
            blocks.append(ReportBlock("T4", "Multivariate integration", (),
                                      error=jerr or "needs at least two markets"))
        else:
            blocks.append(_guard("T4", "Multivariate integration", _multivariate_block, lp, config, rank, model, notes))
    if "bivariate" in tests:
        if lp.dims < 2:
            blocks.append(ReportBlock("T5", "Bivariate integration", (), error="needs at least two markets"))
        else:
            blocks.append(_guard("T5", "Bivariate integration", _bivariate_block, lp, config, notes))
    notes.append("Markers: ** significant at 1%, * significant at 5%.")
    return ReportDocument(metadata, blocks, notes, profiles)


# --------------------------------------------------------------------------
# rendering

def _render_rows(columns, rows) -> list[str]:
    table = [tuple(columns)] + [tuple(r) for r in rows]
    widths = [max(len(r[j]) for r in table) for j in range(len(columns))]
    lines = []
    for n, r in enumerate(table):
        cells = [r[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(r[1:], widths[1:])]
        lines.append("  ".join(cells).rstrip())
        if n == 0:
            lines.append("  ".join("-" * w for w in widths))
    return lines


def render_text(doc: ReportDocument) -> str:
    out = ["COINTKIT ANALYSIS REPORT", "=" * 24, ""]
    md = doc.metadata
    for key in ("tool", "version", "numpy", "scipy", "input_sha256", "markets", "raw_nobs", "first_date",
                "last_date", "base_date"):
        if key in md:
            val = md[key]
            out.append(f"{key:<14}{', '.join(val) if isinstance(val, list) else val}")
    out.append("config        " + json.dumps(md["config"], sort_keys=True))
    for b in doc.blocks:
        out += ["", f"[{b.key}] {b.title}", ""]
        if b.error:
            out.append(f"FAILED: {b.error}")
            continue
        out += _render_rows(b.columns, b.rows)
        if b.preformatted:
            out += [""] + b.preformatted.rstrip("\n").split("\n")
        for n in b.notes:
            out.append(f"note: {n}")
    out += ["", "NOTES", "-----"] + [f"- {n}" for n in doc.notes]
    return "\n".join(out) + "\n"


def _csv_text(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    w.writerows(rows)
    return buf.getvalue()


def write_report(doc: ReportDocument, out_dir, fmt: str = "text", profiles: bool = False) -> list[Path]:
    """Write the report; returns the files written in a stable order."""
    if fmt not in FORMATS:
        raise ConfigurationError(f"format must be one of {FORMATS}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    if fmt == "text":
        path = out / "report.txt"
        path.write_text(render_text(doc))
        written.append(path)
    else:
        extra = {}
        for b in doc.blocks:
            if b.key in TABLE_FILES:
                path = out / TABLE_FILES[b.key]
                if b.error:
                    path.write_text(_csv_text(("error",), [(b.error,)]))
                else:
                    path.write_text(_csv_text(b.columns, b.rows))
                written.append(path)
            else:
                extra[b.key] = {"title": b.title, "columns": list(b.columns), "rows": [list(r) for r in b.rows],
                                "error": b.error}
        meta = dict(doc.metadata)
        meta["notes"] = list(doc.notes)
        meta["preliminaries"] = extra
        meta["block_notes"] = {b.key: b.notes for b in doc.blocks if b.notes}
        meta["failures"] = {b.key: b.error for b in doc.blocks if b.error}
        t4 = doc.block("T4")
        if t4 is not None and t4.preformatted:
            meta["vecm_dump"] = t4.preformatted
        path = out / "metadata.json"
        path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
        written.append(path)
    if profiles:
        pdir = out / "profiles"
        pdir.mkdir(exist_ok=True)
        for (model, kind), outcome in sorted(doc.profiles.items()):
            path = pdir / f"gh_{model}_{kind}.csv"
            write_profile_csv(outcome, path)
            written.append(path)
    return written
