"""Batch estimation over portfolio sets, with table-style report emission.

A run fits every portfolio column of every configured set by OLS and by
the configured IVGMM route, runs the instrument diagnostics, and writes
per-set summary/detail/diagnostic tables plus a |t| screen and a run
manifest. All emission is deterministic: two runs over the same inputs
produce byte-identical files regardless of the worker count.
"""

from __future__ import annotations

import configparser
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__
from .diagnostics import (
    ExogeneityReport,
    HarveyRecord,
    HausmanReport,
    RelevanceReport,
    exogeneity_test,
    harvey_screen,
    hausman_test,
    relevance_test,
)
from .gmm import WEIGHTINGS, GmmFit, GmmSpec, gmm_distance_estimate, gmm_estimate
from .instruments import filter_regressors
from .ols import DesignMatrix, FitResult, add_intercept, ols_fit
from .panel import (
    DEFAULT_SENTINELS,
    FactorPanel,
    align_panels,
    common_months,
    descriptive_stats,
    parse_ff_csv,
    parse_quarterly_csv,
)

logger = logging.getLogger(__name__)

INSTRUMENT_MODES = ("named", "cumulant", "both")
CONFIG_ENV_VAR = "FACTORIV_CONFIG"

_RUN_KEYS = {
    "factors", "labor_income", "labor_name", "start", "end", "regressors",
    "exogenous", "endogenous", "named_instruments", "instruments", "weighting",
    "hac_lags", "significance", "relevance_threshold", "screen_factor",
    "screen_threshold", "screen_method", "sentinels", "output_dir", "formats",
    "workers",
}
_SET_KEYS = {"portfolios", "sentinels"}

# keys whose values may legitimately differ between otherwise identical
# runs; they are left out of the manifest echo
_VOLATILE_KEYS = {"workers", "output_dir"}


class ConfigError(ValueError):
    """Raised for unusable run configuration."""


@dataclass(kw_only=True)
class SetConfig:
    name: str
    path: str
    sentinels: tuple[float, ...] | None = None


@dataclass(kw_only=True)
class RunConfig:
    factors_path: str
    labor_path: str | None
    labor_name: str
    sets: list[SetConfig]
    start: tuple[int, int]
    end: tuple[int, int]
    regressors: list[str]
    exogenous: list[str]
    endogenous: list[str]
    named_instruments: list[str]
    instruments_mode: str
    weighting: str
    hac_lags: int | None
    significance: float
    relevance_threshold: float
    screen_factor: str
    screen_threshold: float
    screen_method: str
    sentinels: tuple[float, ...]
    output_dir: str
    formats: list[str]
    workers: int

    def iv_regressors(self) -> list[str]:
        return list(self.exogenous) + list(self.endogenous)


def _parse_month(text: str) -> tuple[int, int]:
    try:
        y, m = text.strip().split("-")
        year, month = int(y), int(m)
    except ValueError:
        raise ConfigError(f"expected YYYY-MM, got {text!r}") from None
    if not 1 <= month <= 12:
        raise ConfigError(f"month out of range in {text!r}")
    return year, month


def _csv_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def load_config(path, overrides: dict[str, str] | None = None) -> RunConfig:
    """Parse the flat key-value config file; CLI overrides win key by key."""
    parser = configparser.ConfigParser(interpolation=None)
    read = parser.read(path, encoding="utf-8")
    if not read:
        raise ConfigError(f"config file not found: {path}")
    if "run" not in parser:
        raise ConfigError(f"{path}: missing [run] section")

    base = dict(parser["run"])
    unknown = sorted(set(base) - _RUN_KEYS)
    if unknown:
        raise ConfigError(f"{path}: unknown [run] key(s): {', '.join(unknown)}")
    override_dir = set()
    for key, val in (overrides or {}).items():
        if val is None:
            continue
        if key not in _RUN_KEYS:
            raise ConfigError(f"unknown override key {key!r}")
        base[key] = str(val)
        override_dir.add(key)

    cfg_dir = os.path.dirname(os.path.abspath(path))

    def resolve(p: str, from_cli: bool = False) -> str:
        root = os.getcwd() if from_cli else cfg_dir
        return p if os.path.isabs(p) else os.path.normpath(os.path.join(root, p))

    required = [k for k in ("factors", "output_dir") if k not in base]
    if required:
        raise ConfigError(f"{path}: missing required key(s): {', '.join(required)}")

    sets: list[SetConfig] = []
    for section in parser.sections():
        if not section.startswith("set:"):
            if section != "run":
                raise ConfigError(f"{path}: unexpected section [{section}]")
            continue
        name = section[len("set:"):].strip()
        if not name:
            raise ConfigError(f"{path}: empty set name in [{section}]")
        body = dict(parser[section])
        unknown = sorted(set(body) - _SET_KEYS)
        if unknown:
            raise ConfigError(f"{path}: unknown [{section}] key(s): {', '.join(unknown)}")
        if "portfolios" not in body:
            raise ConfigError(f"{path}: [{section}] needs a portfolios path")
        sent = None
        if "sentinels" in body:
            sent = tuple(float(t) for t in _csv_list(body["sentinels"]))
        sets.append(SetConfig(name=name, path=resolve(body["portfolios"]), sentinels=sent))
    if not sets:
        raise ConfigError(f"{path}: no [set:NAME] sections")
    names = [s.name for s in sets]
    if len(set(names)) != len(names):
        raise ConfigError(f"{path}: duplicate set names")

    def get(key: str, default: str) -> str:
        return base.get(key, default)

    hac_raw = get("hac_lags", "auto").strip().lower()
    if hac_raw == "auto":
        hac_lags = None
    else:
        try:
            hac_lags = int(hac_raw)
        except ValueError:
            raise ConfigError(f"hac_lags must be 'auto' or an integer, got {hac_raw!r}") from None
        if hac_lags < 0:
            raise ConfigError("hac_lags must be non-negative")

    mode = get("instruments", "named").strip().lower()
    if mode not in INSTRUMENT_MODES:
        raise ConfigError(f"instruments must be one of {INSTRUMENT_MODES}, got {mode!r}")

    weighting = get("weighting", "two_step_hac").strip().lower()
    if weighting not in WEIGHTINGS:
        raise ConfigError(f"weighting must be one of {WEIGHTINGS}, got {weighting!r}")

    regressors = _csv_list(get("regressors", ""))
    if not regressors:
        raise ConfigError("regressors must list at least one factor column")
    exogenous = _csv_list(get("exogenous", ""))
    endogenous = _csv_list(get("endogenous", ""))
    named_instr = _csv_list(get("named_instruments", ""))
    for what, cols in (("exogenous", exogenous), ("endogenous", endogenous)):
        bad = sorted(set(cols) - set(regressors))
        if bad:
            raise ConfigError(f"{what} column(s) not among regressors: {', '.join(bad)}")
    if not endogenous:
        raise ConfigError("endogenous must name at least one regressor")
    if set(exogenous) & set(endogenous):
        raise ConfigError("a regressor cannot be both exogenous and endogenous")
    if mode in ("named", "both") and not named_instr:
        raise ConfigError(f"instruments={mode} requires named_instruments")

    labor_name = get("labor_name", "LBR").strip()
    screen_method = get("screen_method", "ols").strip().lower()
    if screen_method not in ("ols", "ivgmm"):
        raise ConfigError(f"screen_method must be ols or ivgmm, got {screen_method!r}")
    screen_factor = get("screen_factor", labor_name).strip()
    screen_pool = regressors if screen_method == "ols" else exogenous + endogenous
    if screen_factor not in screen_pool:
        raise ConfigError(
            f"screen_factor {screen_factor!r} is not a regressor of the {screen_method} fit"
        )

    formats = [f.strip().lower() for f in _csv_list(get("formats", "csv, md"))]
    bad = sorted(set(formats) - {"csv", "md"})
    if bad:
        raise ConfigError(f"unknown format(s): {', '.join(bad)}")
    if "csv" not in formats:
        raise ConfigError("formats must include csv")

    try:
        significance = float(get("significance", "0.05"))
        relevance_threshold = float(get("relevance_threshold", "24"))
        screen_threshold = float(get("screen_threshold", "3.0"))
        workers = int(get("workers", "1"))
    except ValueError as exc:
        raise ConfigError(f"bad numeric config value: {exc}") from None
    if not 0 < significance < 1:
        raise ConfigError("significance must be in (0, 1)")
    if workers < 1:
        raise ConfigError("workers must be >= 1")

    sentinels = tuple(float(t) for t in _csv_list(get("sentinels", "")) ) or DEFAULT_SENTINELS

    labor_raw = get("labor_income", "").strip()
    return RunConfig(
        factors_path=resolve(base["factors"], "factors" in override_dir),
        labor_path=resolve(labor_raw, "labor_income" in override_dir) if labor_raw else None,
        labor_name=labor_name,
        sets=sets,
        start=_parse_month(get("start", "1986-01")),
        end=_parse_month(get("end", "2017-05")),
        regressors=regressors,
        exogenous=exogenous,
        endogenous=endogenous,
        named_instruments=named_instr,
        instruments_mode=mode,
        weighting=weighting,
        hac_lags=hac_lags,
        significance=significance,
        relevance_threshold=relevance_threshold,
        screen_factor=screen_factor,
        screen_threshold=screen_threshold,
        screen_method=screen_method,
        sentinels=sentinels,
        output_dir=resolve(base["output_dir"], "output_dir" in override_dir),
        formats=formats,
        workers=workers,
    )


@dataclass(kw_only=True)
class PortfolioRow:
    portfolio: str
    ols: FitResult
    ivgmm: GmmFit
    exogeneity: ExogeneityReport
    hausman: HausmanReport
    screen: HarveyRecord


@dataclass(kw_only=True)
class SetResult:
    name: str
    nobs: int
    dropped: int
    rows: list[PortfolioRow] = field(default_factory=list)
    errors: dict[str, str] = field(default_factory=dict)
    relevance: RelevanceReport | None = None
    relevance_error: str | None = None


@dataclass(kw_only=True)
class RunResult:
    sets: list[SetResult]
    exit_code: int


def load_factor_inputs(cfg: RunConfig) -> list[FactorPanel]:
    """Factor panel plus, when configured, the labor series replicated to months.

    No alignment happens here: rows the sentinels blanked out must survive
    until the per-set join so each set's dropped-row count covers them.
    """
    panels = [parse_ff_csv(cfg.factors_path, sentinels=cfg.sentinels, label="factors")]
    if cfg.labor_path:
        panels.append(parse_quarterly_csv(cfg.labor_path, label="labor").to_monthly(cfg.labor_name))
    return panels


def _build_iv_spec(cfg: RunConfig, y: np.ndarray, aligned: FactorPanel,
                   named_cols: np.ndarray | None) -> GmmSpec:
    ones = np.ones((len(y), 1))
    exog = np.hstack([ones] + [aligned.column(n)[:, None] for n in cfg.exogenous])
    endog = np.column_stack([aligned.column(n) for n in cfg.endogenous])
    instruments = None
    instr_names = None
    if named_cols is not None:
        instruments = named_cols
        instr_names = list(cfg.named_instruments)
    return GmmSpec(
        y=y,
        exog=exog,
        exog_names=["alpha"] + list(cfg.exogenous),
        endog=endog,
        endog_names=list(cfg.endogenous),
        instruments=instruments,
        instrument_names=instr_names,
        weighting=cfg.weighting,
        hac_lags=cfg.hac_lags,
    )


def run_portfolio_set(cfg: RunConfig, set_cfg: SetConfig, factors: list[FactorPanel],
                      portfolios: FactorPanel | None = None) -> SetResult:
    """Fit every portfolio column of one set; failures are isolated per portfolio."""
    if portfolios is None:
        portfolios = parse_ff_csv(
            set_cfg.path, sentinels=set_cfg.sentinels or cfg.sentinels, label=set_cfg.name
        )
    joined = list(factors) + [portfolios]
    possible = len(common_months(joined, cfg.start, cfg.end))
    aligned = align_panels(joined, start=cfg.start, end=cfg.end, label=set_cfg.name)
    result = SetResult(name=set_cfg.name, nobs=aligned.nobs, dropped=possible - aligned.nobs)

    missing = sorted(set(cfg.regressors) - set(aligned.names))
    if missing:
        raise ConfigError(f"set {set_cfg.name!r}: regressor column(s) missing: {', '.join(missing)}")
    port_names = sorted(n for n in portfolios.names if n in aligned.names)

    X = add_intercept(
        np.column_stack([aligned.column(n) for n in cfg.regressors]), cfg.regressors
    )
    named_cols = None
    if cfg.instruments_mode in ("named", "both"):
        missing = sorted(set(cfg.named_instruments) - set(aligned.names))
        if missing:
            raise ConfigError(
                f"set {set_cfg.name!r}: named instrument column(s) missing: {', '.join(missing)}"
            )
        named_cols = np.column_stack([aligned.column(n) for n in cfg.named_instruments])

    # higher-moment instruments: one build per set for the estimation block
    # (the IV regressors) and one over all regressors for the diagnostics
    iv_block = np.column_stack([aligned.column(n) for n in cfg.iv_regressors()])
    est_inst = est_filtered = None
    if cfg.instruments_mode in ("cumulant", "both"):
        est_inst, est_filtered = filter_regressors(iv_block, cfg.iv_regressors())
    try:
        diag_inst, diag_filtered = filter_regressors(
            np.column_stack([aligned.column(n) for n in cfg.regressors]), cfg.regressors
        )
        diag_Z = np.hstack([np.ones((aligned.nobs, 1)), diag_filtered.d])
        diag_names = ["const"] + diag_filtered.names
        result.relevance = relevance_test(
            X.values[:, 1:], cfg.regressors, diag_Z, diag_names,
            hac_lags=cfg.hac_lags, threshold=cfg.relevance_threshold,
        )
    except ValueError as exc:
        result.relevance_error = str(exc)
        diag_Z, diag_names = None, None

    def fit_one(name: str) -> PortfolioRow:
        y = aligned.column(name)
        ols = ols_fit(y, X, hac_lags=cfg.hac_lags)
        spec = _build_iv_spec(cfg, y, aligned, named_cols)
        if cfg.instruments_mode == "named":
            iv = gmm_estimate(spec)
        elif cfg.instruments_mode == "cumulant":
            iv = gmm_distance_estimate(spec, est_inst, est_filtered)
        else:  # both: concatenate named and higher-moment columns
            cols = np.hstack([named_cols, est_inst.z1, est_inst.z2])
            names = list(cfg.named_instruments) + [n for n in est_inst.names if n != "const"]
            iv = gmm_estimate(replace(spec, instruments=cols, instrument_names=names))
        if diag_Z is not None:
            exo = exogeneity_test(ols.residuals, diag_Z, diag_names, alpha=cfg.significance)
        else:
            exo = exogeneity_test(ols.residuals, X.values, X.names, alpha=cfg.significance)
        haus = hausman_test(ols, iv, X, DesignMatrix(iv.names, iv.fitted_design),
                            alpha=cfg.significance)
        screen_fit = ols if cfg.screen_method == "ols" else iv
        screen = harvey_screen(screen_fit, cfg.screen_factor, cfg.screen_threshold)
        return PortfolioRow(portfolio=name, ols=ols, ivgmm=iv, exogeneity=exo,
                            hausman=haus, screen=screen)

    def safe(name: str):
        try:
            return fit_one(name)
        except Exception as exc:  # isolate portfolio failures
            logger.warning("set %s portfolio %s failed: %s", set_cfg.name, name, exc)
            return f"{type(exc).__name__}: {exc}"

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            outcomes = dict(zip(port_names, pool.map(safe, port_names)))
    else:
        outcomes = {name: safe(name) for name in port_names}

    for name in port_names:  # deterministic collection order
        out = outcomes[name]
        if isinstance(out, str):
            result.errors[name] = out
        else:
            result.rows.append(out)
    return result


def execute_run(cfg: RunConfig, preloaded: dict[str, FactorPanel] | None = None) -> RunResult:
    """Validate the output path, run every set, emit every report."""
    _prepare_output_dir(cfg.output_dir)
    factors = [preloaded["factors"]] if preloaded else load_factor_inputs(cfg)
    sets = []
    for set_cfg in cfg.sets:
        ports = preloaded.get(set_cfg.name) if preloaded else None
        sets.append(run_portfolio_set(cfg, set_cfg, factors, portfolios=ports))
    result = RunResult(sets=sets, exit_code=2 if any(s.errors for s in sets) else 0)
    emit_reports(cfg, result)
    return result


def _prepare_output_dir(path: str) -> None:
    try:
        os.makedirs(path, exist_ok=True)
        probe = os.path.join(path, ".write_probe")
        with open(probe, "w", encoding="utf-8") as fh:
            fh.write("")
        os.remove(probe)
    except OSError as exc:
        raise ConfigError(f"output directory is not writable: {path} ({exc})") from None


# ---------------------------------------------------------------- reports

def _r(x) -> str:
    """Full-precision cell for CSV files."""
    if x is None:
        return ""
    x = float(x)
    return "" if np.isnan(x) else repr(x)


def _g(x) -> str:
    """Six-significant-digit cell for human tables."""
    if x is None:
        return ""
    x = float(x)
    if np.isnan(x):
        return ""
    if np.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.6g}"


def _stars(p: float, significance: float) -> str:
    if np.isnan(p):
        return ""
    if p < 0.01:
        return "***"
    if p < significance:
        return "**"
    return ""


def _write_lines(path: str, lines: list[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def _coef_columns(cfg: RunConfig) -> list[str]:
    return ["alpha"] + list(cfg.regressors)


def summarize_method(rows: list[PortfolioRow], method: str, cfg: RunConfig) -> dict:
    """Cross-portfolio aggregates for one panel (OLS or IVGMM)."""
    fits = [(r.ols if method == "OLS" else r.ivgmm) for r in rows]
    out: dict[str, dict[str, float]] = {}
    for name in _coef_columns(cfg):
        present = [f for f in fits if name in f.names]
        if not present:
            continue
        coefs = np.array([f.coef(name) for f in present])
        ts = np.array([f.t_stat(name) for f in present])
        ps = np.array([f.p_value(name) for f in present])
        out[name] = {
            "coef_mean": float(coefs.mean()),
            "t_mean": float(ts.mean()),
            "t_min": float(ts.min()),
            "t_max": float(ts.max()),
            "n_significant": float(int((ps < cfg.significance).sum())),
        }
    return {
        "coefficients": out,
        "adj_r2_mean": float(np.mean([f.adj_r2 for f in fits])) if fits else np.nan,
        "dw_mean": float(np.mean([f.dw for f in fits])) if fits else np.nan,
        "n_portfolios": len(fits),
    }


_SUMMARY_STATS = ("coef_mean", "t_mean", "t_min", "t_max", "n_significant")


def emit_reports(cfg: RunConfig, result: RunResult) -> None:
    out = cfg.output_dir
    coef_cols = _coef_columns(cfg)
    for s in result.sets:
        _emit_set_csv(cfg, s, out, coef_cols)
        if "md" in cfg.formats:
            _emit_set_md(cfg, s, out, coef_cols)
    _emit_screen(cfg, result, out)
    _emit_manifest(cfg, result, out)


def _emit_set_csv(cfg: RunConfig, s: SetResult, out: str, coef_cols: list[str]) -> None:
    # summary
    lines = ["method,statistic," + ",".join(coef_cols) + ",adj_r2,dw,n_portfolios"]
    for method in ("OLS", "IVGMM"):
        agg = summarize_method(s.rows, method, cfg)
        for stat in _SUMMARY_STATS:
            cells = [method, stat]
            for c in coef_cols:
                cells.append(_r(agg["coefficients"].get(c, {}).get(stat)))
            if stat == "coef_mean":
                cells += [_r(agg["adj_r2_mean"]), _r(agg["dw_mean"]), str(agg["n_portfolios"])]
            else:
                cells += ["", "", ""]
            lines.append(",".join(cells))
    _write_lines(os.path.join(out, f"{s.name}_summary.csv"), lines)

    # per-portfolio detail (enough to recompute every summary cell)
    head = ["portfolio", "method"]
    for c in coef_cols:
        head += [f"coef_{c}", f"t_{c}", f"p_{c}"]
    head += ["adj_r2", "dw", "error"]
    lines = [",".join(head)]
    for r in s.rows:
        for method, fit in (("OLS", r.ols), ("IVGMM", r.ivgmm)):
            cells = [r.portfolio, method]
            for c in coef_cols:
                if c in fit.names:
                    cells += [_r(fit.coef(c)), _r(fit.t_stat(c)), _r(fit.p_value(c))]
                else:
                    cells += ["", "", ""]
            cells += [_r(fit.adj_r2), _r(fit.dw), ""]
            lines.append(",".join(cells))
    for name in sorted(s.errors):
        cells = [name, ""] + [""] * (3 * len(coef_cols)) + ["", "", s.errors[name].replace(",", ";")]
        lines.append(",".join(cells))
    _write_lines(os.path.join(out, f"{s.name}_detail.csv"), lines)

    # relevance (one table per set; does not involve the dependent series)
    lines = ["regressor,f_stat,n_restrictions,excluded_instrument,capped,verdict,overall"]
    if s.relevance is not None:
        for rec in s.relevance.records:
            lines.append(",".join([
                rec.regressor, _r(rec.f_stat) if not np.isinf(rec.f_stat) else "inf",
                str(rec.n_restrictions), rec.excluded_instrument or "",
                str(rec.capped), rec.verdict, s.relevance.overall,
            ]))
    _write_lines(os.path.join(out, f"{s.name}_relevance.csv"), lines)

    # exogeneity, long form
    lines = ["portfolio,term,coefficient,p_value,r2,verdict"]
    for r in s.rows:
        exo = r.exogeneity
        for name, c, p in zip(exo.names, exo.coefficients, exo.p_values):
            lines.append(",".join([r.portfolio, name, _r(c), _r(p), _r(exo.r2), exo.verdict]))
    _write_lines(os.path.join(out, f"{s.name}_exogeneity.csv"), lines)

    # per-portfolio overidentification and specification tests
    lines = ["portfolio,j_stat,j_dof,j_pvalue,hausman_stat,hausman_dof,hausman_pvalue,hausman_verdict"]
    for r in s.rows:
        lines.append(",".join([
            r.portfolio, _r(r.ivgmm.j_stat), str(r.ivgmm.j_dof), _r(r.ivgmm.j_pvalue),
            _r(r.hausman.stat), str(r.hausman.dof), _r(r.hausman.p_value), r.hausman.verdict,
        ]))
    _write_lines(os.path.join(out, f"{s.name}_tests.csv"), lines)


def _emit_set_md(cfg: RunConfig, s: SetResult, out: str, coef_cols: list[str]) -> None:
    lines = [f"# Set {s.name}", ""]
    lines.append(f"Months used: {s.nobs} (dropped {s.dropped} incomplete). "
                 f"Portfolios: {len(s.rows)} fitted, {len(s.errors)} failed.")
    lines.append("")
    for method in ("OLS", "IVGMM"):
        agg = summarize_method(s.rows, method, cfg)
        lines.append(f"## {method}")
        lines.append("")
        lines.append("| statistic | " + " | ".join(coef_cols) + " | adj_r2 | dw |")
        lines.append("|" + "---|" * (len(coef_cols) + 3))
        for stat in _SUMMARY_STATS:
            cells = []
            for c in coef_cols:
                v = agg["coefficients"].get(c, {}).get(stat)
                txt = _g(v)
                if stat in ("t_mean", "t_min", "t_max") and txt:
                    txt = f"*{txt}*"  # t-ratios are set in italics
                cells.append(txt)
            tail = [_g(agg["adj_r2_mean"]), _g(agg["dw_mean"])] if stat == "coef_mean" else ["", ""]
            lines.append("| " + stat + " | " + " | ".join(cells + tail) + " |")
        lines.append("")
    if s.relevance is not None:
        lines.append("## Instrument relevance")
        lines.append("")
        lines.append("| regressor | F | verdict |")
        lines.append("|---|---|---|")
        for rec in s.relevance.records:
            lines.append(f"| {rec.regressor} | {_g(rec.f_stat)} | {rec.verdict} |")
        lines.append("")
        lines.append(f"Overall: {s.relevance.overall} (threshold {_g(s.relevance.threshold)}).")
    elif s.relevance_error:
        lines.append(f"Instrument relevance unavailable: {s.relevance_error}")
    _write_lines(os.path.join(out, f"{s.name}_summary.md"), lines)


def screen_rows(result: RunResult) -> list[tuple[str, str, float, float]]:
    rows = []
    for s in result.sets:
        for r in s.rows:
            if r.screen.passed:
                rows.append((s.name, r.portfolio, r.screen.coefficient, r.screen.t_ratio))
    rows.sort(key=lambda x: (x[0], x[1]))
    return rows


def _emit_screen(cfg: RunConfig, result: RunResult, out: str) -> None:
    rows = screen_rows(result)
    lines = ["set,portfolio,coefficient,t_ratio"]
    for name, port, c, t in rows:
        lines.append(",".join([name, port, _r(c), _r(t)]))
    _write_lines(os.path.join(out, "tratio_screen.csv"), lines)
    if "md" in cfg.formats:
        lines = [f"# |t| > {_g(cfg.screen_threshold)} screen ({cfg.screen_factor}, "
                 f"{cfg.screen_method.upper()})", ""]
        lines.append("| set | portfolio | coefficient | t |")
        lines.append("|---|---|---|---|")
        for name, port, c, t in rows:
            lines.append(f"| {name} | {port} | {_g(c)} | *{_g(t)}* |")
        _write_lines(os.path.join(out, "tratio_screen.md"), lines)


def _config_echo(cfg: RunConfig) -> list[str]:
    pairs = {
        "factors": cfg.factors_path,
        "labor_income": cfg.labor_path or "",
        "labor_name": cfg.labor_name,
        "start": f"{cfg.start[0]:04d}-{cfg.start[1]:02d}",
        "end": f"{cfg.end[0]:04d}-{cfg.end[1]:02d}",
        "regressors": ", ".join(cfg.regressors),
        "exogenous": ", ".join(cfg.exogenous),
        "endogenous": ", ".join(cfg.endogenous),
        "named_instruments": ", ".join(cfg.named_instruments),
        "instruments": cfg.instruments_mode,
        "weighting": cfg.weighting,
        "hac_lags": "auto" if cfg.hac_lags is None else str(cfg.hac_lags),
        "significance": repr(cfg.significance),
        "relevance_threshold": repr(cfg.relevance_threshold),
        "screen_factor": cfg.screen_factor,
        "screen_threshold": repr(cfg.screen_threshold),
        "screen_method": cfg.screen_method,
        "sentinels": ", ".join(repr(s) for s in cfg.sentinels),
        "formats": ", ".join(cfg.formats),
    }
    assert not (set(pairs) & _VOLATILE_KEYS)
    return [f"{k} = {v}" for k, v in sorted(pairs.items())]


def _emit_manifest(cfg: RunConfig, result: RunResult, out: str) -> None:
    import numpy
    import scipy

    lines = [
        f"factoriv {__version__}",
        f"numpy {numpy.__version__}",
        f"scipy {scipy.__version__}",
        "",
        "[config]",
    ]
    lines += _config_echo(cfg)
    lines.append("")
    for s in result.sets:
        lines.append(f"[set {s.name}]")
        lines.append(f"months_used = {s.nobs}")
        lines.append(f"rows_dropped = {s.dropped}")
        lines.append(f"portfolios_fitted = {len(s.rows)}")
        lines.append(f"portfolios_failed = {len(s.errors)}")
        for name in sorted(s.errors):
            lines.append(f"error_{name} = {s.errors[name]}")
        if s.relevance is not None:
            lines.append(f"relevance_overall = {s.relevance.overall}")
        elif s.relevance_error:
            lines.append(f"relevance_error = {s.relevance_error}")
        lines.append("")
    _write_lines(os.path.join(out, "run_manifest.txt"), lines)


def stats_table(panels: list[FactorPanel]) -> list[str]:
    """CSV lines of descriptive stats for every column of every panel."""
    lines = ["source,column,mean,sd,min,max,count"]
    for p in panels:
        st = descriptive_stats(p)
        for name in p.names:
            row = st[name]
            lines.append(",".join([
                p.label or "panel", name, _r(row["mean"]), _r(row["sd"]),
                _r(row["min"]), _r(row["max"]), str(int(row["count"])),
            ]))
    return lines
