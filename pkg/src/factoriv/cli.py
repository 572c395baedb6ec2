"""Command line entry point.

Verbs:
    validate   parse the config and input files, fit nothing
    run        full batch estimation with report emission
    simulate   generate a synthetic errors-in-variables panel and run it
    stats      descriptive statistics for every input column

Exit codes: 0 success, 1 configuration or ingestion failure, 2 when one
or more portfolios failed while the rest of the run completed.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .gmm import WEIGHTINGS
from .panel import ParseError, AlignmentError, align_panels, parse_ff_csv, write_panel_csv
from .runner import (
    CONFIG_ENV_VAR,
    INSTRUMENT_MODES,
    ConfigError,
    RunConfig,
    SetConfig,
    execute_run,
    load_config,
    load_factor_inputs,
    stats_table,
)
from .simulate import parse_scenario_file, scenario_panels

logger = logging.getLogger(__name__)

_OVERRIDE_FLAGS = (
    ("--output-dir", "output_dir", "directory for report files"),
    ("--workers", "workers", "parallel portfolio fits"),
    ("--hac-lags", "hac_lags", "Newey-West lag count, or 'auto'"),
    ("--significance", "significance", "two-sided significance level"),
    ("--instruments", "instruments", f"one of {', '.join(INSTRUMENT_MODES)}"),
    ("--weighting", "weighting", f"one of {', '.join(WEIGHTINGS)}"),
    ("--start", "start", "first month, YYYY-MM"),
    ("--end", "end", "last month, YYYY-MM"),
    ("--formats", "formats", "comma list from: csv, md"),
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="factoriv",
        description="Factor model estimation with measurement-error-robust IVGMM.",
    )
    parser.add_argument(
        "--config",
        default=os.environ.get(CONFIG_ENV_VAR),
        help=f"run config file (default: ${CONFIG_ENV_VAR})",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="verb", required=True)

    p_validate = sub.add_parser("validate", help="check config and inputs, fit nothing")
    p_run = sub.add_parser("run", help="full batch estimation")
    p_stats = sub.add_parser("stats", help="descriptive statistics as CSV on stdout")
    p_sim = sub.add_parser("simulate", help="synthetic panel through the run pipeline")
    p_sim.add_argument("--scenario", required=True, help="scenario key=value file")
    p_sim.add_argument("--output-dir", required=True, help="directory for report files")
    p_sim.add_argument("--weighting", default="two_step_hac")
    p_sim.add_argument("--hac-lags", default="auto")
    p_sim.add_argument("--workers", default="1")

    for flag, dest, helptext in _OVERRIDE_FLAGS:
        for p in (p_run, p_validate, p_stats):
            p.add_argument(flag, dest=f"ov_{dest}", default=None, help=helptext)
    return parser


def _overrides(args: argparse.Namespace) -> dict[str, str]:
    out = {}
    for _, dest, _h in _OVERRIDE_FLAGS:
        val = getattr(args, f"ov_{dest}", None)
        if val is not None:
            out[dest] = val
    return out


def _load(args: argparse.Namespace) -> RunConfig:
    if not args.config:
        raise ConfigError(f"no config file given (use --config or ${CONFIG_ENV_VAR})")
    return load_config(args.config, overrides=_overrides(args))


def _cmd_validate(args: argparse.Namespace) -> int:
    cfg = _load(args)
    factor_panels = load_factor_inputs(cfg)
    ncols = sum(len(p.names) for p in factor_panels)
    nmonths = len(factor_panels[0].dates)
    print(f"factors: {ncols} column(s), {nmonths} month(s)")
    for set_cfg in cfg.sets:
        panel = parse_ff_csv(set_cfg.path, sentinels=set_cfg.sentinels or cfg.sentinels,
                             label=set_cfg.name)
        aligned = align_panels(factor_panels + [panel], start=cfg.start, end=cfg.end,
                               label=set_cfg.name)
        first, last = aligned.dates.label(0), aligned.dates.label(len(aligned.dates) - 1)
        print(f"set {set_cfg.name}: {len(panel.names)} portfolio(s), "
              f"{aligned.nobs} usable month(s) {first}..{last}")
    print("config ok")
    return 0


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = _load(args)
    result = execute_run(cfg)
    fitted = sum(len(s.rows) for s in result.sets)
    failed = sum(len(s.errors) for s in result.sets)
    print(f"fitted {fitted} portfolio(s) across {len(result.sets)} set(s), "
          f"{failed} failure(s); reports in {cfg.output_dir}")
    return result.exit_code


def _cmd_stats(args: argparse.Namespace) -> int:
    cfg = _load(args)
    panels = load_factor_inputs(cfg)
    for set_cfg in cfg.sets:
        panels.append(parse_ff_csv(set_cfg.path, sentinels=set_cfg.sentinels or cfg.sentinels,
                                   label=set_cfg.name))
    for line in stats_table(panels):
        print(line)
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    scenario = parse_scenario_file(args.scenario)
    factors, portfolios = scenario_panels(scenario)
    out_dir = os.path.abspath(args.output_dir)
    endo = [n for n, sd in zip(scenario.factor_names, scenario.meas_error_sd) if sd > 0]
    if not endo:
        endo = list(scenario.factor_names)
    exo = [n for n in scenario.factor_names if n not in endo]
    cfg = RunConfig(
        factors_path="<generated>",
        labor_path=None,
        labor_name=scenario.factor_names[0],
        sets=[SetConfig(name="sim", path="<generated>")],
        start=(factors.dates.year_month(0)),
        end=(factors.dates.year_month(len(factors.dates) - 1)),
        regressors=list(scenario.factor_names),
        exogenous=exo,
        endogenous=endo or list(scenario.factor_names),
        named_instruments=[],
        instruments_mode="cumulant",
        weighting=args.weighting,
        hac_lags=None if args.hac_lags == "auto" else int(args.hac_lags),
        significance=0.05,
        relevance_threshold=24.0,
        screen_factor=scenario.factor_names[0],
        screen_threshold=3.0,
        screen_method="ols",
        sentinels=(),
        output_dir=out_dir,
        formats=["csv", "md"],
        workers=int(args.workers),
    )
    result = execute_run(cfg, preloaded={"factors": factors, "sim": portfolios})
    write_panel_csv(factors, os.path.join(out_dir, "sim_factors.csv"))
    write_panel_csv(portfolios, os.path.join(out_dir, "sim_portfolios.csv"))
    print(f"simulated {portfolios.nobs} month(s); reports in {out_dir}")
    return result.exit_code


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    commands = {
        "validate": _cmd_validate,
        "run": _cmd_run,
        "stats": _cmd_stats,
        "simulate": _cmd_simulate,
    }
    try:
        return commands[args.verb](args)
    except (ConfigError, ParseError, AlignmentError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
