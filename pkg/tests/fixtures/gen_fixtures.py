"""Regenerate the committed test fixtures in this directory.

Run as: python3 tests/fixtures/gen_fixtures.py

Everything is derived from the package's own counter-based generator, so
the files come out byte-identical on every platform. The factor file
mimics the published monthly-returns layout: prose, a header line, one
contiguous YYYYMM block, then an annual summary block that parsers must
ignore. A few cells carry the -99.99 / -999.0 missing sentinels.
"""

from __future__ import annotations

import os

import numpy as np

from factoriv.simulate import _standard_normals

HERE = os.path.dirname(os.path.abspath(__file__))

START_YEAR = 1986
N_MONTHS = 168  # 1986-01 .. 1999-12
FACTOR_NAMES = ["Mkt-RF", "SMB", "HML", "RMW", "CMA", "RF"]
FACTOR_MEANS = np.array([0.60, 0.10, 0.30, 0.25, 0.20, 0.35])
FACTOR_SDS = np.array([4.40, 3.00, 2.80, 2.20, 2.00, 0.15])


def _skewed(g: np.ndarray) -> np.ndarray:
    """Standardized chi-square(1) shocks from standard normals."""
    return (g * g - 1.0) / np.sqrt(2.0)


def month_labels() -> list[str]:
    out = []
    for i in range(N_MONTHS):
        y, m = START_YEAR + i // 12, i % 12 + 1
        out.append(f"{y:04d}{m:02d}")
    return out


def gen_factor_values() -> np.ndarray:
    g = _standard_normals(101, (N_MONTHS, len(FACTOR_NAMES) + 1))
    shocks = _skewed(g)
    common = shocks[:, -1]
    mix = 0.45 * common[:, None] + np.sqrt(1 - 0.45 ** 2) * shocks[:, :-1]
    return FACTOR_MEANS + FACTOR_SDS * mix


def gen_labor_values() -> np.ndarray:
    n_quarters = N_MONTHS // 3
    g = _standard_normals(202, (n_quarters, 1))[:, 0]
    return 1.20 + 0.80 * _skewed(g)


def labor_monthly(quarterly: np.ndarray) -> np.ndarray:
    return np.repeat(quarterly, 3)


def gen_portfolios(seed: int, names: list[str], X: np.ndarray) -> np.ndarray:
    """Returns = alpha + factor exposures + noise, in percent."""
    k = X.shape[1]
    g = _standard_normals(seed, (N_MONTHS, len(names)))
    base = np.array([0.10, 1.00, 0.50, 0.30, 0.20, 0.10])[:k]
    rows = []
    for j, _ in enumerate(names):
        tilt = 1.0 + 0.15 * ((j % 5) - 2)
        alpha = 0.05 + 0.03 * j
        rows.append(alpha + X @ (base * tilt) + 1.0 * g[:, j])
    return np.column_stack(rows)


def write_factor_file(values: np.ndarray) -> None:
    labels = month_labels()
    lines = [
        "Test factor file in the published monthly layout.",
        "Returns are in percent; missing cells use the -99.99 or -999 sentinel.",
        "",
        "," + ",".join(FACTOR_NAMES),
    ]
    cells = [[f"{v:.2f}" for v in row] for row in values]
    cells[labels.index("199006")][FACTOR_NAMES.index("CMA")] = "-99.99"
    cells[labels.index("199503")][FACTOR_NAMES.index("RMW")] = "-999.0"
    for label, row in zip(labels, cells):
        lines.append(label + "," + ",".join(row))
    lines.append("")
    lines.append("Annual Factors: January-December")
    lines.append("")
    lines.append("," + ",".join(FACTOR_NAMES))
    for year in range(START_YEAR, START_YEAR + N_MONTHS // 12):
        block = values[(year - START_YEAR) * 12:(year - START_YEAR + 1) * 12]
        lines.append(f"{year}," + ",".join(f"{v:.2f}" for v in block.sum(axis=0)))
    _write("factors_monthly.txt", lines)


def write_labor_file(quarterly: np.ndarray) -> None:
    lines = ["year,quarter,value"]
    for i, v in enumerate(quarterly):
        lines.append(f"{START_YEAR + i // 4},{i % 4 + 1},{v:.3f}")
    _write("labor_quarterly.csv", lines)


def write_portfolio_file(fname: str, names: list[str], values: np.ndarray,
                         sentinel_at: tuple[str, str] | None = None) -> None:
    labels = month_labels()
    lines = [
        "Test portfolio returns, monthly, percent, value weighted.",
        "",
        "," + ",".join(names),
    ]
    cells = [[f"{v:.2f}" for v in row] for row in values]
    if sentinel_at is not None:
        month, column = sentinel_at
        cells[labels.index(month)][names.index(column)] = "-99.99"
    for label, row in zip(labels, cells):
        lines.append(label + "," + ",".join(row))
    _write(fname, lines)


def _write(fname: str, lines: list[str]) -> None:
    with open(os.path.join(HERE, fname), "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
    print(f"wrote {fname}")


RUN_CONFIG = """\
[run]
factors = factors_monthly.txt
labor_income = labor_quarterly.csv
labor_name = LBR
start = 1986-07
end = 1999-06
regressors = LBR, Mkt-RF, SMB, HML, RMW, CMA
exogenous = LBR, Mkt-RF
endogenous = SMB
named_instruments = HML, RMW, CMA
instruments = cumulant
weighting = two_step_hac
hac_lags = auto
significance = 0.05
screen_factor = LBR
screen_threshold = 3.0
screen_method = ols
output_dir = out
formats = csv, md
workers = 1

[set:alpha]
portfolios = ports_alpha.txt

[set:beta]
portfolios = ports_beta.txt
"""

SCENARIO = """\
# errors-in-variables scenario: one mismeasured skewed factor
seed = 7
nobs = 400
beta = 0.6
factor_sd = 1.0
meas_error_sd = 0.8
resid_sd = 0.7
intercept = 0.05
factor_dist = chi_squared
factor_names = F1
"""


def main() -> None:
    factors = gen_factor_values()
    quarterly = gen_labor_values()
    X = np.column_stack([labor_monthly(quarterly), factors[:, :5]])
    write_factor_file(factors)
    write_labor_file(quarterly)
    write_portfolio_file("ports_alpha.txt", [f"A{i}" for i in range(1, 7)],
                         gen_portfolios(303, [f"A{i}" for i in range(1, 7)], X))
    write_portfolio_file("ports_beta.txt", [f"B{i}" for i in range(1, 5)],
                         gen_portfolios(404, [f"B{i}" for i in range(1, 5)], X),
                         sentinel_at=("199307", "B2"))
    with open(os.path.join(HERE, "run_config.ini"), "w", encoding="utf-8", newline="") as fh:
        fh.write(RUN_CONFIG)
    print("wrote run_config.ini")
    with open(os.path.join(HERE, "scenario_eiv.txt"), "w", encoding="utf-8", newline="") as fh:
        fh.write(SCENARIO)
    print("wrote scenario_eiv.txt")


if __name__ == "__main__":
    main()
