"""Factor model estimation that is robust to measurement error in the factors.

The package fits time-series factor regressions by OLS and by IVGMM with
instruments built from higher moments of the observed factors, and ships
the instrument diagnostics (relevance, exogeneity, overidentification,
OLS-versus-IV comparison) plus batch execution over portfolio panels.
"""

__version__ = "0.1.0"

from .diagnostics import (
    HARVEY_THRESHOLD,
    RELEVANCE_THRESHOLD,
    ExogeneityReport,
    HarveyRecord,
    HausmanReport,
    RelevanceRecord,
    RelevanceReport,
    exogeneity_test,
    harvey_screen,
    hausman_test,
    relevance_test,
    relevance_verdicts,
)
from .gmm import (
    WEIGHTINGS,
    GmmFit,
    GmmSpec,
    UnderIdentifiedError,
    gmm_distance_estimate,
    gmm_estimate,
    gmm_objective,
    moment_conditions,
)
from .instruments import (
    FilteredInstruments,
    InstrumentSet,
    build_cumulant_instruments,
    filter_regressors,
    project_fitted,
    residual_instruments,
)
from .ols import (
    DesignMatrix,
    FitResult,
    SingularityError,
    add_intercept,
    default_hac_lags,
    hac_covariance,
    long_run_cov,
    ols_fit,
)
from .panel import (
    DEFAULT_SENTINELS,
    AlignmentError,
    DateIndex,
    FactorPanel,
    LaborIncomeSeries,
    ParseError,
    align_panels,
    common_months,
    descriptive_stats,
    parse_ff_csv,
    parse_quarterly_csv,
    read_panel_csv,
    write_panel_csv,
)
from .simulate import (
    EivScenario,
    generate_eiv,
    oracle_2sls,
    oracle_ols,
    parse_scenario_file,
    scenario_panels,
)

__all__ = [
    "__version__",
    "AlignmentError",
    "DateIndex",
    "DEFAULT_SENTINELS",
    "DesignMatrix",
    "EivScenario",
    "ExogeneityReport",
    "FactorPanel",
    "FilteredInstruments",
    "FitResult",
    "GmmFit",
    "GmmSpec",
    "HARVEY_THRESHOLD",
    "HarveyRecord",
    "HausmanReport",
    "InstrumentSet",
    "LaborIncomeSeries",
    "ParseError",
    "RELEVANCE_THRESHOLD",
    "RelevanceRecord",
    "RelevanceReport",
    "SingularityError",
    "UnderIdentifiedError",
    "WEIGHTINGS",
    "add_intercept",
    "align_panels",
    "build_cumulant_instruments",
    "common_months",
    "default_hac_lags",
    "descriptive_stats",
    "exogeneity_test",
    "filter_regressors",
    "generate_eiv",
    "gmm_distance_estimate",
    "gmm_estimate",
    "gmm_objective",
    "hac_covariance",
    "harvey_screen",
    "hausman_test",
    "long_run_cov",
    "moment_conditions",
    "ols_fit",
    "oracle_2sls",
    "oracle_ols",
    "parse_ff_csv",
    "parse_quarterly_csv",
    "parse_scenario_file",
    "project_fitted",
    "read_panel_csv",
    "relevance_test",
    "relevance_verdicts",
    "residual_instruments",
    "scenario_panels",
    "write_panel_csv",
]
