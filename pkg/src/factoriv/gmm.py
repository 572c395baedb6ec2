"""Linear GMM/IV estimation with a closed-form solve and Hansen J statistic.

Moments are g(b) = (1/T) Z'(y - X b); the estimator is

    b = (X'Z W Z'X)^-1 X'Z W Z'y

for a symmetric positive definite weighting W. Exogenous regressors always
instrument themselves; excluded instruments supply the extra columns.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .instruments import FilteredInstruments, InstrumentSet
from .ols import (
    FitResult,
    SingularityError,
    _qr_solve_refined,
    _tstats,
    adjusted_r2,
    default_hac_lags,
    durbin_watson,
    long_run_cov,
    pvalues_for,
)

logger = logging.getLogger(__name__)

WEIGHTINGS = ("identity", "inverse_zz", "two_step_hac")

# Kept-span tolerance for dropping redundant later instrument columns.
PRUNE_RTOL = 1e-10


class UnderIdentifiedError(ValueError):
    """Raised when the instrument set cannot identify the coefficients."""


@dataclass(kw_only=True)
class GmmSpec:
    """One estimation problem: y on [exog | endog] instrumented by [exog | excluded]."""

    y: np.ndarray
    exog: np.ndarray
    exog_names: list[str]
    endog: np.ndarray
    endog_names: list[str]
    instruments: np.ndarray | None = None
    instrument_names: list[str] | None = None
    weighting: str | np.ndarray = "inverse_zz"
    hac_lags: int | None = None

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=np.float64)
        self.exog = np.atleast_2d(np.asarray(self.exog, dtype=np.float64))
        if self.exog.shape[0] == 1 and len(self.y) != 1:
            self.exog = self.exog.T
        self.endog = np.atleast_2d(np.asarray(self.endog, dtype=np.float64))
        if self.endog.shape[0] == 1 and len(self.y) != 1:
            self.endog = self.endog.T
        if self.instruments is not None:
            self.instruments = np.atleast_2d(np.asarray(self.instruments, dtype=np.float64))
            if self.instruments.shape[0] == 1 and len(self.y) != 1:
                self.instruments = self.instruments.T
            if self.instrument_names is None:
                self.instrument_names = [f"w{j + 1}" for j in range(self.instruments.shape[1])]
            if self.instruments.shape[1] != len(self.instrument_names):
                raise ValueError("instrument name count does not match columns")
        elif self.instrument_names:
            raise ValueError("instrument names given without instrument columns")
        if self.exog.shape[1] != len(self.exog_names):
            raise ValueError("exog name count does not match columns")
        if self.endog.shape[1] != len(self.endog_names):
            raise ValueError("endog name count does not match columns")
        all_names = list(self.exog_names) + list(self.endog_names) + list(self.instrument_names or [])
        if len(set(all_names)) != len(all_names):
            raise ValueError("column names must be unique across exog, endog and instruments")
        if isinstance(self.weighting, str) and self.weighting not in WEIGHTINGS:
            raise ValueError(f"unknown weighting {self.weighting!r}; expected one of {WEIGHTINGS}")

    @property
    def regressor_names(self) -> list[str]:
        return list(self.exog_names) + list(self.endog_names)


@dataclass(kw_only=True)
class GmmFit(FitResult):
    """FitResult plus GMM-specific pieces (weighting, moments, Hansen J)."""

    weighting_requested: str
    weighting_used: str
    instrument_names: list[str]
    moment_values: np.ndarray
    j_stat: float
    j_dof: int
    j_pvalue: float
    fitted_design: np.ndarray


def moment_conditions(beta: np.ndarray, y: np.ndarray, X: np.ndarray, Z: np.ndarray) -> np.ndarray:
    """Average moments (1/T) Z'(y - X beta)."""
    u = np.asarray(y, dtype=np.float64) - np.asarray(X, dtype=np.float64) @ np.asarray(beta)
    return Z.T @ u / len(u)


def _require_spd(W: np.ndarray, what: str = "weighting matrix") -> None:
    W = np.asarray(W, dtype=np.float64)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ValueError(f"{what} must be square")
    if not np.allclose(W, W.T, rtol=1e-10, atol=1e-12):
        raise ValueError(f"{what} must be symmetric")
    eig = np.linalg.eigvalsh(W)
    if eig[0] <= 0:
        raise ValueError(f"{what} must be positive definite (min eigenvalue {eig[0]:.3e})")


def gmm_objective(beta, y, X, Z, W) -> float:
    """Quadratic objective T * g'Wg at ``beta`` (validates W is symmetric PD)."""
    _require_spd(W)
    g = moment_conditions(beta, y, X, Z)
    return float(len(y) * g @ W @ g)


def _prune_collinear(Z: np.ndarray, names: list[str]) -> tuple[np.ndarray, list[str]]:
    """Drop later columns already spanned by earlier ones (logged)."""
    keep: list[int] = []
    basis: list[np.ndarray] = []
    dropped: list[str] = []
    for j in range(Z.shape[1]):
        v = Z[:, j].copy()
        norm0 = float(v @ v)
        for q in basis:
            v -= (q @ v) * q
        if norm0 == 0.0 or float(v @ v) <= PRUNE_RTOL * norm0:
            dropped.append(names[j])
            continue
        basis.append(v / math.sqrt(float(v @ v)))
        keep.append(j)
    if dropped:
        logger.info("dropped redundant instrument column(s): %s", ", ".join(dropped))
    return Z[:, keep], [names[j] for j in keep]


def _solve_beta(XtZ: np.ndarray, W: np.ndarray, Zty: np.ndarray, names: list[str]) -> np.ndarray:
    A = XtZ @ W @ XtZ.T
    b = XtZ @ W @ Zty
    sv = np.linalg.svd(A, compute_uv=False)
    if sv[0] == 0 or sv[-1] < 1e-12 * sv[0]:
        raise UnderIdentifiedError(
            "instruments do not identify the coefficients ("
            + ", ".join(names)
            + "); X'Z W Z'X is numerically singular"
        )
    return np.linalg.solve(A, b)


def gmm_estimate(spec: GmmSpec) -> GmmFit:
    """Closed-form linear GMM under the requested weighting schedule.

    identity      W = I
    inverse_zz    W = (Z'Z/T)^-1  (equals two-stage least squares)
    two_step_hac  step one under inverse_zz, then W = S^-1 with S the
                  Newey-West covariance of the step-one moments; if S is
                  not positive definite the step-one result is kept and a
                  warning logged.

    A symmetric positive definite matrix may be passed directly as the
    weighting. The Hansen J statistic is always evaluated with the
    inverse of the Newey-West moment covariance at the final residuals,
    which keeps it invariant to the scale of y.
    """
    y = spec.y
    T = len(y)
    X = np.hstack([spec.exog, spec.endog])
    x_names = spec.regressor_names
    K = X.shape[1]
    if T <= K:
        raise ValueError(f"need nobs > ncoef, got T={T}, K={K}")

    if spec.instruments is not None:
        Z = np.hstack([spec.exog, spec.instruments])
        z_names = list(spec.exog_names) + list(spec.instrument_names)
    else:
        Z = spec.exog.copy()
        z_names = list(spec.exog_names)
    Z, z_names = _prune_collinear(Z, z_names)
    L = Z.shape[1]
    if L < K:
        raise UnderIdentifiedError(
            f"{L} instrument column(s) cannot identify {K} coefficient(s)"
        )

    lags = default_hac_lags(T) if spec.hac_lags is None else int(spec.hac_lags)
    XtZ = X.T @ Z
    Zty = Z.T @ y
    ZtZ_T = Z.T @ Z / T

    sv = np.linalg.svd(XtZ / T, compute_uv=False)
    if sv[0] == 0 or sv[-1] < 1e-12 * sv[0]:
        raise UnderIdentifiedError(
            "instruments are uncorrelated with some regressor (X'Z rank deficient)"
        )

    requested = spec.weighting if isinstance(spec.weighting, str) else "custom"
    used = requested

    def _inverse(M, what):
        try:
            _require_spd(M, what)
        except ValueError as exc:
            raise SingularityError(str(exc)) from None
        return np.linalg.solve(M, np.eye(M.shape[0]))

    if requested == "identity":
        W = np.eye(L)
    elif requested == "custom":
        W = np.asarray(spec.weighting, dtype=np.float64)
        _require_spd(W)
        if W.shape[0] != L:
            raise ValueError(f"weighting matrix is {W.shape[0]}x{W.shape[0]}, expected {L}x{L}")
    else:
        W = _inverse(ZtZ_T, "Z'Z/T")

    beta = _solve_beta(XtZ, W, Zty, x_names)

    if requested == "two_step_hac":
        u1 = y - X @ beta
        rss = float(u1 @ u1)
        tss = float(np.sum((y - y.mean()) ** 2))
        S1 = long_run_cov(Z * u1[:, None], lags)
        eig = np.linalg.eigvalsh(S1)
        # an exact first-step fit leaves only rounding noise in the moments,
        # so inverting S would amplify garbage; treat it like a singular S
        degenerate = rss <= 1e-14 * max(tss, 1e-300)
        if degenerate or eig[0] <= 1e-14 * max(eig[-1], 1e-300):
            logger.warning(
                "two-step weighting: moment covariance not positive definite "
                "(min eigenvalue %.3e); keeping the inverse_zz estimate", eig[0]
            )
            used = "inverse_zz (two-step fallback)"
        else:
            W = np.linalg.solve(S1, np.eye(L))
            beta = _solve_beta(XtZ, W, Zty, x_names)

    resid = y - X @ beta
    fitted = X @ beta
    df_resid = T - K
    sigma2 = float(resid @ resid) / df_resid

    G = XtZ.T / T  # L x K
    GtWG = G.T @ W @ G
    GtWG_inv = np.linalg.solve(GtWG, np.eye(K))
    S_final = long_run_cov(Z * resid[:, None], lags)

    if used == "two_step_hac":
        vcov_hac = GtWG_inv / T
    else:
        vcov_hac = GtWG_inv @ (G.T @ W @ S_final @ W @ G) @ GtWG_inv / T
    S0 = sigma2 * ZtZ_T
    vcov_classical = GtWG_inv @ (G.T @ W @ S0 @ W @ G) @ GtWG_inv / T

    gbar = Z.T @ resid / T
    j_dof = L - K
    resid_tss = float(np.sum((y - y.mean()) ** 2))
    if j_dof == 0:
        j_stat, j_pvalue = 0.0, math.nan
    elif float(resid @ resid) <= 1e-14 * max(resid_tss, 1e-300):
        j_stat, j_pvalue = 0.0, 1.0  # moments hold exactly
    else:
        eig = np.linalg.eigvalsh(S_final)
        if eig[0] <= 1e-14 * max(eig[-1], 1e-300):
            logger.warning("J statistic uses a pseudo-inverse moment covariance")
            Sj = np.linalg.pinv(S_final)
        else:
            Sj = np.linalg.solve(S_final, np.eye(L))
        j_stat = float(T * gbar @ Sj @ gbar)
        j_pvalue = float(stats.chi2.sf(j_stat, j_dof))

    # 2SLS-style fitted design (exogenous columns project onto themselves)
    fitted_design = Z @ np.column_stack(
        [_qr_solve_refined(Z, X[:, j]) for j in range(K)]
    )

    t_classical = _tstats(beta, vcov_classical)
    t_hac = _tstats(beta, vcov_hac)
    return GmmFit(
        method="IVGMM",
        names=x_names,
        coefficients=beta,
        residuals=resid,
        fitted=fitted,
        nobs=T,
        df_resid=df_resid,
        sigma2=sigma2,
        vcov_classical=vcov_classical,
        vcov_hac=vcov_hac,
        hac_lags=lags,
        t_classical=t_classical,
        t_hac=t_hac,
        p_classical=pvalues_for(t_classical, "IVGMM", df_resid),
        p_hac=pvalues_for(t_hac, "IVGMM", df_resid),
        adj_r2=adjusted_r2(y, resid, K),
        dw=durbin_watson(resid),
        weighting_requested=requested,
        weighting_used=used,
        instrument_names=z_names,
        moment_values=gbar,
        j_stat=j_stat,
        j_dof=j_dof,
        j_pvalue=j_pvalue,
        fitted_design=fitted_design,
    )


def gmm_distance_estimate(
    spec: GmmSpec,
    instruments: InstrumentSet,
    filtered: FilteredInstruments,
    degenerate_rtol: float = 1e-8,
) -> GmmFit:
    """Errors-in-variables robust estimate using the cumulant instruments.

    The excluded instruments are the stacked higher-moment columns whose
    first stage produced ``filtered``; under inverse_zz weighting the
    result is the two-stage least squares estimator on [exog | z1 | z2].
    The filter must not be degenerate: a regressor that is exactly linear
    in the instrument columns leaves d at zero and nothing to identify.
    """
    x_block = filtered.fitted + filtered.d
    for j, name in enumerate(filtered.source_names):
        scale = float(np.linalg.norm(x_block[:, j]))
        if float(np.linalg.norm(filtered.d[:, j])) <= degenerate_rtol * max(scale, 1e-300):
            raise UnderIdentifiedError(
                f"filtered instrument for {name!r} is numerically zero "
                "(regressor lies in the span of the instrument set)"
            )

    cols = np.hstack([instruments.z1, instruments.z2])
    col_names = [n for n in instruments.names if n != "const"]
    has_const = any(np.ptp(spec.exog[:, j]) == 0.0 for j in range(spec.exog.shape[1]))
    if not has_const:
        cols = np.hstack([instruments.z0[:, None], cols])
        col_names = ["const"] + col_names

    inner = GmmSpec(
        y=spec.y,
        exog=spec.exog,
        exog_names=spec.exog_names,
        endog=spec.endog,
        endog_names=spec.endog_names,
        instruments=cols,
        instrument_names=col_names,
        weighting=spec.weighting,
        hac_lags=spec.hac_lags,
    )
    return gmm_estimate(inner)
