"""Instrument and specification diagnostics.

- relevance: per-regressor first-stage F (HAC-robust Wald) against the
  strong-instrument threshold of 24
- exogeneity: regression of residuals on the instruments
- Hausman: OLS vs instrumented coefficients
- Harvey screen: |t| > 3.00 economic-significance cut
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .gmm import GmmFit
from .ols import DesignMatrix, FitResult, default_hac_lags, hac_covariance, ols_fit

logger = logging.getLogger(__name__)

RELEVANCE_THRESHOLD = 24.0
HARVEY_THRESHOLD = 3.0

# RSS/TSS below this is treated as an exact linear fit (F capped at infinity).
_PERFECT_FIT_RTOL = 1e-14


@dataclass(kw_only=True)
class RelevanceRecord:
    regressor: str
    instrument_names: list[str]
    coefficients: np.ndarray
    t_stats: np.ndarray
    f_stat: float
    n_restrictions: int
    excluded_instrument: str | None
    capped: bool
    verdict: str  # "Strong" | "Weak"


@dataclass(kw_only=True)
class RelevanceReport:
    records: list[RelevanceRecord]
    threshold: float
    overall: str  # "Robust" | "Weak"

    def f_stats(self) -> list[float]:
        return [r.f_stat for r in self.records]


def relevance_verdicts(f_values, threshold: float = RELEVANCE_THRESHOLD) -> tuple[list[str], str]:
    """Strong iff F is strictly above the threshold; Robust iff any is."""
    verdicts = ["Strong" if f > threshold else "Weak" for f in f_values]
    overall = "Robust" if any(v == "Strong" for v in verdicts) else "Weak"
    return verdicts, overall


def _find_intercept(Z: np.ndarray) -> int:
    for j in range(Z.shape[1]):
        col = Z[:, j]
        if np.ptp(col) == 0.0 and col[0] != 0.0:
            return j
    return -1


def relevance_test(
    X: np.ndarray,
    x_names: list[str],
    Z: np.ndarray,
    z_names: list[str],
    hac_lags: int | None = None,
    threshold: float = RELEVANCE_THRESHOLD,
    exclude_own: bool = True,
) -> RelevanceReport:
    """First-stage relevance of the instruments for each regressor.

    Each regressor is regressed on the instrument set and the joint
    HAC-robust Wald F that every non-intercept coefficient is zero is
    compared against ``threshold`` (strictly). When the instruments map
    one-to-one onto the regressors (one non-intercept column each), the
    regressor's own instrument is left out of its regression.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[0] == 1 and len(x_names) != X.shape[1]:
        X = X.T
    Z = np.asarray(Z, dtype=np.float64)
    T = X.shape[0]
    if Z.shape[0] != T:
        raise ValueError("X and Z have different row counts")
    icpt = _find_intercept(Z)
    if icpt < 0:
        raise ValueError("instrument matrix must include an intercept column")
    lags = default_hac_lags(T) if hac_lags is None else int(hac_lags)

    non_icpt = [j for j in range(Z.shape[1]) if j != icpt]
    own_map: dict[int, int] = {}
    if exclude_own and len(non_icpt) == X.shape[1]:
        own_map = {k: non_icpt[k] for k in range(X.shape[1])}

    records: list[RelevanceRecord] = []
    for k, name in enumerate(x_names):
        drop = own_map.get(k)
        cols = [j for j in range(Z.shape[1]) if j != drop]
        if len(cols) < 2:
            raise ValueError(
                f"fewer than 2 instrument columns left for {name!r} after own-instrument exclusion"
            )
        Zk = Z[:, cols]
        zk_names = [z_names[j] for j in cols]
        fit = ols_fit(X[:, k], DesignMatrix(zk_names, Zk), hac_lags=lags)
        tested = [i for i, j in enumerate(cols) if j != icpt]
        q = len(tested)

        tss = float(np.sum((X[:, k] - X[:, k].mean()) ** 2))
        rss = float(fit.residuals @ fit.residuals)
        if tss > 0 and rss <= _PERFECT_FIT_RTOL * tss:
            f_stat, capped = np.inf, True
        else:
            c = fit.coefficients[tested]
            V = fit.vcov_hac[np.ix_(tested, tested)]
            f_stat = float(c @ np.linalg.solve(V, c) / q)
            capped = False
        records.append(
            RelevanceRecord(
                regressor=name,
                instrument_names=zk_names,
                coefficients=fit.coefficients.copy(),
                t_stats=fit.t_hac.copy(),
                f_stat=f_stat,
                n_restrictions=q,
                excluded_instrument=z_names[drop] if drop is not None else None,
                capped=capped,
                verdict="Strong" if f_stat > threshold else "Weak",
            )
        )
    overall = "Robust" if any(r.verdict == "Strong" for r in records) else "Weak"
    return RelevanceReport(records=records, threshold=threshold, overall=overall)


@dataclass(kw_only=True)
class ExogeneityReport:
    names: list[str]
    coefficients: np.ndarray
    p_values: np.ndarray
    r2: float
    verdict: str  # "Exogenous" | "Suspect"


def exogeneity_test(
    residuals: np.ndarray,
    Z: np.ndarray,
    z_names: list[str],
    alpha: float = 0.05,
) -> ExogeneityReport:
    """Regress residuals on the instruments; Exogenous iff no coefficient is significant.

    When Z lies in the span of the regression that produced the residuals,
    every coefficient is zero to machine precision and the p-values are 1
    by construction; the test is then vacuous rather than informative.
    """
    e = np.asarray(residuals, dtype=np.float64)
    Z = np.asarray(Z, dtype=np.float64)
    if Z.ndim == 1:
        Z = Z[:, None]
    names = list(z_names)
    if _find_intercept(Z) < 0:
        Z = np.hstack([np.ones((Z.shape[0], 1)), Z])
        names = ["alpha"] + names

    T, K = Z.shape
    beta = np.linalg.lstsq(Z, e, rcond=None)[0]
    resid = e - Z @ beta
    rss = float(resid @ resid)
    tss = float(np.sum((e - e.mean()) ** 2))
    r2 = 0.0 if tss == 0.0 else 1.0 - rss / tss

    sigma2 = rss / (T - K)
    se = np.sqrt(np.clip(sigma2 * np.diag(np.linalg.pinv(Z.T @ Z)), 0.0, None))
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(se > 0, beta / se, np.where(np.abs(beta) < 1e-30, 0.0, np.inf))
    p = 2.0 * stats.t.sf(np.abs(t), T - K)
    verdict = "Exogenous" if bool(np.all(p > alpha)) else "Suspect"
    return ExogeneityReport(names=names, coefficients=beta, p_values=p, r2=r2, verdict=verdict)


@dataclass(kw_only=True)
class HausmanReport:
    stat: float
    dof: int
    p_value: float
    s2_common: float
    delta: np.ndarray
    shared: list[str]
    verdict: str  # "MeasurementError" | "OLSConsistent"


def hausman_test(
    ols: FitResult,
    ivgmm: GmmFit,
    X: DesignMatrix,
    X_hat: DesignMatrix,
    alpha: float = 0.05,
) -> HausmanReport:
    """H = d' [ (Xhat'Xhat)^-1 - (X'X)^-1 ]^+ d / s^2 on the shared coefficients.

    The bracketed difference is symmetrized and projected onto its positive
    semidefinite part; the degrees of freedom equal its numerical rank.
    s^2 comes from the OLS fit.
    """
    shared = [n for n in ols.names if n in ivgmm.names]
    if not shared:
        raise ValueError("fits have no coefficient names in common")
    for n in shared:
        if n not in X.names or n not in X_hat.names:
            raise ValueError(f"design matrices are missing shared coefficient {n!r}")

    d = np.array([ivgmm.coef(n) - ols.coef(n) for n in shared])

    M_e = np.linalg.inv(X.values.T @ X.values)
    M_i = np.linalg.inv(X_hat.values.T @ X_hat.values)
    ie = [X.names.index(n) for n in shared]
    ii = [X_hat.names.index(n) for n in shared]
    A = M_i[np.ix_(ii, ii)] - M_e[np.ix_(ie, ie)]
    A = 0.5 * (A + A.T)

    w, V = np.linalg.eigh(A)
    tol = 1e-12 * max(float(np.abs(w).max()), 1e-300)
    keep = w > tol
    dof = int(keep.sum())
    if dof < len(shared):
        logger.info("Hausman difference matrix has rank %d of %d; using its PSD part", dof, len(shared))
    if dof == 0:
        stat, p = 0.0, 1.0
    else:
        Vi = V[:, keep]
        stat = float(d @ (Vi @ ((Vi.T @ d) / w[keep])) / ols.sigma2)
        stat = max(stat, 0.0)
        p = float(stats.chi2.sf(stat, dof))
    verdict = "MeasurementError" if p < alpha else "OLSConsistent"
    return HausmanReport(stat=stat, dof=dof, p_value=p, s2_common=float(ols.sigma2),
                         delta=d, shared=shared, verdict=verdict)


@dataclass(kw_only=True)
class HarveyRecord:
    factor: str
    coefficient: float
    t_ratio: float
    threshold: float
    passed: bool


def harvey_screen(fit: FitResult, factor: str, threshold: float = HARVEY_THRESHOLD) -> HarveyRecord:
    """Keep a factor only when |t| is strictly above the threshold (sign ignored)."""
    t = fit.t_stat(factor, kind="hac")
    return HarveyRecord(
        factor=factor,
        coefficient=fit.coef(factor),
        t_ratio=t,
        threshold=threshold,
        passed=bool(abs(t) > threshold),
    )
