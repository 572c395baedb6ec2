"""Time-series OLS with HAC (Newey-West) covariance and fit diagnostics."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats
from scipy.linalg import solve_triangular

logger = logging.getLogger(__name__)

# Relative singular-value cutoff below which a design is treated as singular.
SINGULARITY_RTOL = 1e-10


class SingularityError(ValueError):
    """Raised when a design or instrument matrix is numerically rank deficient."""


def default_hac_lags(nobs: int) -> int:
    """Newey-West truncation rule floor(4 * (T/100)^(2/9))."""
    if nobs <= 0:
        raise ValueError("nobs must be positive")
    return int(math.floor(4.0 * (nobs / 100.0) ** (2.0 / 9.0)))


@dataclass
class DesignMatrix:
    """Regressor matrix with column names."""

    names: list[str]
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ValueError("design must be 2-d")
        if self.values.shape[1] != len(self.names):
            raise ValueError("design has {} columns but {} names".format(
                self.values.shape[1], len(self.names)))
        if len(set(self.names)) != len(self.names):
            raise ValueError("design column names must be unique")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("design contains non-finite cells")

    @property
    def nobs(self) -> int:
        return self.values.shape[0]

    @property
    def ncols(self) -> int:
        return self.values.shape[1]


def add_intercept(X: np.ndarray, names: list[str], intercept_name: str = "alpha") -> DesignMatrix:
    X = np.asarray(X, dtype=np.float64)
    ones = np.ones((X.shape[0], 1))
    return DesignMatrix([intercept_name] + list(names), np.hstack([ones, X]))


@dataclass(kw_only=True)
class FitResult:
    """Coefficients plus classical and HAC inference for one regression.

    ``method`` controls the reference distribution for p-values:
    Student t with T-K dof for "OLS", standard normal for "IVGMM".
    """

    method: str
    names: list[str]
    coefficients: np.ndarray
    residuals: np.ndarray
    fitted: np.ndarray
    nobs: int
    df_resid: int
    sigma2: float
    vcov_classical: np.ndarray
    vcov_hac: np.ndarray
    hac_lags: int
    t_classical: np.ndarray
    t_hac: np.ndarray
    p_classical: np.ndarray
    p_hac: np.ndarray
    adj_r2: float
    dw: float

    def _idx(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise ValueError(f"fit has no coefficient named {name!r}") from None

    def coef(self, name: str) -> float:
        return float(self.coefficients[self._idx(name)])

    def t_stat(self, name: str, kind: str = "hac") -> float:
        arr = self.t_hac if kind == "hac" else self.t_classical
        return float(arr[self._idx(name)])

    def p_value(self, name: str, kind: str = "hac") -> float:
        arr = self.p_hac if kind == "hac" else self.p_classical
        return float(arr[self._idx(name)])


def _check_rank(values: np.ndarray, names: list[str]) -> None:
    """Raise SingularityError naming the dependent columns, if any."""
    sv = np.linalg.svd(values, compute_uv=False)
    if sv[0] == 0 or sv[-1] < SINGULARITY_RTOL * sv[0]:
        from scipy.linalg import qr

        _, R, piv = qr(values, mode="economic", pivoting=True)
        diag = np.abs(np.diag(R))
        rank = int(np.sum(diag > SINGULARITY_RTOL * diag[0])) if diag[0] > 0 else 0
        bad = sorted(names[j] for j in piv[rank:])
        raise SingularityError(
            "design is numerically singular; collinear column(s): " + ", ".join(bad)
        )


def _qr_solve_refined(X: np.ndarray, y: np.ndarray, steps: int = 2) -> np.ndarray:
    """Householder QR solve with extended-precision iterative refinement.

    Refinement uses the augmented-system correction with residuals
    accumulated in long double, which keeps the solution close to the
    exact least-squares solution even for badly conditioned designs.
    """
    Q, R = np.linalg.qr(X)
    beta = solve_triangular(R, Q.T @ y)
    r = y - X @ beta
    Xl = X.astype(np.longdouble)
    yl = y.astype(np.longdouble)
    for _ in range(steps):
        rl = r.astype(np.longdouble)
        bl = beta.astype(np.longdouble)
        f = np.asarray(yl - rl - Xl @ bl, dtype=np.float64)
        g = np.asarray(-(Xl.T @ rl), dtype=np.float64)
        z = solve_triangular(R.T, g, lower=True)
        db = solve_triangular(R, Q.T @ f - z)
        beta = beta + db
        r = r + (f - X @ db)
    return beta


def long_run_cov(moments: np.ndarray, lags: int) -> np.ndarray:
    """Newey-West long-run covariance (1/T) * [S0 + sum w_l (S_l + S_l')].

    ``moments`` holds one moment observation per row; Bartlett weights
    w_l = 1 - l/(lags+1) guarantee a positive semidefinite result.
    lags=0 reduces to the outer-product (White) estimate.
    """
    U = np.asarray(moments, dtype=np.float64)
    T = U.shape[0]
    if lags < 0:
        raise ValueError("lags must be non-negative")
    S = U.T @ U
    for l in range(1, min(lags, T - 1) + 1):
        w = 1.0 - l / (lags + 1.0)
        A = U[l:].T @ U[:-l]
        S += w * (A + A.T)
    return S / T


def hac_covariance(X: np.ndarray, residuals: np.ndarray, lags: int) -> np.ndarray:
    """Sandwich (X'X)^-1 S (X'X)^-1 with S the Newey-West sum of x_t*u_t."""
    X = np.asarray(X, dtype=np.float64)
    u = np.asarray(residuals, dtype=np.float64)
    T = X.shape[0]
    S_sum = T * long_run_cov(X * u[:, None], lags)
    XtX = X.T @ X
    bread = np.linalg.solve(XtX, np.eye(XtX.shape[0]))
    return bread @ S_sum @ bread


def durbin_watson(residuals: np.ndarray) -> float:
    e = np.asarray(residuals, dtype=np.float64)
    denom = float(e @ e)
    if denom == 0.0:
        raise ValueError("Durbin-Watson undefined for all-zero residuals")
    return float(np.sum(np.diff(e) ** 2) / denom)


def adjusted_r2(y: np.ndarray, residuals: np.ndarray, ncoef: int) -> float:
    y = np.asarray(y, dtype=np.float64)
    e = np.asarray(residuals, dtype=np.float64)
    T = y.shape[0]
    tss = float(np.sum((y - y.mean()) ** 2))
    if tss == 0.0:
        raise ValueError("adjusted R^2 undefined for a constant dependent series")
    if T <= ncoef:
        raise ValueError("need more observations than coefficients")
    rss = float(e @ e)
    return 1.0 - (rss / (T - ncoef)) / (tss / (T - 1))


def _tstats(coef: np.ndarray, vcov: np.ndarray) -> np.ndarray:
    se = np.sqrt(np.clip(np.diag(vcov), 0.0, None))
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(se > 0, coef / se, np.where(coef == 0.0, 0.0, np.inf * np.sign(coef)))
    return t


def pvalues_for(t: np.ndarray, method: str, df_resid: int) -> np.ndarray:
    """Two-sided p-values: Student t (T-K dof) for OLS, standard normal for IVGMM."""
    t = np.abs(np.asarray(t, dtype=np.float64))
    if method == "OLS":
        return 2.0 * stats.t.sf(t, df_resid)
    return 2.0 * stats.norm.sf(t)


def ols_fit(y: np.ndarray, design: DesignMatrix, hac_lags: int | None = None) -> FitResult:
    """OLS via orthogonal (QR) decomposition; never inverts X'X for the solve."""
    y = np.asarray(y, dtype=np.float64)
    X = design.values
    T, K = X.shape
    if y.shape != (T,):
        raise ValueError(f"y has shape {y.shape}, expected ({T},)")
    if not np.all(np.isfinite(y)):
        raise ValueError("y contains non-finite values")
    if T <= K:
        raise ValueError(f"need nobs > ncoef, got T={T}, K={K}")
    _check_rank(X, design.names)

    beta = _qr_solve_refined(X, y)
    fitted = X @ beta
    resid = y - fitted
    df_resid = T - K
    sigma2 = float(resid @ resid) / df_resid

    XtX = X.T @ X
    vcov_classical = sigma2 * np.linalg.solve(XtX, np.eye(K))
    lags = default_hac_lags(T) if hac_lags is None else int(hac_lags)
    vcov_hac = hac_covariance(X, resid, lags)

    t_classical = _tstats(beta, vcov_classical)
    t_hac = _tstats(beta, vcov_hac)
    return FitResult(
        method="OLS",
        names=list(design.names),
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
        p_classical=pvalues_for(t_classical, "OLS", df_resid),
        p_hac=pvalues_for(t_hac, "OLS", df_resid),
        adj_r2=adjusted_r2(y, resid, K),
        dw=durbin_watson(resid) if float(resid @ resid) > 0.0 else np.nan,
    )
