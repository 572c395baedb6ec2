"""Synthetic errors-in-variables scenarios and brute-force estimator oracles.

Draws come from the counter-based Philox generator and normals are
produced by the inverse-CDF transform of open-interval uniforms, so a
seed reproduces the same bytes on every platform (no rejection sampling).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

from .panel import DateIndex, FactorPanel

FACTOR_DISTS = ("gaussian", "chi_squared")


@dataclass(kw_only=True)
class EivScenario:
    """A linear model y = intercept + X_true b + eps with noisy regressors.

    X_obs = X_true + u, u Gaussian with per-column sd ``meas_error_sd``.
    ``factor_dist`` sets the marginal law of the true factors: "gaussian",
    or "chi_squared" (standardized chi-square(1): skewed and heavy-tailed,
    which is what gives the higher-moment instruments their bite).
    """

    seed: int
    nobs: int
    beta: np.ndarray
    factor_cov: np.ndarray
    meas_error_sd: np.ndarray
    resid_sd: float
    intercept: float = 0.0
    factor_dist: str = "gaussian"
    factor_names: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.beta = np.atleast_1d(np.asarray(self.beta, dtype=np.float64))
        k = len(self.beta)
        self.factor_cov = np.atleast_2d(np.asarray(self.factor_cov, dtype=np.float64))
        if self.factor_cov.shape != (k, k):
            raise ValueError(f"factor_cov must be {k}x{k}")
        if not np.allclose(self.factor_cov, self.factor_cov.T):
            raise ValueError("factor_cov must be symmetric")
        if np.linalg.eigvalsh(self.factor_cov)[0] <= 0:
            raise ValueError("factor_cov must be positive definite")
        self.meas_error_sd = np.atleast_1d(np.asarray(self.meas_error_sd, dtype=np.float64))
        if self.meas_error_sd.shape != (k,):
            raise ValueError(f"meas_error_sd must have length {k}")
        if np.any(self.meas_error_sd < 0):
            raise ValueError("meas_error_sd must be non-negative")
        if self.resid_sd < 0:
            raise ValueError("resid_sd must be non-negative")
        if self.nobs < 1:
            raise ValueError("nobs must be positive")
        if self.factor_dist not in FACTOR_DISTS:
            raise ValueError(f"factor_dist must be one of {FACTOR_DISTS}")
        if not self.factor_names:
            self.factor_names = [f"x{j + 1}" for j in range(k)]
        if len(self.factor_names) != k:
            raise ValueError("factor_names length does not match beta")

    @property
    def nfactors(self) -> int:
        return len(self.beta)


def _standard_normals(seed: int, shape: tuple[int, ...]) -> np.ndarray:
    """Deterministic N(0,1) draws: Philox integers -> open uniforms -> ndtri."""
    gen = np.random.Generator(np.random.Philox(seed))
    k = gen.integers(0, 2**53, size=shape, dtype=np.uint64)
    return ndtri((k.astype(np.float64) + 0.5) / 2**53)


def generate_eiv(scenario: EivScenario) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return (y, X_true, X_obs) for one scenario."""
    T, k = scenario.nobs, scenario.nfactors
    g = _standard_normals(scenario.seed, (T, 2 * k + 1))

    sds = np.sqrt(np.diag(scenario.factor_cov))
    corr = scenario.factor_cov / np.outer(sds, sds)
    base = g[:, :k] @ np.linalg.cholesky(corr).T
    if scenario.factor_dist == "chi_squared":
        # standardized chi-square(1) marginals; cross-correlations are
        # inherited from the Gaussian copula and therefore approximate
        base = (base * base - 1.0) / np.sqrt(2.0)
    X_true = base * sds

    u = g[:, k:2 * k] * scenario.meas_error_sd
    eps = g[:, 2 * k] * scenario.resid_sd
    y = scenario.intercept + X_true @ scenario.beta + eps
    return y, X_true, X_true + u


def scenario_panels(
    scenario: EivScenario,
    start: tuple[int, int] = (1986, 1),
    portfolio_name: str = "SIM",
) -> tuple[FactorPanel, FactorPanel]:
    """Package one scenario as (factors, portfolios) monthly panels."""
    y, _, X_obs = generate_eiv(scenario)
    first = start[0] * 12 + start[1] - 1
    dates = DateIndex.from_serials(np.arange(first, first + scenario.nobs, dtype=np.int64))
    factors = FactorPanel(dates, list(scenario.factor_names), X_obs, label="factors")
    ports = FactorPanel(dates, [portfolio_name], y[:, None], label="portfolios")
    return factors, ports


def _parse_matrix(text: str) -> np.ndarray:
    rows = [r for r in (s.strip() for s in text.split(";")) if r]
    return np.array([[float(c) for c in r.split(",") if c.strip() != ""] for r in rows])


def parse_scenario_file(path) -> EivScenario:
    """Read a key = value scenario description.

    Keys: seed, nobs, beta, resid_sd, meas_error_sd, intercept,
    factor_dist, factor_names, and either factor_sd (diagonal covariance)
    or factor_cov (rows separated by ';').
    """
    entries: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            key, val = (s.strip() for s in line.split("=", 1))
            entries[key] = val

    known = {"seed", "nobs", "beta", "resid_sd", "meas_error_sd", "intercept",
             "factor_dist", "factor_names", "factor_sd", "factor_cov"}
    unknown = sorted(set(entries) - known)
    if unknown:
        raise ValueError(f"{path}: unknown scenario key(s): {', '.join(unknown)}")
    missing = sorted({"seed", "nobs", "beta", "resid_sd", "meas_error_sd"} - set(entries))
    if missing:
        raise ValueError(f"{path}: missing scenario key(s): {', '.join(missing)}")

    beta = np.array([float(t) for t in entries["beta"].split(",") if t.strip() != ""])
    k = len(beta)
    if "factor_cov" in entries:
        cov = _parse_matrix(entries["factor_cov"])
    elif "factor_sd" in entries:
        sd = np.array([float(t) for t in entries["factor_sd"].split(",") if t.strip() != ""])
        if len(sd) != k:
            raise ValueError(f"{path}: factor_sd must list {k} values")
        cov = np.diag(sd ** 2)
    else:
        cov = np.eye(k)
    names = [t.strip() for t in entries.get("factor_names", "").split(",") if t.strip()]
    return EivScenario(
        seed=int(entries["seed"]),
        nobs=int(entries["nobs"]),
        beta=beta,
        factor_cov=cov,
        meas_error_sd=np.array(
            [float(t) for t in entries["meas_error_sd"].split(",") if t.strip() != ""]
        ),
        resid_sd=float(entries["resid_sd"]),
        intercept=float(entries.get("intercept", "0.0")),
        factor_dist=entries.get("factor_dist", "gaussian"),
        factor_names=names,
    )


def oracle_ols(y: np.ndarray, X: np.ndarray, dps: int | None = None) -> np.ndarray:
    """Textbook (X'X)^-1 X'y, deliberately not sharing the QR main path.

    With ``dps`` set, the normal equations are formed and solved in
    mpmath arbitrary precision, which stays accurate even when squaring
    the condition number would sink a double-precision solve.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if dps is None:
        try:
            return np.linalg.solve(X.T @ X, X.T @ y)
        except np.linalg.LinAlgError as exc:
            raise ValueError(f"normal equations are singular: {exc}") from None
    import mpmath as mp

    with mp.workdps(dps):
        Xm = mp.matrix(X.tolist())
        ym = mp.matrix(y.tolist())
        bm = mp.lu_solve(Xm.T * Xm, Xm.T * ym)
        return np.array([float(v) for v in bm])


def oracle_2sls(y: np.ndarray, X: np.ndarray, Z: np.ndarray) -> np.ndarray:
    """Textbook two-stage least squares via explicit projection."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    Z = np.asarray(Z, dtype=np.float64)
    try:
        X_hat = Z @ np.linalg.solve(Z.T @ Z, Z.T @ X)
        return np.linalg.solve(X_hat.T @ X, X_hat.T @ y)
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"two-stage system is singular: {exc}") from None
