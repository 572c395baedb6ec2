"""Higher-moment (cumulant) instruments for errors-in-variables regressions.

For each regressor column x (demeaned by default) the builder forms

    z1 = x * x                      (element-wise square)
    z2 = x * x * x - 3 x D          (cube less the Gaussian-kurtosis part,
                                     D = diag of sample second moments)

and stacks them with a constant into Z = [z0 | z1 | z2]. A single OLS
first stage of X on Z yields fitted values x_hat and the filtered
residual instruments d = X - x_hat.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass

import numpy as np

from .ols import SingularityError, _check_rank, _qr_solve_refined

logger = logging.getLogger(__name__)


@dataclass(kw_only=True)
class InstrumentSet:
    """Stacked cumulant instruments built from a regressor block."""

    source_names: list[str]
    names: list[str]
    z0: np.ndarray
    z1: np.ndarray
    z2: np.ndarray
    stacked: np.ndarray
    means: np.ndarray
    second_moments: np.ndarray
    demeaned: bool
    first_stage_coefficients: np.ndarray | None = None

    @property
    def nobs(self) -> int:
        return self.stacked.shape[0]

    @property
    def ncols(self) -> int:
        return self.stacked.shape[1]


@dataclass(kw_only=True)
class FilteredInstruments:
    """First-stage fitted values and the filtered instruments d = X - fitted."""

    source_names: list[str]
    fitted: np.ndarray
    d: np.ndarray

    @property
    def names(self) -> list[str]:
        return [f"d_{n}" for n in self.source_names]


def build_cumulant_instruments(
    X: np.ndarray, names: list[str] | None = None, demean: bool = True
) -> InstrumentSet:
    """Build Z = [z0 | z1 | z2] (T x (2n+1)) from an n-column regressor block."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    T, n = X.shape
    if names is None:
        names = [f"x{j + 1}" for j in range(n)]
    if len(names) != n:
        raise ValueError(f"{n} columns but {len(names)} names")
    if not np.all(np.isfinite(X)):
        raise ValueError("regressor block contains non-finite values")
    if T <= 2 * n + 1:
        raise ValueError(f"need nobs > 2n+1 instrument columns, got T={T}, n={n}")

    means = X.mean(axis=0)
    xc = X - means if demean else X.copy()
    second = (xc * xc).mean(axis=0)
    z1 = xc * xc
    z2 = xc ** 3 - 3.0 * xc * second
    z0 = np.ones(T)
    stacked = np.hstack([z0[:, None], z1, z2])
    col_names = ["const"] + [f"z1_{s}" for s in names] + [f"z2_{s}" for s in names]
    return InstrumentSet(
        source_names=list(names),
        names=col_names,
        z0=z0,
        z1=z1,
        z2=z2,
        stacked=stacked,
        means=means,
        second_moments=second,
        demeaned=demean,
    )


def project_fitted(X: np.ndarray, instruments: InstrumentSet) -> np.ndarray:
    """First-stage fitted values x_hat = Z (Z'Z)^-1 Z' X.

    Instrument columns are scaled to unit sample sd before solving (the
    fitted values are invariant to this); coefficients are mapped back to
    the original scale and stored on ``instruments``.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    Z = instruments.stacked
    if X.shape[0] != Z.shape[0]:
        raise ValueError("X and instruments have different row counts")

    sd = Z.std(axis=0, ddof=1)
    scale = np.where(sd > 0, sd, 1.0)
    Zs = Z / scale
    try:
        _check_rank(Zs, instruments.names)
    except SingularityError as exc:
        raise SingularityError(f"instrument matrix is rank deficient: {exc}") from None

    # one multi-RHS solve covers every first stage
    coef_s = np.column_stack([_qr_solve_refined(Zs, X[:, j]) for j in range(X.shape[1])])
    coef = coef_s / scale[:, None]
    instruments.first_stage_coefficients = coef
    return Zs @ coef_s


def residual_instruments(X: np.ndarray, fitted: np.ndarray, names: list[str] | None = None) -> FilteredInstruments:
    """Filtered instruments d = X - fitted from the cumulant first stage."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    fitted = np.asarray(fitted, dtype=np.float64)
    if fitted.shape != X.shape:
        raise ValueError(f"fitted shape {fitted.shape} does not match X shape {X.shape}")
    if names is None:
        names = [f"x{j + 1}" for j in range(X.shape[1])]
    return FilteredInstruments(source_names=list(names), fitted=fitted, d=X - fitted)


def filter_regressors(
    X: np.ndarray, names: list[str] | None = None, demean: bool = True
) -> tuple[InstrumentSet, FilteredInstruments]:
    """Convenience: build instruments, run the first stage, return both."""
    inst = build_cumulant_instruments(X, names=names, demean=demean)
    fitted = project_fitted(X, inst)
    return inst, residual_instruments(X, fitted, names=inst.source_names)


def dump_instruments(instruments: InstrumentSet, filtered: FilteredInstruments | None, directory) -> None:
    """Debug dump of the Z (and optionally d) matrices as CSV for audit."""
    import os

    os.makedirs(directory, exist_ok=True)

    def _write(path, header, matrix):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in matrix:
                w.writerow([repr(float(v)) for v in row])

    _write(os.path.join(directory, "instruments_z.csv"), instruments.names, instruments.stacked)
    if filtered is not None:
        _write(os.path.join(directory, "instruments_d.csv"), filtered.names, filtered.d)
