"""Synthetic scenario generation and the estimation oracles."""

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from factoriv.simulate import (
    EivScenario,
    _standard_normals,
    generate_eiv,
    oracle_2sls,
    oracle_ols,
    parse_scenario_file,
    scenario_panels,
)


def basic_scenario(**kw):
    defaults = dict(
        seed=1,
        nobs=500,
        beta=[0.8],
        factor_cov=[[1.0]],
        meas_error_sd=[0.5],
        resid_sd=0.3,
    )
    defaults.update(kw)
    return EivScenario(**defaults)


class TestGenerator:
    def test_deterministic_across_calls(self):
        a = generate_eiv(basic_scenario())
        b = generate_eiv(basic_scenario())
        for x, y in zip(a, b):
            assert_array_equal(x, y)

    def test_seeds_differ(self):
        y1, _, _ = generate_eiv(basic_scenario(seed=1))
        y2, _, _ = generate_eiv(basic_scenario(seed=2))
        assert not np.array_equal(y1, y2)

    def test_standard_normals_moments(self):
        g = _standard_normals(10, (200_000, 1))[:, 0]
        assert abs(g.mean()) < 0.01
        assert abs(g.std() - 1.0) < 0.01
        assert abs(np.mean(g ** 3)) < 0.03

    def test_gaussian_factor_covariance(self):
        cov = [[1.0, 0.6], [0.6, 2.0]]
        scn = basic_scenario(
            nobs=200_000, beta=[0.5, 0.5], factor_cov=cov, meas_error_sd=[0.0, 0.0]
        )
        _, X_true, X_obs = generate_eiv(scn)
        assert_array_equal(X_true, X_obs)  # no measurement error
        assert_allclose(np.cov(X_true.T), cov, atol=0.03)

    def test_chi_squared_factors_are_skewed(self):
        scn = basic_scenario(nobs=200_000, factor_dist="chi_squared")
        _, X_true, _ = generate_eiv(scn)
        x = X_true[:, 0]
        skew = np.mean((x - x.mean()) ** 3) / x.std() ** 3
        assert abs(skew - np.sqrt(8.0)) < 0.2  # chi2(1) skewness
        assert abs(x.mean()) < 0.02
        assert abs(x.std() - 1.0) < 0.02

    def test_measurement_error_adds_orthogonal_noise(self):
        scn = basic_scenario(nobs=100_000, meas_error_sd=[0.7])
        _, X_true, X_obs = generate_eiv(scn)
        u = X_obs - X_true
        assert abs(u.std() - 0.7) < 0.02
        assert abs(np.corrcoef(u[:, 0], X_true[:, 0])[0, 1]) < 0.02

    def test_dependent_series_regression(self):
        scn = basic_scenario(nobs=200_000, intercept=0.3, meas_error_sd=[0.0])
        y, X_true, _ = generate_eiv(scn)
        b = oracle_ols(y, np.column_stack([np.ones(len(y)), X_true]))
        assert_allclose(b, [0.3, 0.8], atol=0.01)

    def test_validation(self):
        with pytest.raises(ValueError, match="positive definite"):
            basic_scenario(factor_cov=[[-1.0]])
        with pytest.raises(ValueError, match="factor_dist"):
            basic_scenario(factor_dist="cauchy")
        with pytest.raises(ValueError, match="length"):
            basic_scenario(meas_error_sd=[0.1, 0.2])


class TestScenarioPanels:
    def test_panels_shape_and_dates(self):
        factors, ports = scenario_panels(basic_scenario(nobs=24), start=(1990, 5))
        assert factors.dates.label(0) == "1990-05"
        assert factors.dates.label(23) == "1992-04"
        assert ports.names == ["SIM"]
        assert factors.names == ["x1"]

    def test_returns_use_observed_factors(self):
        scn = basic_scenario(nobs=50, meas_error_sd=[0.0], resid_sd=0.0)
        factors, ports = scenario_panels(scn)
        assert_allclose(ports.values[:, 0], 0.8 * factors.values[:, 0], atol=1e-12)


class TestScenarioFile:
    def test_full_roundtrip(self, tmp_path):
        p = tmp_path / "scn.txt"
        p.write_text(
            "# comment\n"
            "seed = 9\n"
            "nobs = 120\n"
            "beta = 0.5, -0.2\n"
            "factor_cov = 1.0, 0.3; 0.3, 2.0\n"
            "meas_error_sd = 0.4, 0.0\n"
            "resid_sd = 0.7\n"
            "intercept = 0.05\n"
            "factor_dist = chi_squared\n"
            "factor_names = F1, F2\n"
        )
        scn = parse_scenario_file(p)
        assert scn.seed == 9 and scn.nobs == 120
        assert_array_equal(scn.beta, [0.5, -0.2])
        assert_allclose(scn.factor_cov, [[1.0, 0.3], [0.3, 2.0]])
        assert scn.factor_names == ["F1", "F2"]
        assert scn.factor_dist == "chi_squared"

    def test_factor_sd_expands_to_diagonal(self, tmp_path):
        p = tmp_path / "scn.txt"
        p.write_text(
            "seed=1\nnobs=50\nbeta=1.0,2.0\nfactor_sd=2.0,3.0\n"
            "meas_error_sd=0,0\nresid_sd=1.0\n"
        )
        scn = parse_scenario_file(p)
        assert_allclose(scn.factor_cov, [[4.0, 0.0], [0.0, 9.0]])

    def test_missing_keys(self, tmp_path):
        p = tmp_path / "scn.txt"
        p.write_text("seed=1\nnobs=50\n")
        with pytest.raises(ValueError, match="missing"):
            parse_scenario_file(p)

    def test_unknown_key(self, tmp_path):
        p = tmp_path / "scn.txt"
        p.write_text("seed=1\nnobs=50\nbeta=1\nmeas_error_sd=0\nresid_sd=1\nbogus=2\n")
        with pytest.raises(ValueError, match="unknown"):
            parse_scenario_file(p)


class TestOracles:
    def test_ols_oracle_mpmath_agrees_on_easy_problem(self):
        g = _standard_normals(20, (100, 3))
        X = np.column_stack([np.ones(100), g[:, :2]])
        y = X @ np.array([1.0, -2.0, 0.5]) + 0.1 * g[:, 2]
        assert_allclose(oracle_ols(y, X), oracle_ols(y, X, dps=40), atol=1e-12)

    def test_2sls_oracle_reduces_to_ols_when_z_is_x(self):
        g = _standard_normals(21, (100, 3))
        X = np.column_stack([np.ones(100), g[:, :2]])
        y = X @ np.array([1.0, -2.0, 0.5]) + 0.1 * g[:, 2]
        assert_allclose(oracle_2sls(y, X, X), oracle_ols(y, X), atol=1e-10)

    def test_attenuation_magnitudes(self):
        # equal signal and noise variance halves the OLS slope
        scn = basic_scenario(
            seed=5, nobs=50_000, beta=[0.5], meas_error_sd=[1.0],
            factor_dist="chi_squared",
        )
        y, _, X_obs = generate_eiv(scn)
        slope = np.polyfit(X_obs[:, 0], y, 1)[0]
        assert abs(slope - 0.25) < 0.02
