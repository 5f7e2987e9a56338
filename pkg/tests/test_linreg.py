import math

import numpy as np
import pytest

from cointkit.data import ObservationSeries
from cointkit.errors import CollinearityError, DegenerateFitError, InsufficientDataError, RestrictionError
from cointkit.linreg import (
    AdlSpec,
    DesignMatrix,
    adl_fit,
    cusum_sq_test,
    cusum_test,
    lop_coefficient_sum_test,
    ols_fit,
    recursive_residuals,
    schwarz_criterion,
    wald_linear_restriction,
)
from expected import EXPECTED
from fixtures import ADL12_X, ADL12_Y, ALT40, CUSUM40, OLS5_X, OLS5_Y
from oracles import recursive_residuals_constant

REL = 1e-8


def design(*cols, names=None):
    names = names or tuple(f"c{j}" for j in range(len(cols)))
    return DesignMatrix.from_columns(dict(zip(names, cols)))


def as_series(values):
    return ObservationSeries("s", np.datetime64("2001-01-01") + np.arange(len(values)), values)


class TestOls:
    def test_five_point_fit(self):
        fit = ols_fit(design(np.ones(5), OLS5_X, names=("const", "x")), OLS5_Y)
        e = EXPECTED["ols5"]
        np.testing.assert_allclose(fit.params, e["beta"], rtol=REL, atol=1e-14)
        assert fit.ssr == pytest.approx(e["ssr"], rel=REL)
        np.testing.assert_allclose(fit.bse, e["se"], rtol=REL)
        assert fit.coef("x") == pytest.approx(1.0, rel=REL)

    def test_exact_line_has_zero_residuals(self):
        x = np.arange(1.0, 6.0)
        fit = ols_fit(design(np.ones(5), x), 2.0 + 3.0 * x)
        np.testing.assert_allclose(fit.params, [2.0, 3.0], atol=1e-12)
        assert np.max(np.abs(fit.residuals)) < 1e-12
        assert fit.r2 == pytest.approx(1.0)

    def test_collinear_design(self):
        x = np.arange(1.0, 6.0)
        with pytest.raises(CollinearityError):
            ols_fit(design(np.ones(5), x, 2.0 * x), x**2)

    def test_insufficient_rows(self):
        with pytest.raises(InsufficientDataError):
            ols_fit(design([1.0, 1.0], [1.0, 2.0]), [1.0, 2.0])

    def test_residuals_orthogonal(self):
        rng = np.random.default_rng(3)
        X = np.column_stack([np.ones(50), rng.normal(size=(50, 3))])
        fit = ols_fit(DesignMatrix(("a", "b", "c", "d"), X), rng.normal(size=50))
        assert np.max(np.abs(X.T @ fit.residuals)) < 1e-10


class TestSchwarz:
    def test_textbook_value(self):
        fit = ols_fit(design(np.ones(5), OLS5_X), OLS5_Y)
        assert schwarz_criterion(fit) == pytest.approx(math.log(4.8 / 5) + 2 * math.log(5) / 5, rel=1e-12)

    def test_penalty_per_parameter(self):
        rng = np.random.default_rng(0)
        y = rng.normal(size=100)
        a = ols_fit(design(np.ones(100), rng.normal(size=100)), y)
        assert schwarz_criterion(a) - math.log(a.ssr / 100) == pytest.approx(2 * math.log(100) / 100)

    def test_degenerate_fit(self):
        x = np.arange(1.0, 8.0)
        fit = ols_fit(design(np.ones(7), x), 1.0 + x)
        with pytest.raises(DegenerateFitError):
            schwarz_criterion(fit)


class TestWald:
    def test_single_restriction_is_t_squared(self):
        fit = ols_fit(design(np.ones(5), OLS5_X, names=("const", "x")), OLS5_Y)
        w = wald_linear_restriction(fit, [[0.0, 1.0]], [0.0])
        assert w.statistic == pytest.approx(fit.tvalue("x") ** 2, rel=1e-12)
        assert w.df == 1

    def test_true_restriction_gives_zero(self):
        fit = ols_fit(design(np.ones(5), OLS5_X), OLS5_Y)
        w = wald_linear_restriction(fit, [[0.0, 1.0]], [fit.params[1]])
        assert w.statistic == pytest.approx(0.0, abs=1e-20)
        assert w.pvalue == pytest.approx(1.0)

    def test_dimension_mismatch(self):
        fit = ols_fit(design(np.ones(5), OLS5_X), OLS5_Y)
        with pytest.raises(RestrictionError):
            wald_linear_restriction(fit, [[1.0, 0.0, 0.0]], [0.0])
        with pytest.raises(RestrictionError):
            wald_linear_restriction(fit, [[1.0, 0.0], [2.0, 0.0]], [0.0, 0.0])


class TestAdl:
    def test_adl11_against_exact_normal_equations(self):
        spec = AdlSpec(1, 1)
        fit = adl_fit(as_series(ADL12_Y), as_series(ADL12_X), spec)
        assert fit.names == ("const", "y.L1", "x.L0", "x.L1")
        assert fit.nobs == 11
        np.testing.assert_allclose(fit.params, EXPECTED["adl12"]["beta"], rtol=REL)
        w = lop_coefficient_sum_test(fit, spec)
        assert w.statistic == pytest.approx(EXPECTED["adl12"]["lop_wald"], rel=REL)

    def test_exact_unit_sum_gives_zero(self):
        rng = np.random.default_rng(11)
        x = np.cumsum(rng.normal(size=60))
        y = np.zeros(60)
        for t in range(1, 60):
            y[t] = 0.4 + 0.5 * y[t - 1] + 0.3 * x[t] + 0.2 * x[t - 1]
        spec = AdlSpec(1, 1)
        w = lop_coefficient_sum_test(adl_fit(as_series(y), as_series(x), spec), spec)
        assert w.statistic < 1e-6

    def test_bad_orders(self):
        with pytest.raises(Exception):
            AdlSpec(0, 1)


class TestStability:
    def test_recursive_residuals_match_oracle(self):
        np.testing.assert_allclose(recursive_residuals(CUSUM40),
                                   recursive_residuals_constant(CUSUM40), rtol=1e-10, atol=1e-12)

    def test_recursive_residuals_general_design_matches_constant_form(self):
        y = np.asarray(CUSUM40)
        np.testing.assert_allclose(recursive_residuals(y, np.ones((40, 1))), recursive_residuals(y),
                                   rtol=1e-10, atol=1e-12)

    def test_cusum_detects_level_shift(self):
        r = cusum_test(CUSUM40)
        assert r.first_crossing == EXPECTED["cusum40"]["crossing"]
        assert not r.stable
        assert r.path[-1] == pytest.approx(EXPECTED["cusum40"]["path_last"], rel=REL)
        assert r.t[0] == 2 and r.t[-1] == 40

    def test_cusum_bounds_shape(self):
        r = cusum_test(CUSUM40)
        n = 39
        assert r.upper[0] == pytest.approx(0.948 * (math.sqrt(n) + 2 / math.sqrt(n)))
        np.testing.assert_allclose(r.lower, -r.upper)

    def test_cusumsq_alternating_series(self):
        r = cusum_sq_test(ALT40)
        np.testing.assert_allclose(r.path, EXPECTED["cusumsq_alt40"], rtol=REL)
        assert r.path[-1] == 1.0

    def test_cusumsq_path_monotone(self):
        rng = np.random.default_rng(2)
        r = cusum_sq_test(rng.normal(size=80))
        assert np.all(np.diff(r.path) >= 0)
        assert r.path[-1] == 1.0

    def test_constant_series_degenerate(self):
        from cointkit.errors import DegenerateSeriesError
        with pytest.raises(DegenerateSeriesError):
            cusum_test([3.0] * 20)
        with pytest.raises(DegenerateSeriesError):
            cusum_sq_test([3.0] * 20)

    def test_short_series(self):
        with pytest.raises(InsufficientDataError):
            cusum_test([1.0, 2.0, 3.0])
