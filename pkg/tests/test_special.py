import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from betagraph.special import (
    chi_square_cdf,
    chi_square_pdf,
    chi_square_sf,
    gammainc_lower,
    gammainc_upper,
)


def _gauss_legendre_cdf(x, df, points=64):
    """Integrate the density on [0, x] with the substitution t = u^2 (smooth for df >= 1)."""
    nodes, weights = np.polynomial.legendre.leggauss(points)
    root = math.sqrt(x)
    u = 0.5 * root * (nodes + 1.0)
    k = df / 2.0
    # f(u^2) * 2u, written so that the u^(df-1) factor has no singularity
    integrand = 2.0 * u ** (df - 1) * np.exp(-u * u / 2.0) / (2.0 ** k * math.gamma(k))
    return float(0.5 * root * np.sum(weights * integrand))


class TestChiSquare:
    @pytest.mark.parametrize("df", [1, 2, 5, 9, 30])
    def test_zero(self, df):
        assert chi_square_sf(0.0, df) == 1.0

    def test_df2_closed_form(self):
        x = 2 * math.log(20)
        assert chi_square_sf(x, 2) == pytest.approx(0.05, rel=1e-13)
        for x in [0.1, 1.0, 7.5, 40.0]:
            assert chi_square_sf(x, 2) == pytest.approx(math.exp(-x / 2), rel=1e-12)

    def test_df1_erfc(self):
        for x in [0.01, 0.5, 3.0, 20.0]:
            assert chi_square_sf(x, 1) == pytest.approx(math.erfc(math.sqrt(x / 2)), rel=1e-12)

    @pytest.mark.parametrize("df", [1, 2, 3, 9, 19])
    @pytest.mark.parametrize("x", [0.3, 2.0, 8.0, 15.0])
    def test_quadrature_oracle(self, df, x):
        assert chi_square_cdf(x, df) == pytest.approx(_gauss_legendre_cdf(x, df), abs=1e-12)

    @settings(max_examples=200, deadline=None)
    @given(st.floats(0.0, 300.0), st.integers(1, 60))
    def test_scipy_cross_check(self, x, df):
        assert chi_square_sf(x, df) == pytest.approx(stats.chi2.sf(x, df), rel=1e-9, abs=1e-300)
        assert chi_square_cdf(x, df) == pytest.approx(stats.chi2.cdf(x, df), rel=1e-9, abs=1e-15)

    def test_far_tail(self):
        assert 0 < chi_square_sf(400.0, 9) < 1e-70
        assert chi_square_sf(400.0, 9) == pytest.approx(stats.chi2.sf(400.0, 9), rel=1e-8)

    def test_pdf(self):
        for x in [0.5, 4.0, 12.0]:
            assert chi_square_pdf(x, 9) == pytest.approx(stats.chi2.pdf(x, 9), rel=1e-12)
        assert chi_square_pdf(0.0, 2) == 0.5
        assert chi_square_pdf(-1.0, 3) == 0.0

    def test_complement(self):
        for x in [0.5, 3.0, 11.0, 50.0]:
            assert gammainc_lower(2.5, x) + gammainc_upper(2.5, x) == pytest.approx(1.0, abs=1e-14)

    @pytest.mark.parametrize("args", [(-1.0, 2), (1.0, 0)])
    def test_domain(self, args):
        with pytest.raises(ValueError):
            chi_square_sf(*args)
