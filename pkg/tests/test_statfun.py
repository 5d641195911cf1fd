import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import chi2_1_quantile_bisect, normal_cdf_quad
from splitma.statfun import chi2_1_cdf, chi2_1_quantile, std_normal_cdf


class TestStdNormalCdf:
    def test_center(self):
        assert std_normal_cdf(0.0) == 0.5

    def test_saturation(self):
        assert abs(std_normal_cdf(40.0) - 1.0) <= 1e-15
        assert std_normal_cdf(-40.0) >= 0.0

    def test_against_quadrature(self):
        assert std_normal_cdf(1.0) == pytest.approx(0.841344746068543, abs=1e-14)
        for x in (-3.5, -1.2, 0.3, 2.7):
            assert std_normal_cdf(x) == pytest.approx(normal_cdf_quad(x), abs=1e-13)

    def test_symmetry_and_monotone(self):
        grid = np.linspace(-8, 8, 401)
        vals = np.array([std_normal_cdf(x) for x in grid])
        assert np.all(np.diff(vals) >= 0)
        for x in grid:
            assert abs(std_normal_cdf(x) + std_normal_cdf(-x) - 1) <= 1e-14


class TestChi2Cdf:
    def test_reference_threshold(self):
        assert round(chi2_1_cdf(1.0), 4) == 0.6827

    def test_zero(self):
        assert chi2_1_cdf(0.0) == 0.0

    def test_median(self):
        assert chi2_1_cdf(0.4549) == pytest.approx(0.5, abs=1e-3)

    def test_against_normal_identity(self):
        for x in (0.01, 0.5, 2.0, 9.0):
            assert chi2_1_cdf(x) == pytest.approx(2 * normal_cdf_quad(math.sqrt(x)) - 1, abs=1e-13)

    def test_strictly_increasing(self):
        grid = np.linspace(0.0, 20.0, 300)
        vals = [chi2_1_cdf(x) for x in grid]
        assert all(b > a for a, b in zip(vals, vals[1:]))

    def test_domain(self):
        with pytest.raises(ValueError):
            chi2_1_cdf(-1e-9)


class TestChi2Quantile:
    def test_reference_probability(self):
        assert chi2_1_quantile(0.6827) == pytest.approx(1.0, abs=1e-3)

    def test_small_probability(self):
        assert 0 < chi2_1_quantile(1e-12) < 1e-10

    def test_median_against_root_finder(self):
        assert chi2_1_quantile(0.5) == pytest.approx(chi2_1_quantile_bisect(0.5), abs=1e-12)
        assert chi2_1_quantile(0.5) == pytest.approx(0.454936423119572, abs=1e-12)

    def test_round_trip_grid(self):
        for p in np.linspace(0.01, 0.99, 99):
            assert abs(chi2_1_cdf(chi2_1_quantile(p)) - p) <= 1e-10

    def test_strictly_increasing(self):
        vals = [chi2_1_quantile(p) for p in np.linspace(0.001, 0.999, 500)]
        assert all(b > a for a, b in zip(vals, vals[1:]))

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5])
    def test_domain(self, p):
        with pytest.raises(ValueError):
            chi2_1_quantile(p)

    @settings(max_examples=200, deadline=None)
    @given(st.floats(min_value=1e-9, max_value=1 - 1e-9))
    def test_round_trip_property(self, p):
        assert abs(chi2_1_cdf(chi2_1_quantile(p)) - p) <= 1e-10
