import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from avdelay import (
    BoundaryConfig,
    StepPath,
    chi_square_1_quantile,
    classical_pointwise,
    difference_cs,
    mixture_boundary,
    normal_quantile,
    relative_width,
    sequential_p_value,
    single_arm_cs,
)

ETA = 1 / 16

# frozen from a 50-digit mpmath evaluation of the closed form
B_0_005 = 9.790987322723266
B_16_005 = 14.625579485455394
B_16_010 = 13.020989045749834


class TestMixtureBoundary:
    def test_zero_clock(self):
        assert mixture_boundary(0.0, 0.05, ETA) == pytest.approx(B_0_005, rel=1e-14)
        assert mixture_boundary(0.0, 0.05, ETA) == pytest.approx(math.sqrt(16 * math.log(400)), rel=1e-14)

    def test_sixteen(self):
        assert mixture_boundary(16.0, 0.05, ETA) == pytest.approx(B_16_005, rel=1e-14)

    def test_larger_alpha_is_narrower(self):
        assert mixture_boundary(16.0, 0.1, ETA) == pytest.approx(B_16_010, rel=1e-14)
        assert B_16_010 < B_16_005

    def test_vectorised(self):
        np.testing.assert_allclose(mixture_boundary(np.array([0.0, 16.0]), 0.05, ETA), [B_0_005, B_16_005], rtol=1e-14)

    def test_tiny_alpha_no_overflow(self):
        assert np.isfinite(mixture_boundary(1e12, 1e-300, ETA))

    @pytest.mark.parametrize("v,alpha,eta", [(-1, 0.05, ETA), (1, 0, ETA), (1, 1, ETA), (1, 0.05, 0)])
    def test_domain(self, v, alpha, eta):
        with pytest.raises(ValueError):
            mixture_boundary(v, alpha, eta)


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 1e9), st.floats(0.001, 1e3), st.floats(1e-6, 0.99), st.floats(1e-4, 10))
def test_boundary_monotone(v, dv, alpha, eta_sq):
    assert mixture_boundary(v + dv, alpha, eta_sq) > mixture_boundary(v, alpha, eta_sq)
    assert mixture_boundary(v, alpha * 0.9, eta_sq) > mixture_boundary(v, alpha, eta_sq)


def _clock():
    return StepPath([1.0, 2.0, 4.0], [3.0, 10.0, 50.0])


class TestBands:
    def test_constant_band(self):
        band = single_arm_cs(StepPath(), StepPath(), BoundaryConfig(ETA, 0.05))
        assert band.upper(5.0) == pytest.approx(B_0_005)
        assert band.lower(5.0) == pytest.approx(-B_0_005)
        assert band.kind == "single_arm" and band.level == 0.95

    def test_nesting_in_alpha(self):
        center = StepPath([0.5, 2.5], [1.0, -2.0])
        wide = single_arm_cs(center, _clock(), BoundaryConfig(ETA, 0.01))
        narrow = single_arm_cs(center, _clock(), BoundaryConfig(ETA, 0.10))
        grid = np.union1d(wide.upper.times, narrow.upper.times)
        assert np.all(wide.lower.eval(grid) <= narrow.lower.eval(grid))
        assert np.all(wide.upper.eval(grid) >= narrow.upper.eval(grid))

    def test_band_grid_is_union(self):
        center = StepPath([0.5, 2.5], [1.0, -2.0])
        band = single_arm_cs(center, _clock())
        np.testing.assert_array_equal(band.upper.times, [0.5, 1.0, 2.0, 2.5, 4.0])

    def test_symmetric_difference(self):
        v = _clock()
        band = difference_cs(StepPath(), v, v, BoundaryConfig(ETA, 0.05))
        for t in (0.0, 1.5, 3.0, 9.0):
            assert band.upper(t) == pytest.approx(2 * mixture_boundary(v(t), 0.025, ETA))

    def test_difference_with_zero_control_clock(self):
        band = difference_cs(StepPath(), StepPath(), _clock(), BoundaryConfig(ETA, 0.05))
        assert band.upper(3.0) == pytest.approx(mixture_boundary(0, 0.025, ETA) + mixture_boundary(10, 0.025, ETA))
        assert band.kind == "difference_union"

    def test_rejects_decreasing_clock(self):
        with pytest.raises(ValueError):
            single_arm_cs(StepPath(), StepPath([1.0, 2.0], [3.0, 1.0]))


class TestPValue:
    def test_zero_statistic(self):
        assert sequential_p_value(0.0, 5.0, 7.0, ETA) == 1.0

    def test_below_alpha_one_boundary(self):
        limit = mixture_boundary(3.0, 0.5, ETA) + mixture_boundary(4.0, 0.5, ETA)
        assert sequential_p_value(0.99 * limit, 3.0, 4.0, ETA) == 1.0

    def test_plug_back(self):
        delta = 40.0
        p = sequential_p_value(delta, 16.0, 16.0, ETA)
        assert 0 < p < 1
        rhs = 2 * mixture_boundary(16.0, p / 2, ETA)
        assert abs(rhs - delta) / delta < 1e-6

    def test_sign_irrelevant(self):
        assert sequential_p_value(-30.0, 2.0, 9.0) == sequential_p_value(30.0, 2.0, 9.0)

    def test_extreme_statistic_floors(self):
        assert sequential_p_value(1e6, 0.0, 0.0, ETA) == 1e-12

    @settings(max_examples=60, deadline=None)
    @given(st.floats(0, 100), st.floats(0, 100), st.floats(0, 1e4), st.floats(0, 50))
    def test_monotone_in_statistic(self, v0, v1, v, extra):
        d = mixture_boundary(v, 0.5, ETA)
        assert sequential_p_value(d + extra, v0, v1) <= sequential_p_value(d, v0, v1)


class TestClassical:
    def test_unit_clock(self):
        band = classical_pointwise(StepPath(), StepPath([0.0], [1.0]), 0.05)
        assert band.upper(1.0) == pytest.approx(1.959963984540054, abs=1e-9)
        assert band.kind == "classical_pointwise"

    def test_zero_clock(self):
        band = classical_pointwise(StepPath([1.0], [2.0]), StepPath(), 0.05)
        assert band.upper(3.0) == band.lower(3.0) == 2.0


class TestQuantiles:
    def test_median(self):
        assert normal_quantile(0.5) == 0.0

    def test_975(self):
        assert normal_quantile(0.975) == pytest.approx(1.959963984540054, abs=1e-12)

    def test_chi_square(self):
        assert chi_square_1_quantile(0.95) == pytest.approx(3.841458820694126, abs=1e-10)

    @pytest.mark.parametrize("p", [1e-12, 1e-6, 0.001, 0.02425, 0.1, 0.3, 0.7, 0.9, 0.999, 1 - 1e-9])
    def test_against_scipy(self, p):
        assert normal_quantile(p) == pytest.approx(stats.norm.ppf(p), abs=1e-8)

    @pytest.mark.parametrize("p", [0, 1, -0.1, 2])
    def test_domain(self, p):
        with pytest.raises(ValueError):
            normal_quantile(p)


class TestRelativeWidth:
    def test_symmetric_limit(self):
        assert relative_width(1e8, 1e8, 0.5, 0.05, ETA) == pytest.approx(2 * math.sqrt(0.25), abs=0.02)

    def test_asymmetric_limit(self):
        assert relative_width(1e2, 1e10, 0.5, 0.05, ETA) == pytest.approx(math.sqrt(0.5), abs=0.02)

    def test_zero_clocks(self):
        r = relative_width(0.0, 0.0, 0.5, 0.05, ETA)
        assert r == pytest.approx(2 * mixture_boundary(0, 0.025, ETA) / B_0_005)
        assert r > 1

    def test_crossover_both_ways(self):
        v0, v1 = np.meshgrid(np.logspace(0, 6, 25), np.logspace(0, 6, 25))
        union = mixture_boundary(v0, 0.025, ETA) + mixture_boundary(v1, 0.025, ETA)
        sigma_bound = mixture_boundary(2 * (v0 + v1), 0.05, ETA)
        assert np.any(union < sigma_bound) and np.any(union > sigma_bound)

    def test_bad_pi(self):
        with pytest.raises(ValueError):
            relative_width(1, 1, 1.0, 0.05)
