import math

import numpy as np
import pytest
from scipy import integrate, stats

from avdelay import SimConfig, generate_dataset
from avdelay.simulation import (
    MajorantViolation,
    Shock,
    cycle_factor,
    draw_assignment,
    lognormal_hazard,
    outcome_value,
    sample_event_time,
    shock_factor,
    total_hazard,
    unit_rng,
)

CFG = SimConfig()


class TestHazard:
    def test_at_median(self):
        # z = 0: phi(0) / Phi(0) = 2 phi(0)
        mu, sigma = 2.5, 0.5
        s = math.exp(mu)
        assert lognormal_hazard(s, mu, sigma) == pytest.approx(2 * stats.norm.pdf(0) / (s * sigma), rel=1e-14)

    @pytest.mark.parametrize("mu,sigma", [(2.5, 0.5), (0.3, 0.3)])
    @pytest.mark.parametrize("t", [1.0, 5.0, 20.0])
    def test_integrates_to_survival(self, mu, sigma, t):
        cum, _ = integrate.quad(lognormal_hazard, 1e-12, t, args=(mu, sigma), limit=200)
        surv = stats.lognorm.sf(t, s=sigma, scale=math.exp(mu))
        assert math.exp(-cum) == pytest.approx(surv, abs=1e-4)

    def test_far_tail_finite(self):
        h = lognormal_hazard(np.array([1e-9, 1e3, 1e8]), 0.3, 0.3)
        assert np.all(np.isfinite(h)) and np.all(h >= 0)
        # for large z the hazard grows like z / (s sigma)
        z = (math.log(1e8) - 0.3) / 0.3
        assert h[-1] == pytest.approx(z / (1e8 * 0.3), rel=0.01)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            lognormal_hazard(0.0, 0.0, 1.0)

    def test_cycle_bounds(self):
        c = cycle_factor(np.linspace(0, 70, 10_001), CFG)
        assert c.min() >= 0.8 - 1e-12 and c.max() <= 1.2 + 1e-12
        assert cycle_factor(0.0, CFG) == pytest.approx(1.0)

    def test_shock_peak(self):
        # the second shock is ~14 widths away and contributes nothing at t = 8
        assert shock_factor(8.0, 1, CFG) == pytest.approx(3.0, abs=1e-12)
        assert shock_factor(8.0, 0, CFG) == pytest.approx(2.5, abs=1e-12)
        assert shock_factor(100.0, 0, CFG) == pytest.approx(1.0)

    def test_total_needs_positive_age(self):
        with pytest.raises(ValueError):
            total_hazard(1.0, 1.0, 0, CFG)
        lam = total_hazard(3.0, 1.0, 0, CFG)
        assert lam == pytest.approx(lognormal_hazard(2.0, 2.5, 0.5) * cycle_factor(3.0, CFG) * shock_factor(3.0, 0, CFG))


class TestOutcome:
    def test_reference_values(self):
        assert outcome_value(0, 0.0, 0.0, 1.0) == pytest.approx(1.0)
        assert outcome_value(1, 0.0, 0.0, 1.0) == pytest.approx(0.6)

    def test_scaling(self):
        y = outcome_value(0, math.e - 1, 7 / 4, 1.1)
        assert y == pytest.approx(1.15 * 1.1 * 1.1)

    def test_negative_age(self):
        with pytest.raises(ValueError):
            outcome_value(0, -1.0, 0.0, 1.0)


class TestConfig:
    @pytest.mark.parametrize("kw", [
        {"n_units": 0}, {"pi": 1.0}, {"sigma": (0.0, 0.3)}, {"cycle_amplitude": 1.0},
        {"entry_low": 5.0, "entry_high": 5.0}, {"noise_low": 0.0},
        {"shocks": (Shock(1.0, 0.0, 1.0, 1.0),)},
    ])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            SimConfig(**kw)

    def test_tuple_shocks_coerced(self):
        assert SimConfig(shocks=((1.0, 0.5, 0.1, 0.2),)).shocks[0] == Shock(1.0, 0.5, 0.1, 0.2)

    def test_without_modulation(self):
        cfg = CFG.without_modulation()
        assert cfg.cycle_amplitude == 0 and cfg.shocks == () and cfg.mu == CFG.mu


class TestThinning:
    def test_event_after_entry(self):
        rng = unit_rng(0, 9)
        for arm in (0, 1):
            assert sample_event_time(3.0, arm, CFG, rng) > 3.0

    def test_tight_envelope_is_detected(self, monkeypatch):
        import avdelay.simulation as sim

        monkeypatch.setattr(sim, "SAFETY", 0.2)
        sim._window_sup.cache_clear()
        with pytest.raises(MajorantViolation):
            for k in range(200):
                sample_event_time(0.0, 1, CFG, unit_rng(1, k))
        sim._window_sup.cache_clear()

    @pytest.mark.parametrize("arm,mu,sigma", [(0, 2.5, 0.5), (1, 0.3, 0.3)])
    def test_holding_time_distribution(self, arm, mu, sigma):
        cfg = CFG.without_modulation()
        rng = unit_rng(123, arm)
        s = np.array([sample_event_time(0.0, arm, cfg, rng) for _ in range(4000)])
        assert stats.kstest(s, "lognorm", args=(sigma, 0, math.exp(mu))).pvalue > 0.01


class TestDataset:
    def test_deterministic(self):
        a = generate_dataset(SimConfig(n_units=30, seed=4))
        b = generate_dataset(SimConfig(n_units=30, seed=4))
        c = generate_dataset(SimConfig(n_units=30, seed=5))
        assert a.equals(b) and not a.equals(c)

    def test_arm_streams_independent(self):
        # changing the control hazard leaves every treated draw unchanged
        a = generate_dataset(SimConfig(n_units=20, seed=2))
        b = generate_dataset(SimConfig(n_units=20, seed=2, mu=(2.0, 0.3)))
        np.testing.assert_array_equal(a.t1, b.t1)
        assert not np.array_equal(a.t0, b.t0)

    def test_shape_and_ranges(self, small_table):
        assert len(small_table) == 40
        assert np.all((small_table.entry_time >= 0) & (small_table.entry_time <= 10))
        assert np.all(np.diff(small_table.entry_time) >= 0)
        assert np.all(small_table.pi_1 == 0.5)

    def test_outcomes_bounded(self):
        table = generate_dataset(SimConfig(n_units=200, seed=3))
        s_max = max((table.t0 - table.entry_time).max(), (table.t1 - table.entry_time).max())
        bound = 1.0 * (1 + 0.15 * math.log1p(s_max)) * 1.1 * 1.1
        assert table.bound == pytest.approx(bound)
        assert np.all(np.abs(table.y0) <= bound) and np.all(np.abs(table.y1) <= bound)

    def test_pull_forward_structure(self):
        table = generate_dataset(SimConfig(n_units=300, seed=0))
        assert np.mean(table.y1) < np.mean(table.y0)
        assert np.median(table.t1 - table.entry_time) < np.median(table.t0 - table.entry_time)

    def test_counting(self):
        table = generate_dataset(SimConfig(n_units=25, seed=1, counting=True))
        assert np.all(table.y0 == 1) and np.all(table.y1 == 1) and table.bound == 1.0

    def test_assignment_draw(self, small_table):
        w = draw_assignment(small_table, unit_rng(0, 2))
        assert w.dtype == np.int8 and set(np.unique(w)) <= {0, 1}
        np.testing.assert_array_equal(w, draw_assignment(small_table, unit_rng(0, 2)))
