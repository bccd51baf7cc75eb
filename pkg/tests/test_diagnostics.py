from itertools import product

import numpy as np
import pytest

from avdelay import PotentialOutcomeTable
from avdelay.core import apply_switching, true_delta_path
from avdelay.diagnostics import (
    default_probes,
    delta_cov_exact,
    delta_cov_matrix,
    delta_var_exact,
    mc_randomization,
    moment_report,
    residuals_at,
    violation_surface,
)
from avdelay.estimators import AugmentationPolicy, aipw_paths, ipw_paths
from avdelay.simulation import unit_rng


def custom_policy(table, seed=0):
    rng = unit_rng(seed, 99)
    n = len(table)
    return AugmentationPolicy.custom(np.column_stack([rng.uniform(0.5, 2.0, n), rng.uniform(0.2, 1.0, n)]))


def brute_force_cov(table, policy, s, t):
    """Enumerate every assignment of a tiny table."""
    pi = table.pi_1
    d = true_delta_path(table)
    truth = d(s), d(t)
    acc = 0.0
    for w in product((0, 1), repeat=len(table)):
        w = np.array(w)
        prob = np.prod(np.where(w == 1, pi, 1 - pi))
        paths = ipw_paths(apply_switching(table, w)) if policy is None else aipw_paths(table, w, policy)
        acc += prob * (paths.delta_hat(s) - truth[0]) * (paths.delta_hat(t) - truth[1])
    return acc


class TestExactMoments:
    def test_single_unit(self, table1):
        one = PotentialOutcomeTable.from_units([table1.units[0]])
        assert delta_var_exact(one, None, 10.0) == pytest.approx(0.2209)
        assert delta_var_exact(one, None, 0.5) == 0.0
        assert delta_cov_exact(one, None, 0.5, 10.0) == 0.0

    @pytest.mark.parametrize("s,t", [(1.0, 3.0), (0.5, 5.0), (2.5, 2.9), (3.0, 3.0)])
    def test_against_enumeration(self, table1, s, t):
        assert delta_cov_exact(table1, None, s, t) == pytest.approx(brute_force_cov(table1, None, s, t), abs=1e-12)

    def test_custom_against_enumeration(self, table1):
        policy = custom_policy(table1)
        assert delta_cov_exact(table1, policy, 1.0, 4.0) == pytest.approx(
            brute_force_cov(table1, policy, 1.0, 4.0), abs=1e-12)

    def test_diagonal_identity(self, small_table):
        grid = default_probes(small_table, 8)
        cov = delta_cov_matrix(small_table, None, grid)
        for k, s in enumerate(grid):
            assert delta_cov_exact(small_table, None, s, s) == delta_var_exact(small_table, None, s)
            assert cov[k, k] == pytest.approx(delta_var_exact(small_table, None, s), rel=1e-12)
        np.testing.assert_allclose(cov, cov.T, rtol=1e-12)

    def test_requires_ordered_pair(self, small_table):
        with pytest.raises(ValueError):
            delta_cov_exact(small_table, None, 5.0, 1.0)

    def test_rejects_running_mean(self, small_table):
        with pytest.raises(ValueError):
            residuals_at(small_table, AugmentationPolicy.running_mean(), [1.0])


class TestViolation:
    def test_zero_diagonal(self, small_table):
        grid = default_probes(small_table)
        surf = violation_surface(small_table, custom_policy(small_table), grid)
        np.testing.assert_array_equal(np.diag(surf), 0.0)

    def test_custom_augmentation_violates(self, small_table):
        grid = default_probes(small_table, 20)
        surf = violation_surface(small_table, custom_policy(small_table), grid)
        off = surf[~np.eye(grid.size, dtype=bool)]
        assert np.max(np.abs(off)) > 1e-6

    def test_unsorted_grid(self, small_table):
        with pytest.raises(ValueError):
            violation_surface(small_table, None, [3.0, 1.0])


class TestMonteCarlo:
    @pytest.fixture(scope="class")
    @classmethod
    def draws(cls, small_table):
        return mc_randomization(small_table, custom_policy(small_table), reps=3000, master_seed=1,
                                record_jumps=True)

    def test_cov_matches_exact(self, small_table, draws):
        probes = draws.probes
        policy = custom_policy(small_table)
        for i, j in [(1, 4), (3, 8), (6, 6)]:
            m, se = draws.cross_moment("delta_hat", i, j)
            exact = delta_cov_exact(small_table, policy, probes[i], probes[j])
            assert abs(m - exact) <= 4 * se

    @pytest.mark.parametrize("name", ["r_hat_0", "r_hat_1"])
    def test_single_arm_gap(self, draws, name):
        for i, j in [(2, 5), (4, 9)]:
            m, se = draws.martingale_gap(name, i, j)
            assert abs(m) <= 4 * se

    def test_jump_means(self, draws):
        m, se = draws.jump_mean_se()
        assert np.all(np.abs(m) <= 4 * se + 1e-12)

    def test_jobs_invariant(self, small_table):
        a = mc_randomization(small_table, None, reps=40, master_seed=3, n_jobs=1)
        b = mc_randomization(small_table, None, reps=40, master_seed=3, n_jobs=4)
        for k in a.values:
            np.testing.assert_array_equal(a.values[k], b.values[k])
        assert a.mean_se("delta_hat")[0].tolist() == b.mean_se("delta_hat")[0].tolist()

    def test_needs_two_reps(self, small_table):
        with pytest.raises(ValueError):
            mc_randomization(small_table, reps=1)

    def test_jumps_require_recording(self, small_table):
        with pytest.raises(ValueError):
            mc_randomization(small_table, reps=2).jump_mean_se()

    def test_moment_report(self, small_table):
        probes = default_probes(small_table)
        rep = moment_report(small_table, None, probes[5], probes[2], reps=500, master_seed=2)
        assert rep.s == probes[5] and rep.violation == pytest.approx(rep.exact_cov - rep.exact_var)
        assert abs(rep.mc_var - rep.exact_var) <= 4 * rep.mc_var_se
        assert moment_report(small_table, None, probes[2], probes[5]).mc_cov is None
