"""Exact design-based moments and randomization Monte Carlo.

The exact formulas treat the augmentation as fixed, so they accept the
zero and custom policies only; running-mean moments come from Monte Carlo.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import PotentialOutcomeTable, apply_switching, true_delta_path, true_reward_path
from .estimators import AugmentationPolicy, aipw_paths, augmentation_values, ipw_paths
from .simulation import draw_assignment, unit_rng

__all__ = [
    "MomentReport",
    "RandomizationDraws",
    "replication_rng",
    "default_probes",
    "residuals_at",
    "delta_cov_exact",
    "delta_var_exact",
    "delta_cov_matrix",
    "violation_surface",
    "mc_randomization",
    "moment_report",
]

_REPLICATION = 3


def replication_rng(master_seed: int, replication: int) -> np.random.Generator:
    """Generator for one Monte Carlo replication, independent of scheduling."""
    return unit_rng(master_seed, _REPLICATION, replication)


def default_probes(table: PotentialOutcomeTable, n: int = 10) -> np.ndarray:
    """Evenly spaced probes over the event-time range, ending at the horizon."""
    grid = table.event_grid()
    lo, hi = float(grid[0]), float(grid[-1])
    return lo + (hi - lo) * np.arange(1, n + 1) / n


def _fixed_policy(policy: AugmentationPolicy | None) -> AugmentationPolicy:
    policy = AugmentationPolicy.zero() if policy is None else policy
    if policy.kind == "running_mean":
        raise ValueError("exact moments need assignment-independent augmentation (zero or custom)")
    return policy


def residuals_at(table: PotentialOutcomeTable, policy: AugmentationPolicy | None, times) -> np.ndarray:
    """Residuals ``e_it(w)`` with shape ``(2, n_units, n_times)``."""
    policy = _fixed_policy(policy)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    out = np.empty((2, len(table), times.size))
    for arm in (0, 1):
        level = table.outcomes(arm) - augmentation_values(table, policy, arm)
        happened = table.event_times(arm)[:, None] <= times[None, :]
        out[arm] = level[:, None] * happened
    return out


def delta_cov_matrix(table: PotentialOutcomeTable, policy: AugmentationPolicy | None, times) -> np.ndarray:
    """``Cov(Delta_hat_s, Delta_hat_t)`` for every pair of ``times``."""
    e = residuals_at(table, policy, times)
    e1, e0 = e[1], e[0]
    d = e1 - e0
    w1 = 1.0 / table.propensity(1)
    w0 = 1.0 / table.propensity(0)
    return (e1 * w1[:, None]).T @ e1 + (e0 * w0[:, None]).T @ e0 - d.T @ d


def _pair_cov(table, e_s: np.ndarray, e_t: np.ndarray) -> float:
    terms = (e_s[1] * e_t[1] / table.propensity(1) + e_s[0] * e_t[0] / table.propensity(0)
             - (e_s[1] - e_s[0]) * (e_t[1] - e_t[0]))
    return math.fsum(terms)


def delta_cov_exact(table: PotentialOutcomeTable, policy: AugmentationPolicy | None, s: float, t: float) -> float:
    """Exact ``Cov(Delta_hat_s, Delta_hat_t)`` for ``s <= t``, correctly rounded."""
    if s > t:
        raise ValueError("require s <= t")
    e = residuals_at(table, policy, [s, t])
    return _pair_cov(table, e[:, :, 0], e[:, :, 1])


def delta_var_exact(table: PotentialOutcomeTable, policy: AugmentationPolicy | None, s: float) -> float:
    e = residuals_at(table, policy, [s])[:, :, 0]
    return _pair_cov(table, e, e)


def violation_surface(table: PotentialOutcomeTable, policy: AugmentationPolicy | None, grid) -> np.ndarray:
    """``Cov(s, t) - Var(min(s, t))`` over a sorted time grid.

    Any nonzero off-diagonal entry rules out a martingale under every
    filtration.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size > 1 and np.any(np.diff(grid) < 0):
        raise ValueError("grid times must be sorted")
    cov = delta_cov_matrix(table, policy, grid)
    idx = np.arange(grid.size)
    diag = np.diag(cov)
    return cov - diag[np.minimum.outer(idx, idx)]


def _fsum_mean(x: np.ndarray) -> np.ndarray:
    """Column means with exactly rounded summation."""
    if x.ndim == 1:
        return np.array(math.fsum(x) / x.size)
    return np.array([math.fsum(col) / x.shape[0] for col in x.T])


def _mean_se(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    m = _fsum_mean(x)
    resid = x - m
    var = _fsum_mean(resid**2) * x.shape[0] / (x.shape[0] - 1)
    return m, np.sqrt(var / x.shape[0])


_SERIES = ("r_hat_0", "r_hat_1", "delta_hat", "v_hat_0", "v_hat_1")


@dataclass
class RandomizationDraws:
    """Estimator values at fixed probe times across assignment redraws.

    ``values[name]`` has shape ``(reps, n_probes)``; ``truth`` holds the
    exact estimands for the three reward series. ``jumps`` (optional) has
    shape ``(reps, 2, n_units)``: the error-process jump of each unit at its
    own arm-``w`` event time.
    """

    probes: np.ndarray
    values: dict
    truth: dict
    reps: int
    master_seed: int
    jumps: np.ndarray | None = None

    def error(self, name: str) -> np.ndarray:
        return self.values[name] - self.truth[name]

    def mean_se(self, name: str) -> tuple[np.ndarray, np.ndarray]:
        return _mean_se(self.values[name])

    def cross_moment(self, name: str, i: int, j: int) -> tuple[float, float]:
        """MC mean and SE of ``err(probe_i) * err(probe_j)``; the covariance since the estimator is unbiased."""
        err = self.error(name)
        m, se = _mean_se(err[:, i] * err[:, j])
        return float(m), float(se)

    def martingale_gap(self, name: str, i: int, j: int) -> tuple[float, float]:
        """MC estimate of ``Cov(M_s, M_t) - Var(M_s)`` for probes ``s=i < t=j``."""
        err = self.error(name)
        m, se = _mean_se(err[:, i] * (err[:, j] - err[:, i]))
        return float(m), float(se)

    def jump_mean_se(self) -> tuple[np.ndarray, np.ndarray]:
        if self.jumps is None:
            raise ValueError("draws were made without record_jumps=True")
        m, se = _mean_se(self.jumps.reshape(self.reps, -1))
        shape = self.jumps.shape[1:]
        return m.reshape(shape), se.reshape(shape)


def _one_replication(table, policy, probes, master_seed, r, record_jumps):
    w = draw_assignment(table, replication_rng(master_seed, r))
    if policy.kind == "zero":
        paths = ipw_paths(apply_switching(table, w))
    else:
        paths = aipw_paths(table, w, policy)
    row = {
        "r_hat_0": paths.r_hat[0].eval(probes),
        "r_hat_1": paths.r_hat[1].eval(probes),
        "delta_hat": paths.delta_hat.eval(probes),
        "v_hat_0": paths.v_hat[0].eval(probes),
        "v_hat_1": paths.v_hat[1].eval(probes),
    }
    jumps = None
    if record_jumps:
        jumps = np.empty((2, len(table)))
        for arm in (0, 1):
            f = augmentation_values(table, policy, arm, w)
            z = (w == arm) / table.propensity(arm) - 1.0
            jumps[arm] = z * (table.outcomes(arm) - f)
    return row, jumps


def mc_randomization(table: PotentialOutcomeTable, policy: AugmentationPolicy | None = None,
                     reps: int = 1000, master_seed: int = 0, probes=None,
                     record_jumps: bool = False, n_jobs: int = 1) -> RandomizationDraws:
    """Redraw the assignment ``reps`` times with potential outcomes held fixed.

    Replication ``r`` uses a generator derived from ``(master_seed, r)``
    only, so results do not depend on ``n_jobs``.
    """
    if reps < 2:
        raise ValueError("reps must be >= 2")
    policy = AugmentationPolicy.zero() if policy is None else policy
    probes = default_probes(table) if probes is None else np.atleast_1d(np.asarray(probes, dtype=float))
    if probes.size == 0:
        raise ValueError("probes must be non-empty")

    def run(r):
        return _one_replication(table, policy, probes, master_seed, r, record_jumps)

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(run, range(reps)))
    else:
        results = [run(r) for r in range(reps)]

    values = {k: np.vstack([row[k] for row, _ in results]) for k in _SERIES}
    truth = {
        "r_hat_0": true_reward_path(table, 0).eval(probes),
        "r_hat_1": true_reward_path(table, 1).eval(probes),
        "delta_hat": true_delta_path(table).eval(probes),
    }
    jumps = np.stack([j for _, j in results]) if record_jumps else None
    return RandomizationDraws(probes, values, truth, reps, master_seed, jumps)


@dataclass(frozen=True)
class MomentReport:
    s: float
    t: float
    exact_cov: float
    exact_var: float
    violation: float
    reps: int = 0
    mc_cov: float | None = None
    mc_cov_se: float | None = None
    mc_var: float | None = None
    mc_var_se: float | None = None


def moment_report(table: PotentialOutcomeTable, policy: AugmentationPolicy | None, s: float, t: float,
                  reps: int = 0, master_seed: int = 0, n_jobs: int = 1) -> MomentReport:
    """Exact covariance/variance of the difference estimator, optionally with MC checks."""
    lo, hi = min(s, t), max(s, t)
    cov = delta_cov_exact(table, policy, lo, hi)
    var = delta_var_exact(table, policy, lo)
    if reps == 0:
        return MomentReport(s, t, cov, var, cov - var)
    draws = mc_randomization(table, policy, reps, master_seed, [lo, hi], n_jobs=n_jobs)
    mc_cov, mc_cov_se = draws.cross_moment("delta_hat", 0, 1)
    mc_var, mc_var_se = draws.cross_moment("delta_hat", 0, 0)
    return MomentReport(s, t, cov, var, cov - var, reps, mc_cov, mc_cov_se, mc_var, mc_var_se)
