"""Experiment orchestration: coverage studies, analysis series, boundary tables."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .confidence import (
    DEFAULT_ETA_SQ,
    BoundaryConfig,
    chi_square_1_quantile,
    classical_pointwise,
    difference_cs,
    mixture_boundary,
    relative_width,
    sequential_p_value_path,
    single_arm_cs,
)
from .core import PotentialOutcomeTable, StepPath, apply_switching, true_delta_path, true_reward_path
from .diagnostics import replication_rng
from .estimators import (
    AugmentationPolicy,
    EstimatePaths,
    aipw_paths,
    ipw_paths,
    oracle_sigma_sq_path,
    oracle_variance_path,
)
from .simulation import draw_assignment

__all__ = [
    "ESTIMANDS",
    "CoverageReport",
    "coverage_study",
    "binomial_band",
    "analysis_series",
    "boundary_table",
]

ESTIMANDS = ("r0", "r1", "delta")
ESTIMATORS = ("ipw", "aipw")
VARIANCE_MODES = ("oracle", "estimated")


def binomial_band(p: float, n: int, k: float = 3.0) -> tuple[float, float]:
    """``p +/- k`` binomial standard errors, clipped to [0, 1].

    At ``p = 1`` the standard error is taken at ``1 - 1/(2n)`` so that a
    single miss in ``n`` is not automatically out of band.
    """
    p_eff = min(max(p, 0.5 / n), 1 - 0.5 / n)
    se = np.sqrt(p_eff * (1 - p_eff) / n)
    return max(0.0, p - k * se), min(1.0, p + k * se)


@dataclass
class CoverageReport:
    """Time-uniform coverage per (estimator, variance mode, estimand).

    ``covered``/``classical_missed`` map a key to per-replication booleans;
    ``final_half_width`` to the confidence-sequence half-width at the horizon.
    """

    reps: int
    seed: int
    alpha: float
    eta_sq: float
    covered: dict = field(default_factory=dict)
    classical_missed: dict = field(default_factory=dict)
    final_half_width: dict = field(default_factory=dict)

    @staticmethod
    def nominal(estimand: str, alpha: float) -> float:
        return 1 - alpha / 2 if estimand != "delta" else 1 - alpha

    def coverage(self, estimator: str, variance: str, estimand: str, first: int | None = None) -> float:
        return float(np.mean(self.covered[estimator, variance, estimand][:first]))

    def classical_miss_fraction(self, estimator: str, variance: str, estimand: str,
                                first: int | None = None) -> float:
        return float(np.mean(self.classical_missed[estimator, variance, estimand][:first]))

    def mean_final_half_width(self, estimator: str, variance: str, estimand: str) -> float:
        return float(np.mean(self.final_half_width[estimator, variance, estimand]))

    def width_reduction(self, estimand: str, variance: str = "estimated",
                        baseline: str = "ipw", improved: str = "aipw") -> float:
        """Fractional shrinkage of the mean final half-width."""
        base = self.mean_final_half_width(baseline, variance, estimand)
        return 1.0 - self.mean_final_half_width(improved, variance, estimand) / base

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for (est, var, estimand), cov in self.covered.items():
            rows.append({
                "estimator": est,
                "variance": var,
                "estimand": estimand,
                "reps": self.reps,
                "coverage": float(np.mean(cov)),
                "nominal": self.nominal(estimand, self.alpha),
                "mean_final_half_width": self.mean_final_half_width(est, var, estimand),
                "classical_miss_fraction": self.classical_miss_fraction(est, var, estimand),
            })
        return pd.DataFrame(rows)


def _replicate(table, grid, truth, ipw_oracle, alpha, eta_sq, chi_arm, chi_diff,
               estimators, variance_modes, w):
    out = {}
    for est in estimators:
        if est == "ipw":
            paths = ipw_paths(apply_switching(table, w))
            oracle_v = ipw_oracle
        else:
            policy = AugmentationPolicy.running_mean()
            paths = aipw_paths(table, w, policy)
            oracle_v = (oracle_variance_path(table, policy, 0, w),
                        oracle_variance_path(table, policy, 1, w),
                        oracle_sigma_sq_path(table, policy, w))
        centers = (paths.r_hat[0].eval(grid), paths.r_hat[1].eval(grid), paths.delta_hat.eval(grid))
        for var in variance_modes:
            if var == "estimated":
                clocks = (paths.v_hat[0].eval(grid), paths.v_hat[1].eval(grid), paths.sigma_hat_sq.eval(grid))
            else:
                clocks = tuple(p.eval(grid) for p in oracle_v)
            b0 = mixture_boundary(clocks[0], alpha / 2, eta_sq)
            b1 = mixture_boundary(clocks[1], alpha / 2, eta_sq)
            half = (b0, b1, b0 + b1)
            classical = (np.sqrt(chi_arm * clocks[0]), np.sqrt(chi_arm * clocks[1]),
                         np.sqrt(chi_diff * clocks[2]))
            for k, estimand in enumerate(ESTIMANDS):
                err = np.abs(centers[k] - truth[k])
                out[est, var, estimand] = (
                    bool(np.all(err <= half[k])),
                    bool(np.any(err > classical[k])),
                    float(half[k][-1]),
                )
    return out


def coverage_study(table: PotentialOutcomeTable, reps: int = 200, seed: int = 0,
                   estimators=ESTIMATORS, variance_modes=VARIANCE_MODES,
                   alpha: float = 0.05, eta_sq: float = DEFAULT_ETA_SQ, n_jobs: int = 1) -> CoverageReport:
    """Resample assignments with potential outcomes fixed; record all-time coverage.

    Arms use ``alpha/2`` each and the difference the union of the two, so
    all three statements hold jointly at level ``1 - alpha``. Containment
    is checked at every potential event time, which is exact because all
    processes are step functions that can only change there.
    """
    if reps < 2:
        raise ValueError("reps must be >= 2")
    for est in estimators:
        if est not in ESTIMATORS:
            raise ValueError(f"unknown estimator {est!r}")
    for var in variance_modes:
        if var not in VARIANCE_MODES:
            raise ValueError(f"unknown variance mode {var!r}")
    BoundaryConfig(eta_sq, alpha)
    grid = np.concatenate(([0.0], table.event_grid()))
    truth = (true_reward_path(table, 0).eval(grid), true_reward_path(table, 1).eval(grid),
             true_delta_path(table).eval(grid))
    ipw_oracle = (oracle_variance_path(table, None, 0), oracle_variance_path(table, None, 1),
                  oracle_sigma_sq_path(table))
    chi_arm = chi_square_1_quantile(1 - alpha / 2)
    chi_diff = chi_square_1_quantile(1 - alpha)

    def run(r):
        w = draw_assignment(table, replication_rng(seed, r))
        return _replicate(table, grid, truth, ipw_oracle, alpha, eta_sq, chi_arm, chi_diff,
                          tuple(estimators), tuple(variance_modes), w)

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(run, range(reps)))
    else:
        results = [run(r) for r in range(reps)]

    report = CoverageReport(reps=reps, seed=seed, alpha=alpha, eta_sq=eta_sq)
    for key in results[0]:
        report.covered[key] = np.array([res[key][0] for res in results])
        report.classical_missed[key] = np.array([res[key][1] for res in results])
        report.final_half_width[key] = np.array([res[key][2] for res in results])
    return report


def analysis_series(paths: EstimatePaths, alpha: float = 0.05, eta_sq: float = DEFAULT_ETA_SQ) -> pd.DataFrame:
    """Long-format ``(time, series, value)`` frame of estimates, bands and p-values.

    Arm sequences use ``alpha/2`` so that arm and difference statements
    hold simultaneously; classical intervals use the same per-series level.
    """
    cfg = BoundaryConfig(eta_sq, alpha)
    series: dict[str, StepPath] = {}
    for arm in (0, 1):
        series[f"r_hat_{arm}"] = paths.r_hat[arm]
        series[f"v_hat_{arm}"] = paths.v_hat[arm]
        band = single_arm_cs(paths.r_hat[arm], paths.v_hat[arm], cfg.halved())
        series[f"cs_lower_{arm}"], series[f"cs_upper_{arm}"] = band.lower, band.upper
        cl = classical_pointwise(paths.r_hat[arm], paths.v_hat[arm], alpha / 2)
        series[f"classical_lower_{arm}"], series[f"classical_upper_{arm}"] = cl.lower, cl.upper
    series["delta_hat"] = paths.delta_hat
    series["sigma_hat_sq"] = paths.sigma_hat_sq
    band = difference_cs(paths.delta_hat, paths.v_hat[0], paths.v_hat[1], cfg)
    series["cs_lower_delta"], series["cs_upper_delta"] = band.lower, band.upper
    cl = classical_pointwise(paths.delta_hat, paths.sigma_hat_sq, alpha)
    series["classical_lower_delta"], series["classical_upper_delta"] = cl.lower, cl.upper
    p, p_min = sequential_p_value_path(paths.delta_hat, paths.v_hat[0], paths.v_hat[1], eta_sq)
    series["p_value"], series["p_value_running_min"] = p, p_min

    times = np.array([0.0])
    for path in series.values():
        times = np.union1d(times, path.times)
    frames = [pd.DataFrame({"time": times, "series": name, "value": path.eval(times)})
              for name, path in series.items()]
    return pd.concat(frames, ignore_index=True)


def boundary_table(v_grid, alpha: float = 0.05, eta_sq: float = DEFAULT_ETA_SQ,
                   pi: float = 0.5, asym_ratio: float = 1e-2) -> pd.DataFrame:
    """Tabulate boundary widths over a grid of variance clocks.

    Symmetric columns put ``V`` on both arms; the ``*_asym`` columns use
    ``V0 = asym_ratio * V`` and ``V1 = V``.
    """
    v = np.asarray(v_grid, dtype=float)
    if v.ndim != 1 or v.size == 0 or np.any(~np.isfinite(v)) or np.any(v < 0):
        raise ValueError("v-grid must be a non-empty list of finite values >= 0")
    if v.size > 1 and np.any(np.diff(v) <= 0):
        raise ValueError("v-grid must be strictly increasing")
    if not 0 < pi < 1:
        raise ValueError("pi must lie in (0, 1)")
    if not asym_ratio >= 0:
        raise ValueError("asym_ratio must be >= 0")
    BoundaryConfig(eta_sq, alpha)
    b_half = mixture_boundary(v, alpha / 2, eta_sq)
    v0 = asym_ratio * v
    return pd.DataFrame({
        "V": v,
        "b_alpha": mixture_boundary(v, alpha, eta_sq),
        "b_half_alpha": b_half,
        "union_half_width": 2 * b_half,
        "sigma_bound_half_width": mixture_boundary(v / (pi * (1 - pi)), alpha, eta_sq),
        "relative_width": relative_width(v, v, pi, alpha, eta_sq),
        "union_half_width_asym": mixture_boundary(v0, alpha / 2, eta_sq) + b_half,
        "sigma_bound_half_width_asym": mixture_boundary(v / (1 - pi) + v0 / pi, alpha, eta_sq),
        "relative_width_asym": relative_width(v0, v, pi, alpha, eta_sq),
    })
