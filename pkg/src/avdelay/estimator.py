"""Scikit-learn style front end."""

from __future__ import annotations

import numpy as np
import pandas as pd
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .confidence import (
    DEFAULT_ETA_SQ,
    BoundaryConfig,
    classical_pointwise,
    difference_cs,
    sequential_p_value_path,
    single_arm_cs,
)
from .core import ObservedDataset, PotentialOutcomeTable, apply_switching
from .estimators import AugmentationPolicy, aipw_paths, ipw_paths
from .harness import analysis_series
from .io import OBSERVED_COLUMNS, ORACLE_COLUMNS

__all__ = ["DelayedRewardCS"]

_TARGETS = ("r0", "r1", "delta")


def _coerce_input(X, assignment):
    """Return ``(observed, table, assignment)``; ``table`` is None for observed-only input."""
    if isinstance(X, pd.DataFrame):
        cols = set(X.columns)
        if set(ORACLE_COLUMNS) - {"w"} <= cols:
            kw = {c: X[c].to_numpy() for c in ORACLE_COLUMNS if c != "w"}
            if assignment is None and "w" in cols:
                by_id = dict(zip(X["unit_id"].astype(int), X["w"]))
                table = PotentialOutcomeTable(**kw)
                assignment = np.array([by_id[u] for u in table.unit_id.tolist()])
            else:
                table = PotentialOutcomeTable(**kw)
            X = table
        elif set(OBSERVED_COLUMNS) <= cols:
            X = ObservedDataset(**{c: X[c].to_numpy() for c in OBSERVED_COLUMNS})
        else:
            raise ValueError("DataFrame must carry the observed or the oracle column set")
    if isinstance(X, PotentialOutcomeTable):
        if assignment is None:
            raise ValueError("an assignment vector is required with potential-outcome input")
        return apply_switching(X, assignment), X, np.asarray(assignment)
    if isinstance(X, ObservedDataset):
        if assignment is not None:
            raise ValueError("observed data already carries the assignment")
        return X, None, None
    raise TypeError(f"unsupported input type {type(X).__name__}")


class DelayedRewardCS(BaseEstimator):
    """Anytime-valid confidence sequences for cumulative rewards under outcome delay.

    Parameters
    ----------
    estimator : {"ipw", "aipw"}
        ``"aipw"`` needs the potential-outcome table plus the assignment,
        since the augmentation activates at counterfactual event times.
    alpha : float
        Joint error level. Each arm's sequence uses ``alpha/2`` and the
        difference the union of both, so all three hold together.
    eta_sq : float
        Mixture variance of the normal-mixture boundary.
    augmentation : {"running_mean", "zero"} or array of shape (n_units, 2), optional
        Event-time augmentation for ``"aipw"``; defaults to the running mean.

    Attributes
    ----------
    paths_ : EstimatePaths
    arm_bands_ : tuple of ConfidenceBand
    difference_band_ : ConfidenceBand
    classical_bands_ : dict of ConfidenceBand
    p_value_path_, p_value_running_min_path_ : StepPath
    """

    def __init__(self, estimator="ipw", alpha=0.05, eta_sq=DEFAULT_ETA_SQ, augmentation=None):
        self.estimator = estimator
        self.alpha = alpha
        self.eta_sq = eta_sq
        self.augmentation = augmentation

    def _policy(self) -> AugmentationPolicy:
        aug = self.augmentation
        if aug is None or (isinstance(aug, str) and aug == "running_mean"):
            return AugmentationPolicy.running_mean()
        if isinstance(aug, str) and aug == "zero":
            return AugmentationPolicy.zero()
        if isinstance(aug, AugmentationPolicy):
            return aug
        return AugmentationPolicy.custom(aug)

    def fit(self, X, assignment=None):
        cfg = BoundaryConfig(self.eta_sq, self.alpha)
        if self.estimator not in ("ipw", "aipw"):
            raise ValueError(f"estimator must be 'ipw' or 'aipw', got {self.estimator!r}")
        obs, table, w = _coerce_input(X, assignment)
        if self.estimator == "ipw":
            paths = ipw_paths(obs)
        else:
            if table is None:
                raise ValueError("AIPW needs potential-outcome (oracle) input with an assignment")
            paths = aipw_paths(table, w, self._policy())
        self.paths_ = paths
        self.n_units_ = len(obs)
        self.arm_bands_ = tuple(single_arm_cs(paths.r_hat[a], paths.v_hat[a], cfg.halved()) for a in (0, 1))
        self.difference_band_ = difference_cs(paths.delta_hat, paths.v_hat[0], paths.v_hat[1], cfg)
        self.classical_bands_ = {
            "r0": classical_pointwise(paths.r_hat[0], paths.v_hat[0], self.alpha / 2),
            "r1": classical_pointwise(paths.r_hat[1], paths.v_hat[1], self.alpha / 2),
            "delta": classical_pointwise(paths.delta_hat, paths.sigma_hat_sq, self.alpha),
        }
        self.p_value_path_, self.p_value_running_min_path_ = sequential_p_value_path(
            paths.delta_hat, paths.v_hat[0], paths.v_hat[1], self.eta_sq
        )
        return self

    def _band(self, target, kind):
        if target not in _TARGETS:
            raise ValueError(f"target must be one of {_TARGETS}, got {target!r}")
        if kind == "classical":
            return self.classical_bands_[target]
        if kind != "cs":
            raise ValueError("kind must be 'cs' or 'classical'")
        return self.difference_band_ if target == "delta" else self.arm_bands_[int(target[1])]

    def predict(self, times, target="delta"):
        """Point estimate of the target process at ``times``."""
        check_is_fitted(self, "paths_")
        return self._band(target, "cs").center.eval(np.asarray(times, dtype=float))

    def predict_interval(self, times, target="delta", kind="cs"):
        """``(n_times, 2)`` array of lower and upper limits."""
        check_is_fitted(self, "paths_")
        band = self._band(target, kind)
        t = np.atleast_1d(np.asarray(times, dtype=float))
        return np.column_stack([band.lower.eval(t), band.upper.eval(t)])

    def p_value(self, times, running_min=False):
        check_is_fitted(self, "paths_")
        path = self.p_value_running_min_path_ if running_min else self.p_value_path_
        return path.eval(np.asarray(times, dtype=float))

    def transform(self, X=None):
        """Long-format ``(time, series, value)`` frame for the fitted data."""
        check_is_fitted(self, "paths_")
        return analysis_series(self.paths_, self.alpha, self.eta_sq)

    def fit_transform(self, X, assignment=None):
        return self.fit(X, assignment).transform()
