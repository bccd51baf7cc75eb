"""IPW and event-time AIPW estimators of the cumulative reward processes.

All estimators return :class:`EstimatePaths`, a bundle of step paths for
both arms, their difference and the variance clocks that drive the
confidence boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._validation import check_arm, check_assignment
from .core import ObservedDataset, PotentialOutcomeTable, StepPath

__all__ = [
    "InadmissibleAugmentationError",
    "AugmentationPolicy",
    "EstimatePaths",
    "ipw_paths",
    "running_mean_values",
    "augmentation_values",
    "aipw_paths",
    "oracle_variance_path",
    "oracle_sigma_sq_path",
]


class InadmissibleAugmentationError(ValueError):
    """Augmentation would break the single-arm martingale structure."""


@dataclass(frozen=True)
class AugmentationPolicy:
    """Event-time augmentation ``m_it(w) = f_i(w) * 1[t_i(w) <= t]``.

    Use the constructors rather than instantiating directly:
    ``zero()`` gives IPW, ``running_mean()`` the strict-past mean of the
    arm's observed outcomes, ``custom(values)`` fixed per-unit predictions
    (an ``(n, 2)`` array aligned with the table's unit order, column ``w``
    for arm ``w``), and ``from_paths`` validates arbitrary augmentation
    paths against the event-time condition.
    """

    kind: str = "zero"
    values: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("zero", "running_mean", "custom"):
            raise ValueError(f"unknown augmentation kind {self.kind!r}")
        if self.kind == "custom":
            vals = np.array(self.values, dtype=float)
            if vals.ndim != 2 or vals.shape[1] != 2:
                raise ValueError("custom augmentation values must have shape (n_units, 2)")
            if not np.all(np.isfinite(vals)):
                raise ValueError("custom augmentation values must be finite")
            vals.setflags(write=False)
            object.__setattr__(self, "values", vals)
        elif self.values is not None:
            raise ValueError(f"{self.kind} augmentation takes no values")

    @classmethod
    def zero(cls) -> "AugmentationPolicy":
        return cls("zero")

    @classmethod
    def running_mean(cls) -> "AugmentationPolicy":
        return cls("running_mean")

    @classmethod
    def custom(cls, values) -> "AugmentationPolicy":
        return cls("custom", values)

    @classmethod
    def from_paths(cls, table: PotentialOutcomeTable,
                   paths: Sequence[Sequence[StepPath]]) -> "AugmentationPolicy":
        """Build a custom policy from per-unit augmentation paths.

        ``paths[i][w]`` is the working-model path ``m_it(w)`` for the i-th
        unit of ``table``. It must vanish strictly before ``t_i(w)`` and stay
        constant from ``t_i(w)`` on; anything else is rejected.
        """
        if len(paths) != len(table):
            raise ValueError(f"expected {len(table)} unit paths, got {len(paths)}")
        values = np.zeros((len(table), 2))
        for i, unit_paths in enumerate(paths):
            for arm in (0, 1):
                m = unit_paths[arm]
                t_event = table.event_times(arm)[i]
                uid = int(table.unit_id[i])
                before = m.times < t_event
                if m.initial != 0 or np.any(m.values[before] != 0):
                    raise InadmissibleAugmentationError(
                        f"unit_id {uid}, arm {arm}: augmentation is nonzero before the event time"
                    )
                after_value = m.eval(t_event)
                if np.any(m.values[m.times > t_event] != after_value):
                    raise InadmissibleAugmentationError(
                        f"unit_id {uid}, arm {arm}: augmentation changes after the event time"
                    )
                values[i, arm] = after_value
        return cls.custom(values)

    @property
    def needs_assignment(self) -> bool:
        return self.kind == "running_mean"


@dataclass(frozen=True)
class EstimatePaths:
    r_hat: tuple[StepPath, StepPath]
    delta_hat: StepPath
    v_hat: tuple[StepPath, StepPath]
    sigma_hat_sq: StepPath
    oracle: bool


def ipw_paths(obs: ObservedDataset) -> EstimatePaths:
    """Horvitz-Thompson estimates from observed data only."""
    pi_recv = obs.propensity_received()
    weighted = obs.y_obs / pi_recv
    r_hat, v_hat = [], []
    for arm in (0, 1):
        mask = obs.w == arm
        t, uid = obs.t_obs[mask], obs.unit_id[mask]
        pi = pi_recv[mask]
        r_hat.append(StepPath.from_increments(t, weighted[mask], uid))
        v_hat.append(StepPath.from_increments(t, (1.0 - pi) * weighted[mask] ** 2, uid))
    sigma_hat_sq = StepPath.from_increments(obs.t_obs, weighted**2, obs.unit_id)
    return EstimatePaths(
        r_hat=(r_hat[0], r_hat[1]),
        delta_hat=r_hat[1] - r_hat[0],
        v_hat=(v_hat[0], v_hat[1]),
        sigma_hat_sq=sigma_hat_sq,
        oracle=False,
    )


def running_mean_values(table: PotentialOutcomeTable, assignment, arm: int) -> np.ndarray:
    """Mean of outcomes already observed in ``arm`` just before each unit's arm event.

    Only units assigned to ``arm`` whose event time is strictly earlier count;
    with no such unit the value is 0. Returned in table order.
    """
    arm = check_arm(arm)
    w = check_assignment(assignment, len(table))
    n = len(table)
    if n == 0:
        return np.empty(0)
    t = table.event_times(arm)
    order = np.lexsort((table.unit_id, t))
    t_sorted = t[order]
    seen = (w[order] == arm).astype(float)
    y_seen = table.outcomes(arm)[order] * seen
    cum_y = np.concatenate(([0.0], np.cumsum(y_seen)))
    cum_n = np.concatenate(([0.0], np.cumsum(seen)))
    # strict past: units tied in time never see each other
    first = np.searchsorted(t_sorted, t_sorted, side="left")
    past_n = cum_n[first]
    with np.errstate(invalid="ignore", divide="ignore"):
        f_sorted = np.where(past_n > 0, cum_y[first] / past_n, 0.0)
    f = np.empty(n)
    f[order] = f_sorted
    return f


def augmentation_values(table: PotentialOutcomeTable, policy: AugmentationPolicy,
                        arm: int, assignment=None) -> np.ndarray:
    """Per-unit post-event augmentation level ``f_i(arm)``."""
    arm = check_arm(arm)
    if policy.kind == "zero":
        return np.zeros(len(table))
    if policy.kind == "custom":
        if policy.values.shape[0] != len(table):
            raise ValueError(
                f"custom augmentation has {policy.values.shape[0]} rows, table has {len(table)} units"
            )
        return np.asarray(policy.values[:, arm])
    if assignment is None:
        raise ValueError("running-mean augmentation depends on the realised assignment")
    return running_mean_values(table, assignment, arm)


def aipw_paths(table: PotentialOutcomeTable, assignment,
               policy: AugmentationPolicy | None = None) -> EstimatePaths:
    """Event-time AIPW estimates.

    The augmentation switches on at each unit's potential event time in
    the target arm, which is unobservable for units in the other arm, so
    this needs the full potential-outcome table.
    """
    if not isinstance(table, PotentialOutcomeTable):
        raise TypeError("AIPW requires a PotentialOutcomeTable (oracle data)")
    policy = AugmentationPolicy.zero() if policy is None else policy
    w = check_assignment(assignment, len(table))
    r_hat, v_hat, sig_t, sig_inc = [], [], [], []
    for arm in (0, 1):
        f = augmentation_values(table, policy, arm, w)
        pi = table.propensity(arm)
        z = (w == arm).astype(float)
        t = table.event_times(arm)
        e_hat = z * (table.outcomes(arm) - f) / pi
        r_hat.append(StepPath.from_increments(t, f + e_hat, table.unit_id))
        v_hat.append(StepPath.from_increments(t, (1.0 - pi) * e_hat**2, table.unit_id))
        sig_t.append(t)
        sig_inc.append(e_hat**2)
    sigma_hat_sq = StepPath.from_increments(
        np.concatenate(sig_t), np.concatenate(sig_inc), np.concatenate([table.unit_id] * 2)
    )
    return EstimatePaths(
        r_hat=(r_hat[0], r_hat[1]),
        delta_hat=r_hat[1] - r_hat[0],
        v_hat=(v_hat[0], v_hat[1]),
        sigma_hat_sq=sigma_hat_sq,
        oracle=True,
    )


def oracle_variance_path(table: PotentialOutcomeTable, policy: AugmentationPolicy | None,
                         arm: int, assignment=None) -> StepPath:
    """Predictable quadratic variation ``V_t(arm)`` from true residuals.

    ``assignment`` is only needed for the running-mean policy, whose
    residuals depend on which earlier units landed in the arm.
    """
    policy = AugmentationPolicy.zero() if policy is None else policy
    arm = check_arm(arm)
    f = augmentation_values(table, policy, arm, assignment)
    pi = table.propensity(arm)
    e = table.outcomes(arm) - f
    return StepPath.from_increments(table.event_times(arm), (1.0 - pi) / pi * e**2, table.unit_id)


def oracle_sigma_sq_path(table: PotentialOutcomeTable, policy: AugmentationPolicy | None = None,
                         assignment=None) -> StepPath:
    """Variance upper bound ``sigma_t^2`` summed over units."""
    policy = AugmentationPolicy.zero() if policy is None else policy
    times, incs = [], []
    for arm in (0, 1):
        e = table.outcomes(arm) - augmentation_values(table, policy, arm, assignment)
        times.append(table.event_times(arm))
        incs.append(e**2 / table.propensity(arm))
    return StepPath.from_increments(
        np.concatenate(times), np.concatenate(incs), np.concatenate([table.unit_id] * 2)
    )
