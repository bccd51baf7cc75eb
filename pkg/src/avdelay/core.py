"""Potential-outcome model, switching equations and exact reward paths.

Every time-indexed quantity in the package is a right-continuous step
function of calendar time, represented by :class:`StepPath`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from ._validation import (
    DEFAULT_BOUND,
    DEFAULT_PI_MIN,
    as_float_array,
    check_arm,
    check_assignment,
    check_bounded,
    check_propensity,
)

__all__ = [
    "StepPath",
    "PotentialUnit",
    "PotentialOutcomeTable",
    "ObservedDataset",
    "apply_switching",
    "true_reward_path",
    "true_delta_path",
]


class StepPath:
    """Right-continuous piecewise-constant function on ``[0, inf)``.

    ``times`` are strictly increasing breakpoints and ``values[k]`` is the
    value on ``[times[k], times[k+1])``. Before the first breakpoint the
    path equals ``initial``.
    """

    __slots__ = ("times", "values", "initial")

    def __init__(self, times=(), values=(), initial: float = 0.0):
        times = as_float_array(times, "times")
        values = as_float_array(values, "values")
        if times.shape != values.shape:
            raise ValueError("times and values must have the same length")
        if times.size > 1 and not np.all(np.diff(times) > 0):
            raise ValueError("jump times must be strictly increasing")
        times.setflags(write=False)
        values.setflags(write=False)
        self.times = times
        self.values = values
        self.initial = float(initial)

    @classmethod
    def from_increments(cls, times, increments, order_key=None, initial: float = 0.0) -> "StepPath":
        """Accumulate raw (time, increment) events into a path.

        Events are summed in ``(time, order_key)`` order; simultaneous events
        collapse into a single jump carrying the post-event total.
        """
        times = as_float_array(times, "times")
        increments = as_float_array(increments, "increments")
        if times.shape != increments.shape:
            raise ValueError("times and increments must have the same length")
        if times.size == 0:
            return cls(initial=initial)
        if order_key is None:
            order = np.argsort(times, kind="stable")
        else:
            order = np.lexsort((np.asarray(order_key), times))
        t_sorted = times[order]
        totals = initial + np.cumsum(increments[order])
        last_of_group = np.append(t_sorted[1:] != t_sorted[:-1], True)
        return cls(t_sorted[last_of_group], totals[last_of_group], initial)

    @classmethod
    def constant(cls, value: float = 0.0) -> "StepPath":
        return cls(initial=value)

    def __call__(self, t):
        return self.eval(t)

    def eval(self, t):
        """Value at ``t`` (scalar or array); inclusive at jump times."""
        t_arr = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.times, t_arr, side="right") - 1
        if self.values.size:
            out = np.where(idx >= 0, self.values[np.maximum(idx, 0)], self.initial)
        else:
            out = np.full(t_arr.shape, self.initial)
        return float(out) if out.ndim == 0 else out

    @property
    def n_jumps(self) -> int:
        return int(self.times.size)

    @property
    def final_value(self) -> float:
        return float(self.values[-1]) if self.values.size else self.initial

    def _combine(self, other: "StepPath", op) -> "StepPath":
        grid = np.union1d(self.times, other.times)
        return StepPath(grid, op(self.eval(grid), other.eval(grid)), op(self.initial, other.initial))

    def __add__(self, other: "StepPath") -> "StepPath":
        return self._combine(other, np.add)

    def __sub__(self, other: "StepPath") -> "StepPath":
        return self._combine(other, np.subtract)

    def __neg__(self) -> "StepPath":
        return StepPath(self.times, -self.values, -self.initial)

    def map(self, func) -> "StepPath":
        """Apply a vectorised function to the path's values."""
        return StepPath(self.times, func(self.values), float(func(np.asarray(self.initial))))

    def equals(self, other: "StepPath") -> bool:
        """Exact equality of the function (not of its representation)."""
        grid = np.union1d(self.times, other.times)
        return self.initial == other.initial and bool(np.array_equal(self.eval(grid), other.eval(grid)))

    def __repr__(self) -> str:
        return f"StepPath(n_jumps={self.n_jumps}, initial={self.initial!r}, final={self.final_value!r})"


class PotentialUnit(NamedTuple):
    unit_id: int
    entry_time: float
    t0: float
    t1: float
    y0: float
    y1: float
    pi_1: float

    def event_time(self, arm: int) -> float:
        return self.t1 if arm == 1 else self.t0

    def outcome(self, arm: int) -> float:
        return self.y1 if arm == 1 else self.y0


def _sort_by_entry(unit_id: np.ndarray, entry: np.ndarray) -> np.ndarray:
    return np.lexsort((unit_id, entry))


@dataclass(frozen=True, eq=False)
class PotentialOutcomeTable:
    """Oracle-side record: both arms' event times and outcomes per unit.

    Stored column-wise. Units are sorted by entry time (ties by unit id)
    on construction, and all model invariants are checked.
    """

    unit_id: np.ndarray
    entry_time: np.ndarray
    t0: np.ndarray
    t1: np.ndarray
    y0: np.ndarray
    y1: np.ndarray
    pi_1: np.ndarray
    bound: float = DEFAULT_BOUND
    pi_min: float = DEFAULT_PI_MIN

    def __post_init__(self):
        cols = {}
        for name in ("unit_id", "entry_time", "t0", "t1", "y0", "y1", "pi_1"):
            cols[name] = as_float_array(getattr(self, name), name)
        n = cols["unit_id"].size
        for name, arr in cols.items():
            if arr.size != n:
                raise ValueError(f"column {name!r} has length {arr.size}, expected {n}")
        uid = cols["unit_id"]
        if not np.all(uid == np.round(uid)):
            raise ValueError("unit_id must be integer valued")
        uid = uid.astype(np.int64)
        if np.unique(uid).size != n:
            raise ValueError("unit_id values must be unique")
        cols["unit_id"] = uid
        if not self.bound > 0:
            raise ValueError("bound B must be positive")
        if np.any(cols["entry_time"] < 0):
            raise ValueError("entry times must be >= 0")
        for arm in (0, 1):
            bad = ~(cols["entry_time"] < cols[f"t{arm}"])
            if np.any(bad):
                raise ValueError(
                    f"unit_id {int(uid[np.argmax(bad)])}: event time t({arm}) must exceed entry time"
                )
            check_bounded(cols[f"y{arm}"], self.bound, uid, f"y({arm})")
        check_propensity(cols["pi_1"], self.pi_min, uid)
        order = _sort_by_entry(uid, cols["entry_time"])
        for name, arr in cols.items():
            arr = np.ascontiguousarray(arr[order])
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "bound", float(self.bound))
        object.__setattr__(self, "pi_min", float(self.pi_min))

    @classmethod
    def from_units(cls, units: Sequence[PotentialUnit], bound: float = DEFAULT_BOUND,
                   pi_min: float = DEFAULT_PI_MIN) -> "PotentialOutcomeTable":
        if len(units) == 0:
            empty = np.empty(0)
            return cls(empty, empty, empty, empty, empty, empty, empty, bound, pi_min)
        cols = list(zip(*units))
        return cls(*(np.asarray(c, dtype=float) for c in cols), bound=bound, pi_min=pi_min)

    def __len__(self) -> int:
        return int(self.unit_id.size)

    def __iter__(self) -> Iterator[PotentialUnit]:
        return iter(self.units)

    @property
    def units(self) -> list[PotentialUnit]:
        return [
            PotentialUnit(int(u), float(e), float(a), float(b), float(c), float(d), float(p))
            for u, e, a, b, c, d, p in zip(
                self.unit_id, self.entry_time, self.t0, self.t1, self.y0, self.y1, self.pi_1
            )
        ]

    def event_times(self, arm: int) -> np.ndarray:
        return self.t1 if check_arm(arm) == 1 else self.t0

    def outcomes(self, arm: int) -> np.ndarray:
        return self.y1 if check_arm(arm) == 1 else self.y0

    def propensity(self, arm: int) -> np.ndarray:
        return self.pi_1 if check_arm(arm) == 1 else 1.0 - self.pi_1

    @property
    def horizon(self) -> float:
        """Latest potential event time over both arms."""
        if len(self) == 0:
            return 0.0
        return float(max(self.t0.max(), self.t1.max()))

    def event_grid(self) -> np.ndarray:
        """Sorted union of both arms' potential event times."""
        return np.union1d(self.t0, self.t1)

    def with_outcomes(self, y0, y1) -> "PotentialOutcomeTable":
        return PotentialOutcomeTable(
            self.unit_id, self.entry_time, self.t0, self.t1, y0, y1, self.pi_1, self.bound, self.pi_min
        )

    def equals(self, other: "PotentialOutcomeTable") -> bool:
        names = ("unit_id", "entry_time", "t0", "t1", "y0", "y1", "pi_1")
        return len(self) == len(other) and all(
            np.array_equal(getattr(self, n), getattr(other, n)) for n in names
        )


@dataclass(frozen=True, eq=False)
class ObservedDataset:
    """Analyst-side record: the arm actually received and what was seen."""

    unit_id: np.ndarray
    entry_time: np.ndarray
    w: np.ndarray
    pi_1: np.ndarray
    t_obs: np.ndarray
    y_obs: np.ndarray
    bound: float = DEFAULT_BOUND
    pi_min: float = DEFAULT_PI_MIN

    def __post_init__(self):
        cols = {}
        for name in ("unit_id", "entry_time", "w", "pi_1", "t_obs", "y_obs"):
            cols[name] = as_float_array(getattr(self, name), name)
        n = cols["unit_id"].size
        for name, arr in cols.items():
            if arr.size != n:
                raise ValueError(f"column {name!r} has length {arr.size}, expected {n}")
        uid = cols["unit_id"].astype(np.int64)
        if not np.array_equal(uid, cols["unit_id"]):
            raise ValueError("unit_id must be integer valued")
        cols["unit_id"] = uid
        cols["w"] = check_assignment(cols["w"], n)
        bad = ~(cols["t_obs"] > cols["entry_time"])
        if np.any(bad):
            raise ValueError(f"unit_id {int(uid[np.argmax(bad)])}: observed time must exceed entry time")
        check_bounded(cols["y_obs"], self.bound, uid, "y")
        check_propensity(cols["pi_1"], self.pi_min, uid)
        order = _sort_by_entry(uid, cols["entry_time"])
        for name, arr in cols.items():
            arr = np.ascontiguousarray(arr[order])
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return int(self.unit_id.size)

    def propensity_received(self) -> np.ndarray:
        """pi_i(w_i), the probability of the arm each unit actually got."""
        return np.where(self.w == 1, self.pi_1, 1.0 - self.pi_1)


def apply_switching(table: PotentialOutcomeTable, assignment) -> ObservedDataset:
    """Reveal the assigned arm's (time, outcome) pair for every unit.

    ``assignment`` is aligned with the table's (entry-sorted) unit order.
    """
    w = check_assignment(assignment, len(table))
    treated = w == 1
    return ObservedDataset(
        unit_id=table.unit_id,
        entry_time=table.entry_time,
        w=w,
        pi_1=table.pi_1,
        t_obs=np.where(treated, table.t1, table.t0),
        y_obs=np.where(treated, table.y1, table.y0),
        bound=table.bound,
        pi_min=table.pi_min,
    )


def true_reward_path(table: PotentialOutcomeTable, arm: int) -> StepPath:
    """Exact cumulative reward had every unit been given ``arm``.

    Entry always precedes the event, so each unit contributes its outcome
    exactly at its potential event time.
    """
    return StepPath.from_increments(table.event_times(arm), table.outcomes(arm), table.unit_id)


def true_delta_path(table: PotentialOutcomeTable) -> StepPath:
    return true_reward_path(table, 1) - true_reward_path(table, 0)
