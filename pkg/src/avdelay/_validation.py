"""Input validation helpers shared by the public API."""

from __future__ import annotations

import numbers

import numpy as np

DEFAULT_BOUND = 10.0
DEFAULT_PI_MIN = 1e-6


def as_float_array(x, name: str = "array") -> np.ndarray:
    arr = np.array(x, dtype=float)
    if arr.ndim != 1:
        arr = arr.reshape(-1) if arr.size else np.empty(0)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_arm(arm) -> int:
    if arm not in (0, 1) or isinstance(arm, bool):
        raise ValueError(f"arm must be 0 or 1, got {arm!r}")
    return int(arm)


def check_assignment(w, n: int | None = None) -> np.ndarray:
    w = np.asarray(w)
    if w.ndim != 1:
        w = w.reshape(-1)
    if n is not None and w.size != n:
        raise ValueError(f"assignment has length {w.size}, expected {n}")
    if w.size and not np.all((w == 0) | (w == 1)):
        raise ValueError("assignment labels must be 0 or 1")
    return w.astype(np.int8)


def check_propensity(pi_1, pi_min: float, unit_id=None) -> None:
    if not 0 < pi_min < 0.5:
        raise ValueError("pi_min must lie in (0, 0.5)")
    pi_1 = np.asarray(pi_1, dtype=float)
    bad = (pi_1 < pi_min) | (pi_1 > 1.0 - pi_min)
    if np.any(bad):
        k = int(np.argmax(bad))
        who = f"unit_id {int(unit_id[k])}" if unit_id is not None else f"index {k}"
        raise ValueError(
            f"{who}: propensity {pi_1[k]!r} outside [{pi_min}, {1 - pi_min}]"
        )


def check_bounded(y, bound: float, unit_id=None, name: str = "y") -> None:
    bad = np.abs(np.asarray(y, dtype=float)) > bound
    if np.any(bad):
        k = int(np.argmax(bad))
        who = f"unit_id {int(unit_id[k])}" if unit_id is not None else f"index {k}"
        raise ValueError(f"{who}: |{name}| exceeds the outcome bound B={bound}")


def check_alpha(alpha) -> float:
    if not isinstance(alpha, numbers.Real) or not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")
    return float(alpha)


def check_positive(x, name: str) -> float:
    if not isinstance(x, numbers.Real) or not x > 0 or not np.isfinite(x):
        raise ValueError(f"{name} must be positive and finite, got {x!r}")
    return float(x)


def check_nonnegative(x, name: str) -> float:
    if not isinstance(x, numbers.Real) or not x >= 0 or not np.isfinite(x):
        raise ValueError(f"{name} must be nonnegative and finite, got {x!r}")
    return float(x)
