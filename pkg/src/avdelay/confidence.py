"""Normal-mixture boundaries, confidence sequences and p-values."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._validation import check_alpha, check_nonnegative, check_positive
from .core import StepPath

__all__ = [
    "DEFAULT_ETA_SQ",
    "BoundaryConfig",
    "ConfidenceBand",
    "mixture_boundary",
    "single_arm_cs",
    "difference_cs",
    "sequential_p_value",
    "sequential_p_value_path",
    "classical_pointwise",
    "relative_width",
    "normal_cdf",
    "normal_quantile",
    "chi_square_1_quantile",
]

DEFAULT_ETA_SQ = 1.0 / 16.0

P_VALUE_FLOOR = 1e-12


@dataclass(frozen=True)
class BoundaryConfig:
    eta_sq: float = DEFAULT_ETA_SQ
    alpha: float = 0.05

    def __post_init__(self):
        check_positive(self.eta_sq, "eta_sq")
        check_alpha(self.alpha)

    def halved(self) -> "BoundaryConfig":
        return BoundaryConfig(self.eta_sq, self.alpha / 2)


def mixture_boundary(v, alpha, eta_sq=DEFAULT_ETA_SQ):
    """Two-sided normal-mixture boundary ``b(V; alpha)``.

    ``sqrt((V eta^2 + 1)/eta^2 * log((V eta^2 + 1)/alpha^2))``, with the
    logarithm split as ``log1p(V eta^2) - 2 log(alpha)``. Vectorised over
    ``v`` and ``alpha``.
    """
    v_arr = np.asarray(v, dtype=float)
    a_arr = np.asarray(alpha, dtype=float)
    check_positive(eta_sq, "eta_sq")
    if np.any(~(v_arr >= 0)) or np.any(~np.isfinite(v_arr)):
        raise ValueError("variance clock V must be finite and >= 0")
    if np.any(~((a_arr > 0) & (a_arr < 1))):
        raise ValueError("alpha must lie in (0, 1)")
    scale = (v_arr * eta_sq + 1.0) / eta_sq
    out = np.sqrt(scale * (np.log1p(v_arr * eta_sq) - 2.0 * np.log(a_arr)))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ConfidenceBand:
    center: StepPath
    lower: StepPath
    upper: StepPath
    level: float
    kind: str

    def half_width(self) -> StepPath:
        return self.upper - self.center

    def contains(self, path: StepPath, times=None) -> np.ndarray:
        """Pointwise containment of ``path`` at ``times`` (default: all breakpoints)."""
        if times is None:
            times = np.union1d(np.union1d(self.lower.times, self.upper.times), path.times)
            times = np.concatenate(([0.0], times))
        x = path.eval(times)
        return (self.lower.eval(times) <= x) & (x <= self.upper.eval(times))

    def covers(self, path: StepPath) -> bool:
        return bool(np.all(self.contains(path)))


def _band(center: StepPath, half_width: StepPath, level: float, kind: str) -> ConfidenceBand:
    grid = np.union1d(center.times, half_width.times)
    c = center.eval(grid)
    h = half_width.eval(grid)
    return ConfidenceBand(
        center=center,
        lower=StepPath(grid, c - h, center.initial - half_width.initial),
        upper=StepPath(grid, c + h, center.initial + half_width.initial),
        level=level,
        kind=kind,
    )


def _check_clock(clock: StepPath, name: str) -> None:
    vals = np.concatenate(([clock.initial], clock.values))
    if np.any(vals < 0) or np.any(np.diff(vals) < 0):
        raise ValueError(f"{name} must be nonnegative and nondecreasing")


def single_arm_cs(r_hat: StepPath, v_hat: StepPath, cfg: BoundaryConfig = BoundaryConfig()) -> ConfidenceBand:
    """``r_hat(t) +/- b(V_hat(t); alpha)`` at level ``1 - cfg.alpha``."""
    _check_clock(v_hat, "v_hat")
    hw = v_hat.map(lambda v: mixture_boundary(v, cfg.alpha, cfg.eta_sq))
    return _band(r_hat, hw, 1.0 - cfg.alpha, "single_arm")


def difference_cs(delta_hat: StepPath, v_hat_0: StepPath, v_hat_1: StepPath,
                  cfg: BoundaryConfig = BoundaryConfig()) -> ConfidenceBand:
    """Union-bound sequence for the difference: each arm spends ``alpha/2``."""
    _check_clock(v_hat_0, "v_hat_0")
    _check_clock(v_hat_1, "v_hat_1")
    half = cfg.alpha / 2
    hw = (v_hat_0.map(lambda v: mixture_boundary(v, half, cfg.eta_sq))
          + v_hat_1.map(lambda v: mixture_boundary(v, half, cfg.eta_sq)))
    return _band(delta_hat, hw, 1.0 - cfg.alpha, "difference_union")


def _union_boundary(alpha: float, v0: float, v1: float, eta_sq: float) -> float:
    return mixture_boundary(v0, alpha / 2, eta_sq) + mixture_boundary(v1, alpha / 2, eta_sq)


def sequential_p_value(delta_hat_t: float, v0: float, v1: float, eta_sq: float = DEFAULT_ETA_SQ) -> float:
    """Smallest alpha whose union-bound sequence excludes zero at this time.

    Bisection on ``log(alpha)`` over ``(1e-12, 1)``; the boundary is
    strictly decreasing in alpha. Returns 1.0 when even ``alpha -> 1``
    cannot exclude zero and ``1e-12`` when the root lies below the bracket.
    """
    v0 = check_nonnegative(v0, "v0")
    v1 = check_nonnegative(v1, "v1")
    check_positive(eta_sq, "eta_sq")
    stat = abs(float(delta_hat_t))
    if not math.isfinite(stat):
        raise ValueError("delta_hat_t must be finite")
    if stat <= _union_boundary(1.0 - 1e-16, v0, v1, eta_sq):
        return 1.0
    lo, hi = math.log(P_VALUE_FLOOR), 0.0
    if stat > _union_boundary(P_VALUE_FLOOR, v0, v1, eta_sq):
        return P_VALUE_FLOOR
    # invariant: boundary(exp(lo)) >= stat > boundary(exp(hi))
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _union_boundary(math.exp(mid), v0, v1, eta_sq) >= stat:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-14:
            break
    return math.exp(0.5 * (lo + hi))


def sequential_p_value_path(delta_hat: StepPath, v_hat_0: StepPath, v_hat_1: StepPath,
                            eta_sq: float = DEFAULT_ETA_SQ) -> tuple[StepPath, StepPath]:
    """Instantaneous p-value path and its running minimum."""
    grid = np.union1d(np.union1d(delta_hat.times, v_hat_0.times), v_hat_1.times)
    d, a, b = delta_hat.eval(grid), v_hat_0.eval(grid), v_hat_1.eval(grid)
    p = np.array([sequential_p_value(x, y, z, eta_sq) for x, y, z in zip(d, a, b)])
    p0 = sequential_p_value(delta_hat.initial, v_hat_0.initial, v_hat_1.initial, eta_sq)
    running = np.minimum.accumulate(np.concatenate(([p0], p)))
    return StepPath(grid, p, p0), StepPath(grid, running[1:], p0)


def classical_pointwise(center: StepPath, clock: StepPath, alpha: float) -> ConfidenceBand:
    """Fixed-time interval ``center +/- sqrt(chi2_{1,1-alpha} * clock)``.

    ``clock`` is ``V_hat(w)`` for an arm or ``sigma_hat^2`` for the difference.
    Valid only at a single pre-chosen time.
    """
    check_alpha(alpha)
    _check_clock(clock, "clock")
    q = chi_square_1_quantile(1.0 - alpha)
    hw = clock.map(lambda v: np.sqrt(q * v))
    return _band(center, hw, 1.0 - alpha, "classical_pointwise")


def relative_width(v0, v1, pi: float, alpha: float, eta_sq: float = DEFAULT_ETA_SQ):
    """Union-bound half-width over the variance-upper-bound half-width."""
    if not 0 < pi < 1:
        raise ValueError("pi must lie in (0, 1)")
    check_alpha(alpha)
    num = mixture_boundary(v0, alpha / 2, eta_sq) + mixture_boundary(v1, alpha / 2, eta_sq)
    den = mixture_boundary(np.asarray(v1) / (1 - pi) + np.asarray(v0) / pi, alpha, eta_sq)
    return num / den


# Rational approximation to the normal quantile (P. J. Acklam), relative
# error ~1.2e-9 before refinement.
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def normal_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def _acklam(p: float) -> float:
    if p < _P_LOW:
        q = math.sqrt(-2 * math.log(p))
        return ((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5])
                / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1))
    if p > 1 - _P_LOW:
        return -_acklam(1 - p)
    q = p - 0.5
    r = q * q
    return ((((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
            / (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1))


def normal_quantile(p: float) -> float:
    """Inverse standard-normal CDF, refined by one Newton step."""
    p = float(p)
    if not 0 < p < 1:
        raise ValueError(f"p must lie in (0, 1), got {p!r}")
    if p > 0.5:
        return -normal_quantile(1.0 - p)
    x = _acklam(p)
    density = math.exp(-0.5 * x * x) / math.sqrt(2 * math.pi)
    return x - (normal_cdf(x) - p) / density


def chi_square_1_quantile(p: float) -> float:
    """Quantile of the chi-square distribution with one degree of freedom."""
    p = float(p)
    if not 0 < p < 1:
        raise ValueError(f"p must lie in (0, 1), got {p!r}")
    return normal_quantile(0.5 + 0.5 * p) ** 2
