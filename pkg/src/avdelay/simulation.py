"""Synthetic nonstationary delayed-outcome data.

Event times come from a multiplicative hazard (log-normal baseline in
time-since-entry, a weekly calendar cycle and Gaussian shocks) sampled by
thinning; outcome values depend on both internal and calendar time.
"""

from __future__ import annotations

import functools
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import erfcx

from .core import PotentialOutcomeTable

__all__ = [
    "Shock",
    "SimConfig",
    "MajorantViolation",
    "lognormal_hazard",
    "cycle_factor",
    "shock_factor",
    "total_hazard",
    "sample_event_time",
    "outcome_value",
    "generate_dataset",
    "draw_assignment",
    "unit_rng",
]

S_FLOOR = 1e-9
WINDOW = 0.25
GRID_POINTS = 64
SAFETY = 1.05
S_CAP = 1e6
_SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)


class MajorantViolation(AssertionError):
    """The thinning envelope failed to dominate the hazard."""


@dataclass(frozen=True)
class Shock:
    center: float
    width: float
    a0: float
    a1: float

    def intensity(self, arm: int) -> float:
        return self.a1 if arm == 1 else self.a0


@dataclass(frozen=True)
class SimConfig:
    n_units: int = 500
    entry_low: float = 0.0
    entry_high: float = 10.0
    mu: tuple[float, float] = (2.5, 0.3)
    sigma: tuple[float, float] = (0.5, 0.3)
    cycle_amplitude: float = 0.2
    cycle_period: float = 7.0
    shocks: tuple[Shock, ...] = (Shock(8.0, 0.5, 1.5, 2.0), Shock(15.0, 0.3, 1.0, 0.8))
    beta: tuple[float, float] = (1.0, 0.6)
    log_coef: float = 0.15
    outcome_cycle_coef: float = 0.1
    noise_low: float = 0.9
    noise_high: float = 1.1
    pi: float = 0.5
    seed: int = 0
    counting: bool = False

    def __post_init__(self):
        object.__setattr__(self, "shocks", tuple(Shock(*s) if not isinstance(s, Shock) else s
                                                 for s in self.shocks))
        if int(self.n_units) != self.n_units or self.n_units < 1:
            raise ValueError("n_units must be a positive integer")
        if not 0 <= self.entry_low < self.entry_high:
            raise ValueError("entry range must satisfy 0 <= low < high")
        if min(self.sigma) <= 0 or self.cycle_period <= 0:
            raise ValueError("sigma and cycle period must be positive")
        if not 0 <= self.cycle_amplitude < 1:
            raise ValueError("cycle amplitude must lie in [0, 1)")
        for sh in self.shocks:
            if sh.width <= 0 or sh.a0 < 0 or sh.a1 < 0:
                raise ValueError("shock widths must be positive and intensities nonnegative")
        if not 0 < self.noise_low <= self.noise_high:
            raise ValueError("noise range must be positive")
        if not 0 < self.pi < 1:
            raise ValueError("pi must lie in (0, 1)")

    def without_modulation(self) -> "SimConfig":
        """Same baseline hazard with the calendar cycle and shocks switched off."""
        return self.replace(cycle_amplitude=0.0, shocks=())

    def replace(self, **changes) -> "SimConfig":
        d = {f: getattr(self, f) for f in self.__dataclass_fields__}
        d.update(changes)
        return SimConfig(**d)

    def to_dict(self) -> dict:
        return asdict(self)


def lognormal_hazard(s, mu: float, sigma: float):
    """Hazard of a log-normal holding time, stable in both tails.

    Uses ``phi(z) / Phi(-z) = sqrt(2/pi) / erfcx(z / sqrt 2)``.
    """
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr <= 0):
        raise ValueError("internal time s must be positive")
    z = (np.log(s_arr) - mu) / sigma
    with np.errstate(over="ignore"):
        out = _SQRT_2_OVER_PI / erfcx(z / math.sqrt(2.0)) / (s_arr * sigma)
    return float(out) if out.ndim == 0 else out


def _lognormal_hazard_scalar(s: float, mu: float, sigma: float) -> float:
    z = (math.log(s) - mu) / sigma
    return _SQRT_2_OVER_PI / float(erfcx(z / math.sqrt(2.0))) / (s * sigma)


def cycle_factor(t, cfg: SimConfig):
    return 1.0 + cfg.cycle_amplitude * np.sin(2 * np.pi * np.asarray(t, dtype=float) / cfg.cycle_period)


def shock_factor(t, arm: int, cfg: SimConfig):
    t = np.asarray(t, dtype=float)
    out = np.ones_like(t)
    for sh in cfg.shocks:
        out = out + sh.intensity(arm) * np.exp(-((t - sh.center) ** 2) / (2 * sh.width**2))
    return float(out) if out.ndim == 0 else out


def total_hazard(t: float, entry: float, arm: int, cfg: SimConfig) -> float:
    if not t > entry:
        raise ValueError("hazard is only defined after entry (t > E)")
    s = max(t - entry, S_FLOOR)
    return _hazard_scalar(t, s, arm, cfg)


def _hazard_scalar(t: float, s: float, arm: int, cfg: SimConfig) -> float:
    base = _lognormal_hazard_scalar(s, cfg.mu[arm], cfg.sigma[arm])
    cyc = 1.0 + cfg.cycle_amplitude * math.sin(2 * math.pi * t / cfg.cycle_period)
    shock = 1.0
    for sh in cfg.shocks:
        shock += sh.intensity(arm) * math.exp(-((t - sh.center) ** 2) / (2 * sh.width**2))
    return base * cyc * shock


@functools.lru_cache(maxsize=None)
def _window_sup(mu: float, sigma: float, k: int) -> float:
    grid = np.linspace(max(k * WINDOW, S_FLOOR), (k + 1) * WINDOW, GRID_POINTS)
    return float(np.max(lognormal_hazard(grid, mu, sigma)))


def sample_event_time(entry: float, arm: int, cfg: SimConfig, rng: np.random.Generator) -> float:
    """Draw the first event after ``entry`` by windowed thinning.

    Internal time is split into windows of width 0.25; on each window the
    envelope is the baseline-hazard sup over a 64-point grid, inflated by
    1.05, times the largest possible cycle and shock multipliers.
    """
    mu, sigma = cfg.mu[arm], cfg.sigma[arm]
    modulation = (1.0 + cfg.cycle_amplitude) * (1.0 + sum(sh.intensity(arm) for sh in cfg.shocks))
    s, k = 0.0, 0
    while True:
        window_end = (k + 1) * WINDOW
        if window_end > S_CAP:
            raise RuntimeError(f"no event within internal time {S_CAP:g} (entry {entry})")
        majorant = SAFETY * _window_sup(mu, sigma, k) * modulation
        if majorant > 0:
            s_new = s + rng.exponential(1.0 / majorant)
        else:
            s_new = window_end
        if s_new >= window_end:
            s, k = window_end, k + 1
            continue
        s = s_new
        lam = _hazard_scalar(entry + s, max(s, S_FLOOR), arm, cfg)
        if lam > majorant:
            raise MajorantViolation(f"hazard {lam} exceeds envelope {majorant} at s={s}")
        if rng.random() * majorant < lam:
            return entry + s


def outcome_value(arm: int, s_internal, t_external, eps, cfg: SimConfig = SimConfig()):
    """Outcome size given the arm, time since entry and calendar time."""
    s_internal = np.asarray(s_internal, dtype=float)
    if np.any(s_internal < 0):
        raise ValueError("internal time must be >= 0")
    out = (cfg.beta[arm] * (1 + cfg.log_coef * np.log1p(s_internal))
           * (1 + cfg.outcome_cycle_coef * np.sin(2 * np.pi * np.asarray(t_external, dtype=float) / cfg.cycle_period))
           * np.asarray(eps, dtype=float))
    return float(out) if out.ndim == 0 else out


def unit_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for a (seed, key...) pair; order-free and reproducible."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key)))


# spawn-key namespaces
_ENTRIES, _UNIT, _ASSIGN = 0, 1, 2


def generate_dataset(cfg: SimConfig = SimConfig()) -> PotentialOutcomeTable:
    """Potential outcomes for ``cfg.n_units`` units under both arms.

    Units are numbered in entry order. Each unit has separate streams for
    its two event times and its outcome noise, which is shared by both arms.
    """
    n = int(cfg.n_units)
    entries = np.sort(unit_rng(cfg.seed, _ENTRIES).uniform(cfg.entry_low, cfg.entry_high, n))
    t = np.empty((2, n))
    eps = np.empty(n)
    for i in range(n):
        for arm in (0, 1):
            t[arm, i] = sample_event_time(entries[i], arm, cfg, unit_rng(cfg.seed, _UNIT, i, arm))
        eps[i] = unit_rng(cfg.seed, _UNIT, i, 2).uniform(cfg.noise_low, cfg.noise_high)
    s = t - entries
    if cfg.counting:
        y = np.ones((2, n))
        bound = 1.0
    else:
        y = np.vstack([outcome_value(arm, s[arm], t[arm], eps, cfg) for arm in (0, 1)])
        bound = (max(cfg.beta) * (1 + cfg.log_coef * math.log1p(float(s.max())))
                 * (1 + cfg.outcome_cycle_coef) * cfg.noise_high)
    return PotentialOutcomeTable(
        unit_id=np.arange(n),
        entry_time=entries,
        t0=t[0],
        t1=t[1],
        y0=y[0],
        y1=y[1],
        pi_1=np.full(n, cfg.pi),
        bound=bound,
    )


def draw_assignment(table: PotentialOutcomeTable, rng: np.random.Generator) -> np.ndarray:
    """Independent Bernoulli(pi_i(1)) arm labels in table order."""
    return (rng.random(len(table)) < table.pi_1).astype(np.int8)
