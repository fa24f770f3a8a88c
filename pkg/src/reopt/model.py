"""Market parameters, move factors, and risk-neutral probability calibration.

The lattice has three branches per period: up, middle, down.  The middle
factor is pinned to the per-period growth e^((r-y)*dt), which leaves the
middle-branch probability free in [0, 1).  That freedom is what lets the
middle branch encode the early-expiry event without introducing arbitrage:
whatever weight is placed on it, the one-step drift condition

    q_up*u + q_mid*m + q_down*d = e^((r-y)*dt)

still holds once q_up and q_down are scaled by (1 - q_mid).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from math import exp, sqrt
from typing import Callable

from .errors import InvalidHazard, InvalidParams, TooLarge

EXPONENTIAL = "exponential"
LINEAR = "linear"

GENERAL_TREE_MAX_STEPS = 20

# A node on the pure up/down lattice, e.g. ("u", "d", "u").
UpDownPath = tuple[str, ...]
HazardFn = Callable[[int, UpDownPath], float]


@dataclass(frozen=True)
class MarketParams:
    """Economic inputs of the lattice.

    spot       -- current stock price, > 0
    rate       -- continuously compounded annual interest rate, >= 0
    div_yield  -- continuously compounded annual dividend yield, >= 0
    sigma      -- annual volatility, > 0
    maturity   -- horizon in years, > 0
    steps      -- number of tree periods, >= 1
    """

    spot: float
    rate: float
    div_yield: float
    sigma: float
    maturity: float
    steps: int

    def __post_init__(self):
        if not self.spot > 0:
            raise InvalidParams(f"spot must be > 0, got {self.spot}")
        if self.rate < 0:
            raise InvalidParams(f"rate must be >= 0, got {self.rate}")
        if self.div_yield < 0:
            raise InvalidParams(f"div_yield must be >= 0, got {self.div_yield}")
        if not self.sigma > 0:
            raise InvalidParams(f"sigma must be > 0, got {self.sigma}")
        if not self.maturity > 0:
            raise InvalidParams(f"maturity must be > 0, got {self.maturity}")
        if not (isinstance(self.steps, int) and self.steps >= 1):
            raise InvalidParams(f"steps must be a positive integer, got {self.steps}")

    @property
    def dt(self) -> float:
        return self.maturity / self.steps


@dataclass(frozen=True)
class MoveFactors:
    """Per-period stock move factors and discounting, cached once per lattice.

    Invariants: 0 < down < mid < up and mid = e^((rate - div_yield) * dt),
    which is exactly the no-arbitrage condition down < e^((r-y)dt) < up.
    """

    up: float
    mid: float
    down: float
    dt: float
    disc: float  # per-period discount e^(-r*dt)

    def __post_init__(self):
        if not 0 < self.down < self.mid < self.up:
            raise InvalidParams(
                f"need 0 < down < mid < up, got d={self.down}, m={self.mid}, u={self.up}"
            )
        if not self.dt > 0:
            raise InvalidParams(f"dt must be > 0, got {self.dt}")


@dataclass(frozen=True)
class PeriodProbabilities:
    """One period's risk-neutral branch probabilities."""

    q_up: float
    q_mid: float
    q_down: float

    def __post_init__(self):
        if abs(self.q_up + self.q_mid + self.q_down - 1.0) > 1e-15:
            raise InvalidParams("branch probabilities must sum to 1")
        if self.q_up < 0 or self.q_down < 0 or not 0 <= self.q_mid < 1:
            raise InvalidParams(
                f"probabilities out of range: ({self.q_up}, {self.q_mid}, {self.q_down})"
            )


def make_factors(params: MarketParams, style: str = EXPONENTIAL) -> MoveFactors:
    """Derive move factors from market parameters.

    Two parameterizations are supported, both with mid = e^((r-y)*dt):

    * ``exponential``: up/down = mid * e^(+/- sigma*sqrt(dt)), the
      parameterization used for pricing throughout.
    * ``linear``: up/down = mid * (1 +/- sigma*sqrt(dt)), valid only while
      sigma^2 * dt < 1 (otherwise the down factor is nonpositive).
    """
    dt = params.maturity / params.steps
    mid = exp((params.rate - params.div_yield) * dt)
    vol_step = params.sigma * sqrt(dt)
    if style == EXPONENTIAL:
        up = mid * exp(vol_step)
        down = mid * exp(-vol_step)
    elif style == LINEAR:
        if params.sigma**2 * dt >= 1.0:
            raise InvalidParams(
                f"linear factors need sigma^2*dt < 1, got {params.sigma ** 2 * dt}"
            )
        up = mid * (1.0 + vol_step)
        down = mid * (1.0 - vol_step)
    else:
        raise InvalidParams(f"unknown factor style: {style!r}")
    return MoveFactors(up=up, mid=mid, down=down, dt=dt, disc=exp(-params.rate * dt))


def _calibrated(factors: MoveFactors, hazard: float) -> PeriodProbabilities:
    stay = 1.0 - hazard
    spread = factors.up - factors.down
    q_up = (factors.mid - factors.down) / spread * stay
    q_down = (factors.up - factors.mid) / spread * stay
    return PeriodProbabilities(q_up=q_up, q_mid=hazard, q_down=q_down)


def homogeneous_probs(factors: MoveFactors, hazard_k: float) -> PeriodProbabilities:
    """Calibrate one period's probabilities for a path-independent hazard.

    ``hazard_k`` is the conditional probability of expiring this period given
    survival so far; it becomes the middle-branch weight.  A zero hazard
    degrades to the classical two-branch (binomial) probabilities.
    """
    if not 0.0 <= hazard_k < 1.0:
        raise InvalidHazard(f"hazard must lie in [0, 1), got {hazard_k}")
    return _calibrated(factors, hazard_k)


def general_probs(
    factors: MoveFactors, hazard_fn: HazardFn, steps: int
) -> dict[tuple[int, UpDownPath], PeriodProbabilities]:
    """Calibrate a per-node probability schedule for a path-dependent hazard.

    ``hazard_fn(k, path)`` is queried for every period k < steps and every
    up/down path of length k; nodes reached after a middle move are never
    queried because the claim has already expired there.
    """
    if steps > GENERAL_TREE_MAX_STEPS:
        raise TooLarge("general", GENERAL_TREE_MAX_STEPS, steps)
    if steps < 1:
        raise InvalidParams(f"steps must be >= 1, got {steps}")
    schedule: dict[tuple[int, UpDownPath], PeriodProbabilities] = {}
    for k in range(steps):
        for path in product(("d", "u"), repeat=k):
            h = float(hazard_fn(k, path))
            if not 0.0 <= h < 1.0:
                raise InvalidHazard(
                    f"hazard_fn returned {h} at period {k}, path {''.join(path) or '<root>'}"
                )
            schedule[(k, path)] = _calibrated(factors, h)
    return schedule
