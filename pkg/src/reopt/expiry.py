"""Laws of the random expiry over tree periods, and their continuous parents.

An :class:`ExpiryLaw` stores the exact probability mass function of the
expiry period over {0, ..., N}.  Three views of the same law are used
throughout the engine:

* ``pmf[k]``       -- probability of expiring in period k,
* ``survival[k]``  -- probability of surviving to period k (expiry >= k),
* ``hazards[k]``   -- probability of expiring in period k given survival,
                      which is exactly the middle-branch weight of period k.

Laws are exact vectors, never samplers: pricing needs hazards, not draws.
Continuous-time laws on [0, T] are discretized by taking the law of
floor(n * expiry_time) computed from the CDF.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import InvalidHazard, InvalidLaw, InvalidMode, InvalidParams

_PMF_SUM_TOL = 1e-12


@dataclass(frozen=True)
class ExpiryLaw:
    """Distribution of the expiry period over {0, ..., steps}."""

    pmf: tuple[float, ...]
    steps: int

    def __post_init__(self):
        if self.steps < 1:
            raise InvalidLaw(f"steps must be >= 1, got {self.steps}")
        if len(self.pmf) != self.steps + 1:
            raise InvalidLaw(
                f"pmf must have steps+1={self.steps + 1} entries, got {len(self.pmf)}"
            )
        if any(p < 0.0 for p in self.pmf):
            raise InvalidLaw("pmf entries must be nonnegative")
        total = math.fsum(self.pmf)
        if abs(total - 1.0) > _PMF_SUM_TOL:
            raise InvalidLaw(f"pmf must sum to 1 within {_PMF_SUM_TOL}, got {total!r}")
        # Every period up to the final one must be reachable, i.e. survival
        # must stay positive before the last period.  Mass may vanish exactly
        # at the end (pmf[N] == 0), in which case the final period's hazard
        # is 1 and the last step expires surely.
        survival = self.survival
        if any(survival[k] <= 0.0 for k in range(self.steps)):
            first = next(k for k in range(self.steps) if survival[k] <= 0.0)
            raise InvalidLaw(
                f"survival vanishes at period {first} < steps={self.steps}; "
                "all periods before the last must be reachable"
            )

    @classmethod
    def from_pmf(cls, pmf: Iterable[float]) -> "ExpiryLaw":
        values = tuple(float(p) for p in pmf)
        return cls(pmf=values, steps=len(values) - 1)

    @cached_property
    def survival(self) -> tuple[float, ...]:
        """survival[k] = P(expiry >= k) for k = 0..steps."""
        out = [0.0] * (self.steps + 1)
        acc = 0.0
        for k in range(self.steps, -1, -1):
            acc += self.pmf[k]
            out[k] = acc
        return tuple(out)

    @cached_property
    def hazards(self) -> tuple[float, ...]:
        """hazards[k] = P(expiry = k | expiry >= k) for k = 0..steps-1.

        Values lie in [0, 1]; 1.0 can only occur at the final period (when
        pmf[steps] == 0) since earlier periods must keep positive survival.
        """
        surv = self.survival
        return tuple(min(self.pmf[k] / surv[k], 1.0) for k in range(self.steps))

    def to_json(self) -> dict:
        return {"pmf": list(self.pmf)}

    @classmethod
    def from_json(cls, obj: dict) -> "ExpiryLaw":
        if not isinstance(obj, dict) or "pmf" not in obj:
            raise InvalidLaw('expiry law JSON must be an object {"pmf": [...]}')
        return cls.from_pmf(obj["pmf"])


def geometric_law(p: float, steps: int) -> ExpiryLaw:
    """Finite geometric law: constant hazard p per period, remainder at the end.

    pmf[k] = p*(1-p)^k for k < steps and pmf[steps] = (1-p)^steps.
    """
    if not 0.0 < p < 1.0:
        raise InvalidParams(f"geometric parameter must lie in (0, 1), got {p}")
    if steps < 1:
        raise InvalidParams(f"steps must be >= 1, got {steps}")
    pmf = []
    stay = 1.0
    for _ in range(steps):
        pmf.append(p * stay)
        stay *= 1.0 - p
    pmf.append(stay)
    return ExpiryLaw(pmf=tuple(pmf), steps=steps)


def law_from_hazards(hazards: Sequence[float]) -> ExpiryLaw:
    """Build the law whose per-period hazards are the given vector.

    pmf[k] = hazards[k] * prod_{j<k} (1 - hazards[j]); the residual mass
    prod (1 - hazards[j]) lands on the final period.  Inverse of
    :attr:`ExpiryLaw.hazards` up to roundoff.
    """
    hs = [float(h) for h in hazards]
    if len(hs) < 1:
        raise InvalidHazard("need at least one hazard")
    for k, h in enumerate(hs):
        if not 0.0 <= h < 1.0:
            raise InvalidHazard(f"hazard at period {k} must lie in [0, 1), got {h}")
    pmf = []
    stay = 1.0
    for h in hs:
        pmf.append(h * stay)
        stay *= 1.0 - h
    pmf.append(stay)
    return ExpiryLaw(pmf=tuple(pmf), steps=len(hs))


class ContinuousExpiry:
    """A law of the expiry time on [0, horizon]; see concrete subclasses."""

    horizon: float

    def cdf(self, x: float) -> float:
        raise NotImplementedError

    def inverse_cdf(self, v):
        """Map uniforms in [0, 1] to expiry times; accepts scalars or arrays."""
        raise NotImplementedError

    @property
    def has_atom_at_horizon(self) -> bool:
        raise NotImplementedError

    def to_json(self) -> dict:
        raise InvalidParams(f"{type(self).__name__} is not JSON-serializable")

    @staticmethod
    def from_json(obj: dict) -> "ContinuousExpiry":
        kind = obj.get("kind")
        if kind == "exp_atom":
            return ExponentialWithAtom(lam=float(obj["lambda"]), horizon=float(obj["T"]))
        if kind == "point_mass":
            return PointMass(time=float(obj["t"]))
        raise InvalidParams(f"unknown continuous expiry kind: {kind!r}")


@dataclass(frozen=True)
class ExponentialWithAtom(ContinuousExpiry):
    """Exponential(lam) density on (0, T) plus the leftover atom e^(-lam*T) at T.

    This is the continuous law whose floor-discretization is exactly the
    finite geometric law with p = 1 - e^(-lam/n).
    """

    lam: float
    horizon: float

    def __post_init__(self):
        if not self.lam > 0:
            raise InvalidParams(f"lam must be > 0, got {self.lam}")
        if not self.horizon > 0:
            raise InvalidParams(f"horizon must be > 0, got {self.horizon}")

    @property
    def atom_weight(self) -> float:
        return math.exp(-self.lam * self.horizon)

    def cdf(self, x: float) -> float:
        if x < 0:
            return 0.0
        if x >= self.horizon:
            return 1.0
        return -math.expm1(-self.lam * x)

    def inverse_cdf(self, v):
        v_arr = np.asarray(v, dtype=float)
        body = 1.0 - self.atom_weight
        with np.errstate(divide="ignore"):
            draw = -np.log1p(-np.minimum(v_arr, body)) / self.lam
        out = np.where(v_arr < body, draw, self.horizon)
        return float(out) if np.isscalar(v) else out

    @property
    def has_atom_at_horizon(self) -> bool:
        return True

    def to_json(self) -> dict:
        return {"kind": "exp_atom", "lambda": self.lam, "T": self.horizon}


@dataclass(frozen=True)
class PointMass(ContinuousExpiry):
    """Deterministic expiry at a fixed time."""

    time: float

    def __post_init__(self):
        if not self.time > 0:
            raise InvalidParams(f"time must be > 0, got {self.time}")

    @property
    def horizon(self) -> float:  # type: ignore[override]
        return self.time

    def cdf(self, x: float) -> float:
        return 1.0 if x >= self.time else 0.0

    def inverse_cdf(self, v):
        if np.isscalar(v):
            return self.time
        return np.full(np.shape(v), self.time)

    @property
    def has_atom_at_horizon(self) -> bool:
        return True

    def to_json(self) -> dict:
        return {"kind": "point_mass", "t": self.time}


@dataclass(frozen=True)
class GenericDensity(ContinuousExpiry):
    """Atomless law given by a user CDF on [0, horizon]."""

    cdf_fn: Callable[[float], float]
    horizon: float

    def __post_init__(self):
        if not self.horizon > 0:
            raise InvalidParams(f"horizon must be > 0, got {self.horizon}")
        if abs(float(self.cdf_fn(0.0))) > 1e-12:
            raise InvalidParams("CDF must vanish at 0")
        if abs(float(self.cdf_fn(self.horizon)) - 1.0) > 1e-9:
            raise InvalidParams("CDF must reach 1 at the horizon")

    def cdf(self, x: float) -> float:
        if x <= 0:
            return 0.0
        if x >= self.horizon:
            return 1.0
        return min(max(float(self.cdf_fn(x)), 0.0), 1.0)

    def _invert_one(self, v: float) -> float:
        lo, hi = 0.0, self.horizon
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if self.cdf(mid) < v:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    def inverse_cdf(self, v):
        if np.isscalar(v):
            return self._invert_one(float(v))
        flat = np.asarray(v, dtype=float).ravel()
        out = np.array([self._invert_one(x) for x in flat])
        return out.reshape(np.shape(v))

    @property
    def has_atom_at_horizon(self) -> bool:
        return False


FLOOR = "floor"
FLOOR_PLUS_ONE = "floor_plus_one"


def _integral_periods(cont: ContinuousExpiry, n: int) -> int:
    total = n * cont.horizon
    periods = round(total)
    if abs(total - periods) > 1e-9 or periods < 1:
        raise InvalidParams(
            f"n*horizon must be a positive integer, got {total} (n={n}, T={cont.horizon})"
        )
    return periods


def discretize(cont: ContinuousExpiry, n: int, mode: str = FLOOR) -> ExpiryLaw:
    """Exact law of floor(n * expiry) (or floor(n * expiry + 1)) from the CDF.

    ``n`` is the number of periods per unit time.  The floor-plus-one mode
    exists to keep positive mass on the final period for atomless laws; it is
    rejected when the law has an atom at the horizon, where plain floor
    already does so.
    """
    if not (isinstance(n, int) and n >= 1):
        raise InvalidParams(f"n must be a positive integer, got {n}")
    if mode not in (FLOOR, FLOOR_PLUS_ONE):
        raise InvalidMode(f"unknown discretization mode: {mode!r}")
    if mode == FLOOR_PLUS_ONE and cont.has_atom_at_horizon:
        raise InvalidMode("floor_plus_one requires an atomless law (no mass at the horizon)")

    if isinstance(cont, PointMass):
        period = math.floor(n * cont.time)
        if period < 1:
            raise InvalidParams(
                f"n too coarse for point mass at {cont.time}: floor(n*t)={period}"
            )
        pmf = [0.0] * (period + 1)
        pmf[period] = 1.0
        return ExpiryLaw(pmf=tuple(pmf), steps=period)

    periods = _integral_periods(cont, n)
    if isinstance(cont, ExponentialWithAtom):
        # P(floor(n*tau) = k) = e^(-lam*k/n) - e^(-lam*(k+1)/n) for k < N,
        # and the atom weight for k = N: the finite geometric law.
        lam = cont.lam
        pmf = [
            math.exp(-lam * k / n) - math.exp(-lam * (k + 1) / n) for k in range(periods)
        ]
        pmf.append(math.exp(-lam * periods / n))
        return ExpiryLaw(pmf=tuple(pmf), steps=periods)

    cdf_at = [cont.cdf(k / n) for k in range(periods + 1)]
    if mode == FLOOR:
        pmf = [max(0.0, cdf_at[k + 1] - cdf_at[k]) for k in range(periods)]
        pmf.append(max(0.0, 1.0 - cdf_at[periods]))
    else:
        pmf = [0.0]
        pmf += [max(0.0, cdf_at[k] - cdf_at[k - 1]) for k in range(1, periods)]
        pmf.append(max(0.0, 1.0 - cdf_at[periods - 1]))
    return ExpiryLaw(pmf=tuple(pmf), steps=periods)


def discount_mgf(law: ExpiryLaw, y: float, dt: float) -> float:
    """Expected e^(-y * expiry_period * dt) under the law.

    With y the dividend yield this is exactly the factor that turns the spot
    into the random-expiry zero-strike-call price.
    """
    if y < 0:
        raise InvalidParams(f"y must be >= 0, got {y}")
    return math.fsum(p * math.exp(-y * k * dt) for k, p in enumerate(law.pmf))
