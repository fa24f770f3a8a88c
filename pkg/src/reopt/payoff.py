"""Terminal payoff functions f(S) and their evaluation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import InvalidParams, InvalidPrice

CALL = "call"
PUT = "put"
ZSC = "zsc"
LOG_CONTRACT = "logcontract"
CUSTOM = "custom"

TABLE_KINDS = (CALL, PUT, ZSC, LOG_CONTRACT)


@dataclass(frozen=True)
class PayoffSpec:
    """A terminal payoff f(S) on (0, inf).

    Use the constructors: :meth:`call`, :meth:`put`, :meth:`zero_strike_call`,
    :meth:`log_contract`, :meth:`custom`.
    """

    kind: str
    strike: Optional[float] = None
    reference: Optional[float] = None
    fn: Optional[Callable[[float], float]] = field(default=None, compare=False)
    bounded: bool = False

    def __post_init__(self):
        if self.kind in (CALL, PUT):
            if self.strike is None or not self.strike > 0:
                raise InvalidParams(f"strike must be > 0, got {self.strike}")
        elif self.kind == LOG_CONTRACT:
            if self.reference is None or not self.reference > 0:
                raise InvalidParams(f"reference must be > 0, got {self.reference}")
        elif self.kind == CUSTOM:
            if self.fn is None:
                raise InvalidParams("custom payoff needs a function")
        elif self.kind != ZSC:
            raise InvalidParams(f"unknown payoff kind: {self.kind!r}")

    @classmethod
    def call(cls, strike: float = 100.0) -> "PayoffSpec":
        return cls(kind=CALL, strike=strike)

    @classmethod
    def put(cls, strike: float = 100.0) -> "PayoffSpec":
        return cls(kind=PUT, strike=strike, bounded=True)

    @classmethod
    def zero_strike_call(cls) -> "PayoffSpec":
        return cls(kind=ZSC)

    @classmethod
    def log_contract(cls, reference: float = 100.0) -> "PayoffSpec":
        return cls(kind=LOG_CONTRACT, reference=reference)

    @classmethod
    def custom(cls, fn: Callable[[float], float], bounded: bool = False) -> "PayoffSpec":
        return cls(kind=CUSTOM, fn=fn, bounded=bounded)

    @property
    def is_bounded(self) -> bool:
        """Whether f is bounded on (0, inf).  A put is capped by its strike;
        calls, the zero-strike call, and the log contract are not."""
        return self.bounded

    def as_scalar_fn(self) -> Callable[[float], float]:
        """A plain float->float closure for hot scalar loops.

        Assumes prices are positive and finite, which holds on any lattice
        built from valid factors; custom functions keep their finiteness check.
        """
        if self.kind == CALL:
            strike = self.strike
            return lambda s: s - strike if s > strike else 0.0
        if self.kind == PUT:
            strike = self.strike
            return lambda s: strike - s if s < strike else 0.0
        if self.kind == ZSC:
            return lambda s: s
        if self.kind == LOG_CONTRACT:
            ref = self.reference
            return lambda s: math.log(s / ref)
        user = self.fn

        def wrapped(s: float) -> float:
            v = float(user(s))
            if not math.isfinite(v):
                raise InvalidPrice(f"custom payoff returned non-finite value {v} at S={s}")
            return v

        return wrapped


def evaluate(spec: PayoffSpec, price):
    """Evaluate f at a price or an array of prices (all must be > 0)."""
    scalar = np.isscalar(price) or getattr(price, "ndim", None) == 0
    s = np.asarray(price, dtype=float)
    if np.any(s <= 0.0):
        raise InvalidPrice("payoffs are defined for prices > 0 only")
    out = eval_on_lattice(spec, s)
    if spec.kind != CUSTOM and not np.all(np.isfinite(out)):
        raise InvalidPrice(f"payoff {spec.kind!r} produced non-finite values")
    return float(out) if scalar else out


def eval_on_lattice(spec: PayoffSpec, s: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
    """Array evaluation for lattice internals.

    Skips the positivity check (lattice prices are positive by construction)
    and the finiteness sweep for the closed-form kinds, which cannot produce
    non-finite values at finite positive prices; custom functions keep their
    per-call guard.  ``out`` lets hot loops reuse a workspace buffer.
    """
    if out is None:
        out = np.empty(np.shape(s))
    if spec.kind == CALL:
        np.subtract(s, spec.strike, out=out)
        np.maximum(out, 0.0, out=out)
    elif spec.kind == PUT:
        np.subtract(spec.strike, s, out=out)
        np.maximum(out, 0.0, out=out)
    elif spec.kind == ZSC:
        np.copyto(out, s)
    elif spec.kind == LOG_CONTRACT:
        np.divide(s, spec.reference, out=out)
        np.log(out, out=out)
    else:
        fn = spec.fn
        flat = out.reshape(-1)
        for i, x in enumerate(np.ravel(s)):
            flat[i] = float(fn(x))
        if not np.all(np.isfinite(out)):
            raise InvalidPrice("custom payoff produced non-finite values")
    return out
