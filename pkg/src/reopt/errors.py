"""Typed errors raised by the pricing engine."""


class PricingError(Exception):
    """Base class for all engine errors."""


class InvalidParams(PricingError):
    """Market, factor, or configuration inputs violate a precondition."""


class InvalidHazard(PricingError):
    """A per-period expiry probability lies outside [0, 1)."""


class InvalidLaw(PricingError):
    """An expiry law is malformed or inconsistent with the tree."""


class InvalidMode(PricingError):
    """A discretization mode is incompatible with the continuous law."""


class InvalidPrice(PricingError):
    """A payoff was evaluated at a nonpositive price or returned a non-finite value."""


class UnboundedPayoff(PricingError):
    """Monte-Carlo pricing of an unbounded payoff requires an explicit force flag."""


class TooLarge(PricingError):
    """A step count exceeds an algorithm's memory or recursion guard.

    Raised before any allocation is attempted; carries the guard name so
    callers can report which limit was hit.
    """

    def __init__(self, guard: str, limit: int, requested: int):
        self.guard = guard
        self.limit = limit
        self.requested = requested
        super().__init__(f"{guard} guard: N={requested} exceeds N<={limit}")
