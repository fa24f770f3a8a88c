"""Request/response models for the pricing service.

Defaults mirror the engine's standard parameter set: a one-year tree with 20
periods on a 100 spot, 30% volatility, 10% rate, 5% dividend yield, and an
expiry intensity of 10%.
"""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..errors import InvalidLaw, InvalidParams
from ..expiry import ExpiryLaw, ExponentialWithAtom, discretize, law_from_hazards
from ..model import MarketParams
from ..payoff import PayoffSpec


class MarketFields(BaseModel):
    model_config = ConfigDict(extra="forbid")

    spot: float = 100.0
    rate: float = 0.10
    div: float = 0.05
    sigma: float = 0.30
    maturity: float = 1.0
    steps: int = 20

    def to_params(self) -> MarketParams:
        return MarketParams(
            spot=self.spot,
            rate=self.rate,
            div_yield=self.div,
            sigma=self.sigma,
            maturity=self.maturity,
            steps=self.steps,
        )


class ExpirySpec(BaseModel):
    """Exactly one expiry specification.

    * ``intensity``: constant per-period hazard lambda*dt,
    * ``exp_atom``: floor-discretized exponential law with an atom at the horizon,
    * ``pmf``: explicit probability mass function over periods 0..steps.
    """

    model_config = ConfigDict(populate_by_name=True, extra="forbid")

    kind: Literal["intensity", "exp_atom", "pmf"] = "intensity"
    lam: Optional[float] = Field(default=None, alias="lambda")
    pmf: Optional[list[float]] = None

    @model_validator(mode="after")
    def _one_spec(self) -> "ExpirySpec":
        if self.kind == "pmf":
            if self.pmf is None or self.lam is not None:
                raise ValueError("pmf expiry needs 'pmf' and no 'lambda'")
        else:
            if self.pmf is not None:
                raise ValueError(f"{self.kind} expiry does not take 'pmf'")
            if self.lam is None:
                self.lam = 0.10
        return self

    def to_law(self, params: MarketParams) -> ExpiryLaw:
        if self.kind == "pmf":
            law = ExpiryLaw.from_pmf(self.pmf)
            if law.steps != params.steps:
                raise InvalidLaw(
                    f"pmf defines {law.steps} steps but the tree has {params.steps}"
                )
            return law
        if self.kind == "intensity":
            hazard = self.lam * params.dt
            if not 0.0 <= hazard < 1.0:
                raise InvalidParams(f"lambda*dt must be < 1, got {hazard}")
            return law_from_hazards([hazard] * params.steps)
        per_unit = params.steps / params.maturity
        n = round(per_unit)
        if abs(per_unit - n) > 1e-9 or n < 1:
            raise InvalidParams(
                f"exp_atom expiry needs steps/maturity to be a positive integer, got {per_unit}"
            )
        cont = ExponentialWithAtom(lam=self.lam, horizon=params.maturity)
        return discretize(cont, n)


class PayoffFields(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["call", "put", "zsc", "logcontract"] = "call"
    strike: float = 100.0
    reference: float = 100.0

    def to_spec(self) -> PayoffSpec:
        if self.kind == "call":
            return PayoffSpec.call(self.strike)
        if self.kind == "put":
            return PayoffSpec.put(self.strike)
        if self.kind == "zsc":
            return PayoffSpec.zero_strike_call()
        return PayoffSpec.log_contract(self.reference)


class PriceRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    market: MarketFields = MarketFields()
    expiry: ExpirySpec = ExpirySpec()
    payoff: PayoffFields = PayoffFields()
    algo: Literal["tri", "recursive", "reco", "sum", "enum", "all"] = "reco"
    seed: int = 0


class PriceRow(BaseModel):
    algo: str
    value: float
    nodes_touched: int


class PriceResponse(BaseModel):
    config: dict
    results: list[PriceRow]
    max_discrepancy: Optional[float] = None


class RangeRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    market: MarketFields = MarketFields()
    payoff: PayoffFields = PayoffFields()
    seed: int = 0


class RangeRow(BaseModel):
    k: int
    price: float


class RangeResponse(BaseModel):
    config: dict
    results: list[RangeRow]
    low: float
    high: float
    degenerate: bool


class SweepRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    market: MarketFields = MarketFields()
    expiry: ExpirySpec = ExpirySpec()
    payoffs: Optional[list[PayoffFields]] = None  # None = the standard four
    param: Literal["steps", "spot", "lambda"] = "steps"
    start: float = 1
    stop: float = 50
    points: int = 50
    algo: Literal["tri", "recursive", "reco", "sum", "enum"] = "reco"
    seed: int = 0
    workers: int = 1


class SweepRow(BaseModel):
    param_value: float
    payoff: str
    price: float


class SweepResponse(BaseModel):
    config: dict
    results: list[SweepRow]


class ConvergeRequest(BaseModel):
    model_config = ConfigDict(populate_by_name=True, extra="forbid")

    market: MarketFields = MarketFields()
    lam: float = Field(default=0.10, alias="lambda")
    payoff: PayoffFields = PayoffFields(kind="put")
    steps_list: list[int] = [16, 32, 64, 128, 256, 512, 1024]
    n_paths: int = 1_000_000
    antithetic: bool = False
    force: bool = False
    seed: int = 0
    workers: int = 1


class ConvergeRow(BaseModel):
    n: int
    tree_price: float
    mc_mean: float
    mc_se: float
    abs_diff: float


class ConvergeResponse(BaseModel):
    config: dict
    results: list[ConvergeRow]


class BenchRequest(BaseModel):
    model_config = ConfigDict(populate_by_name=True, extra="forbid")

    market: MarketFields = MarketFields()
    payoff: PayoffFields = PayoffFields()
    lam: float = Field(default=0.10, alias="lambda")
    n_min: int = 1
    n_max: int = 10
    reps: int = 10
    seed: int = 0


class BenchRowModel(BaseModel):
    n_steps: int
    algo: str
    mean_ns: float
    reps: int
    nodes_touched: int


class BenchResponse(BaseModel):
    config: dict
    results: list[BenchRowModel]


class SelftestRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    cases: int = 1000
    seed: int = 0
    workers: int = 1


class SelftestResponse(BaseModel):
    config: dict
    results: dict
    passed: bool
    lines: list[str]
