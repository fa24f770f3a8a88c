"""HTTP facade over the pricing engine.

Handlers are thin: they convert request models to engine types, call the
engine, and wrap rows.  Engine guard violations map to 409, other engine
rejections to 400; numbers pass through untouched so clients own formatting.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict
from itertools import combinations

import numpy as np
from fastapi import FastAPI, HTTPException

from .. import bench as bench_mod
from .. import selftest as selftest_mod
from ..errors import PricingError, TooLarge
from ..expiry import ExponentialWithAtom
from ..continuum import McConfig, convergence_study
from ..model import make_factors
from ..pricer import HOMOGENEOUS_ALGOS, price_range, price_with
from .schemas import (
    BenchRequest,
    BenchResponse,
    BenchRowModel,
    ConvergeRequest,
    ConvergeResponse,
    ConvergeRow,
    ExpirySpec,
    PayoffFields,
    PriceRequest,
    PriceResponse,
    PriceRow,
    RangeRequest,
    RangeResponse,
    RangeRow,
    SelftestRequest,
    SelftestResponse,
    SweepRequest,
    SweepResponse,
    SweepRow,
)

CONSISTENCY_EXIT_TOL = 1e-8

STANDARD_PAYOFFS = (
    PayoffFields(kind="call"),
    PayoffFields(kind="put"),
    PayoffFields(kind="zsc"),
    PayoffFields(kind="logcontract"),
)


def _engine_call(fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except TooLarge as exc:
        raise HTTPException(status_code=409, detail=str(exc)) from exc
    except PricingError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc


def _config(req) -> dict:
    return req.model_dump(mode="json", by_alias=True)


def create_app() -> FastAPI:
    app = FastAPI(title="reopt", version="0.1.0")

    @app.get("/v1/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.post("/v1/price", response_model=PriceResponse)
    def price(req: PriceRequest) -> PriceResponse:
        def run():
            params = req.market.to_params()
            factors = make_factors(params)
            law = req.expiry.to_law(params)
            payoff = req.payoff.to_spec()
            algos = HOMOGENEOUS_ALGOS if req.algo == "all" else (req.algo,)
            results = [price_with(a, params, factors, law, payoff) for a in algos]
            return results

        results = _engine_call(run)
        rows = [
            PriceRow(algo=r.algo, value=r.value, nodes_touched=r.nodes_touched)
            for r in results
        ]
        discrepancy = None
        if req.algo == "all":
            discrepancy = max(
                (abs(a.value - b.value) for a, b in combinations(results, 2)), default=0.0
            )
        return PriceResponse(config=_config(req), results=rows, max_discrepancy=discrepancy)

    @app.post("/v1/range", response_model=RangeResponse)
    def range_(req: RangeRequest) -> RangeResponse:
        def run():
            params = req.market.to_params()
            factors = make_factors(params)
            return price_range(params, factors, req.payoff.to_spec())

        rng = _engine_call(run)
        rows = [RangeRow(k=k, price=p) for k, p in enumerate(rng.per_k_prices)]
        return RangeResponse(
            config=_config(req),
            results=rows,
            low=rng.low,
            high=rng.high,
            degenerate=rng.degenerate,
        )

    @app.post("/v1/sweep", response_model=SweepResponse)
    def sweep(req: SweepRequest) -> SweepResponse:
        payoffs = tuple(req.payoffs) if req.payoffs else STANDARD_PAYOFFS

        def grid() -> list[float]:
            if req.param == "steps":
                values = np.linspace(req.start, req.stop, req.points)
                ints = sorted({int(round(v)) for v in values})
                return [float(v) for v in ints if v >= 1]
            return [float(v) for v in np.linspace(req.start, req.stop, req.points)]

        def price_point(value: float) -> list[SweepRow]:
            market = req.market
            expiry = req.expiry
            if req.param == "steps":
                market = market.model_copy(update={"steps": int(value)})
            elif req.param == "spot":
                market = market.model_copy(update={"spot": value})
            else:
                expiry = ExpirySpec(kind=req.expiry.kind, lam=value)
            params = market.to_params()
            factors = make_factors(params)
            law = expiry.to_law(params)
            rows = []
            for pf in payoffs:
                result = price_with(req.algo, params, factors, law, pf.to_spec())
                rows.append(SweepRow(param_value=value, payoff=pf.kind, price=result.value))
            return rows

        def run():
            values = grid()
            if req.workers > 1:
                with ThreadPoolExecutor(max_workers=req.workers) as pool:
                    chunks = list(pool.map(price_point, values))
            else:
                chunks = [price_point(v) for v in values]
            return [row for chunk in chunks for row in chunk]

        rows = _engine_call(run)
        return SweepResponse(config=_config(req), results=rows)

    @app.post("/v1/converge", response_model=ConvergeResponse)
    def converge(req: ConvergeRequest) -> ConvergeResponse:
        def run():
            params = req.market.to_params()
            cont = ExponentialWithAtom(lam=req.lam, horizon=params.maturity)
            cfg = McConfig(n_paths=req.n_paths, seed=req.seed, antithetic=req.antithetic)
            return convergence_study(
                params,
                cont,
                req.payoff.to_spec(),
                req.steps_list,
                cfg,
                force=req.force,
                workers=req.workers,
            )

        rows = _engine_call(run)
        return ConvergeResponse(
            config=_config(req),
            results=[ConvergeRow(**asdict(r)) for r in rows],
        )

    @app.post("/v1/bench", response_model=BenchResponse)
    def bench(req: BenchRequest) -> BenchResponse:
        def run():
            return bench_mod.run_bench(
                req.market.to_params(),
                req.payoff.to_spec(),
                list(range(req.n_min, req.n_max + 1)),
                req.reps,
                lam=req.lam,
            )

        rows = _engine_call(run)
        return BenchResponse(
            config=_config(req),
            results=[BenchRowModel(**asdict(r)) for r in rows],
        )

    @app.post("/v1/selftest", response_model=SelftestResponse)
    def selftest(req: SelftestRequest) -> SelftestResponse:
        report = _engine_call(
            selftest_mod.run_selftest, cases=req.cases, seed=req.seed, workers=req.workers
        )
        return SelftestResponse(
            config=_config(req),
            results=asdict(report),
            passed=report.passed,
            lines=report.lines(),
        )

    return app


app = create_app()
