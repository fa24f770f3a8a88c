"""Randomized cross-algorithm consistency suite.

Draws seeded uniform parameterizations, prices each with all four
homogeneous pricers, and checks the pairwise discrepancies; a second batch
at small step counts is checked against exhaustive path enumeration.  Cases
are drawn up front from one counter-based stream, so distributing them over
a worker pool cannot change the report.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .expiry import geometric_law
from .model import MarketParams, make_factors
from .payoff import PayoffSpec
from . import pricer

CONSISTENCY_TOL = 1e-9
ENUM_TOL = 1e-12
PROB_SUM_TOL = 1e-10

_PAYOFF_MAKERS = (
    PayoffSpec.call,
    PayoffSpec.put,
    PayoffSpec.zero_strike_call,
    PayoffSpec.log_contract,
)


@dataclass(frozen=True)
class SelftestCase:
    steps: int
    sigma: float
    rate: float
    div_yield: float
    hazard: float
    payoff_kind: str

    def describe(self) -> str:
        return (
            f"N={self.steps} sigma={self.sigma:.6f} r={self.rate:.6f} "
            f"y={self.div_yield:.6f} hazard={self.hazard:.6f} payoff={self.payoff_kind}"
        )


@dataclass
class SelftestReport:
    cases: int
    consistent: int
    max_discrepancy: float
    tol: float
    enum_cases: int
    enum_ok: int
    enum_max_error: float
    enum_tol: float
    prob_sum_max_error: float
    failures: list[str] = field(default_factory=list)
    divergent: str | None = None

    @property
    def passed(self) -> bool:
        return self.consistent == self.cases and self.enum_ok == self.enum_cases

    def lines(self) -> list[str]:
        out = [
            f"consistency: {self.consistent}/{self.cases} within {self.tol:.1e} "
            f"(max discrepancy {self.max_discrepancy:.3e})",
            f"enumeration: {self.enum_ok}/{self.enum_cases} within {self.enum_tol:.1e} "
            f"(max error {self.enum_max_error:.3e})",
            f"path probability sums: max |sum-1| = {self.prob_sum_max_error:.3e}",
        ]
        if self.divergent:
            out.append(f"divergent algorithm: {self.divergent}")
        out.extend(self.failures)
        out.append("PASS" if self.passed else "FAIL")
        return out


def _draw_case(rng: np.random.Generator, max_steps: int) -> SelftestCase:
    return SelftestCase(
        steps=int(rng.integers(1, max_steps + 1)),
        sigma=float(rng.uniform(0.05, 0.6)),
        rate=float(rng.uniform(0.0, 0.12)),
        div_yield=float(rng.uniform(0.0, 0.12)),
        hazard=float(rng.uniform(0.01, 0.9)),
        payoff_kind=_PAYOFF_MAKERS[int(rng.integers(0, len(_PAYOFF_MAKERS)))]().kind,
    )


def _setup(case: SelftestCase):
    params = MarketParams(
        spot=100.0,
        rate=case.rate,
        div_yield=case.div_yield,
        sigma=case.sigma,
        maturity=1.0,
        steps=case.steps,
    )
    factors = make_factors(params)
    law = geometric_law(case.hazard, case.steps)
    payoff = {
        "call": PayoffSpec.call,
        "put": PayoffSpec.put,
        "zsc": PayoffSpec.zero_strike_call,
        "logcontract": PayoffSpec.log_contract,
    }[case.payoff_kind]()
    return params, factors, law, payoff


def _price_all(case: SelftestCase) -> dict[str, float]:
    params, factors, law, payoff = _setup(case)
    return {
        algo: pricer.price_with(algo, params, factors, law, payoff).value
        for algo in pricer.HOMOGENEOUS_ALGOS
    }


def _enum_check(case: SelftestCase) -> tuple[float, float]:
    """(max |pricer - oracle|, |sum of path probabilities - 1|)."""
    params, factors, law, payoff = _setup(case)
    oracle, records = pricer.price_path_enumeration(params, factors, law, payoff)
    prob_err = abs(sum(r.probability for r in records) - 1.0)
    worst = max(
        abs(pricer.price_with(algo, params, factors, law, payoff).value - oracle.value)
        for algo in pricer.HOMOGENEOUS_ALGOS
    )
    return worst, prob_err


def run_selftest(
    cases: int = 1000,
    seed: int = 0,
    workers: int = 1,
    tol: float = CONSISTENCY_TOL,
    enum_tol: float = ENUM_TOL,
) -> SelftestReport:
    rng = np.random.Generator(np.random.Philox(key=seed))
    consistency_cases = [_draw_case(rng, 12) for _ in range(cases)]
    enum_count = max(1, cases // 5)
    enum_cases = [_draw_case(rng, pricer.ENUM_MAX_STEPS) for _ in range(enum_count)]

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            priced = list(pool.map(_price_all, consistency_cases))
            enum_results = list(pool.map(_enum_check, enum_cases))
    else:
        priced = [_price_all(c) for c in consistency_cases]
        enum_results = [_enum_check(c) for c in enum_cases]

    max_disc = 0.0
    consistent = 0
    failures: list[str] = []
    blame: dict[str, int] = {algo: 0 for algo in pricer.HOMOGENEOUS_ALGOS}
    for case, values in zip(consistency_cases, priced):
        worst = 0.0
        bad_pairs = []
        for a, b in combinations(pricer.HOMOGENEOUS_ALGOS, 2):
            diff = abs(values[a] - values[b])
            worst = max(worst, diff)
            if diff > tol:
                bad_pairs.append((a, b))
        max_disc = max(max_disc, worst)
        if bad_pairs:
            for a, b in bad_pairs:
                blame[a] += 1
                blame[b] += 1
            if len(failures) < 10:
                failures.append(f"FAIL consistency {case.describe()} discrepancy={worst:.3e}")
        else:
            consistent += 1

    enum_max = 0.0
    prob_max = 0.0
    enum_ok = 0
    for case, (worst, prob_err) in zip(enum_cases, enum_results):
        enum_max = max(enum_max, worst)
        prob_max = max(prob_max, prob_err)
        if worst <= enum_tol and prob_err <= PROB_SUM_TOL:
            enum_ok += 1
        elif len(failures) < 10:
            failures.append(f"FAIL enumeration {case.describe()} error={worst:.3e}")

    divergent = None
    if consistent < cases:
        top = max(blame.values())
        divergent = ",".join(a for a in pricer.HOMOGENEOUS_ALGOS if blame[a] == top)

    return SelftestReport(
        cases=cases,
        consistent=consistent,
        max_discrepancy=max_disc,
        tol=tol,
        enum_cases=enum_count,
        enum_ok=enum_ok,
        enum_max_error=enum_max,
        enum_tol=enum_tol,
        prob_sum_max_error=prob_max,
        failures=failures,
        divergent=divergent,
    )
