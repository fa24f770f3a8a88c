"""Wall-clock comparison of the three tree pricers as the step count grows.

Timers are environment noise; the exact growth claims live in the
``nodes_touched`` counters of each pricer (quadratic for the recombining
lattice, 3^N for the full trinomial tree, 3*2^N - 2 for the recursion).
run_bench reports mean wall time over identical repetitions with one
warm-up run excluded, single-threaded and CPU-pinned where the platform
allows it.
"""

from __future__ import annotations

import os
import time
from contextlib import contextmanager
from dataclasses import dataclass, replace
from statistics import fmean

from .errors import InvalidParams
from .expiry import law_from_hazards
from .model import MarketParams, make_factors
from .payoff import PayoffSpec
from .pricer import (
    ALGO_RECOMBINING,
    ALGO_RECURSIVE,
    ALGO_TRINOMIAL,
    price_recombining,
    price_recursive_binomial,
    price_trinomial,
)

BENCH_ALGOS = (ALGO_TRINOMIAL, ALGO_RECURSIVE, ALGO_RECOMBINING)

_PRICERS = {
    ALGO_TRINOMIAL: price_trinomial,
    ALGO_RECURSIVE: price_recursive_binomial,
    ALGO_RECOMBINING: price_recombining,
}


@dataclass(frozen=True)
class BenchRow:
    n_steps: int
    algo: str
    mean_ns: float
    reps: int
    nodes_touched: int


@contextmanager
def _pinned():
    try:
        previous = os.sched_getaffinity(0)
        os.sched_setaffinity(0, {min(previous)})
    except (AttributeError, OSError):
        previous = None
    try:
        yield
    finally:
        if previous is not None:
            try:
                os.sched_setaffinity(0, previous)
            except OSError:
                pass


def run_bench(
    params_template: MarketParams,
    payoff: PayoffSpec,
    n_list: list[int],
    reps: int,
    lam: float = 0.1,
) -> list[BenchRow]:
    """Time each algorithm at each step count with identical parameters.

    The expiry intensity ``lam`` sets a constant per-period hazard lam*dt.
    Guard errors from the exponential algorithms propagate unchanged.
    """
    if reps < 1:
        raise InvalidParams(f"reps must be >= 1, got {reps}")
    rows = []
    with _pinned():
        for n in n_list:
            params = replace(params_template, steps=n)
            factors = make_factors(params)
            hazard = lam * factors.dt
            if not 0.0 <= hazard < 1.0:
                raise InvalidParams(f"lambda*dt must be < 1, got {hazard}")
            law = law_from_hazards([hazard] * n)
            for algo in BENCH_ALGOS:
                pricer = _PRICERS[algo]
                result = pricer(params, factors, law, payoff)  # warm-up
                times = []
                for _ in range(reps):
                    t0 = time.perf_counter_ns()
                    pricer(params, factors, law, payoff)
                    times.append(time.perf_counter_ns() - t0)
                rows.append(
                    BenchRow(
                        n_steps=n,
                        algo=algo,
                        mean_ns=fmean(times),
                        reps=reps,
                        nodes_touched=result.nodes_touched,
                    )
                )
    return rows
