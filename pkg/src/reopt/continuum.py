"""Monte-Carlo pricing of the continuous-time limit and a convergence harness.

The limiting model is geometric Brownian motion stopped at an independent
random horizon: the claim pays e^(-r*tau) * f(S(tau)) where
S(t) = S0 * exp((r - y - sigma^2/2) t + sigma W_t).  Because the horizon is
independent of the Brownian motion, W_tau given tau is exactly
Normal(0, tau), so each path needs one uniform (for tau) and one normal --
no time grid.

Randomness is counter-based: paths are processed in fixed-size blocks and
block j draws from a Philox stream keyed by the seed with its 256-bit
counter offset by j * 2^128.  Per-block moment accumulators are combined in
block order, so results are bit-identical for a given seed no matter how
many workers run the blocks.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidParams, UnboundedPayoff
from .expiry import ContinuousExpiry, discretize
from .model import EXPONENTIAL, MarketParams, make_factors
from .payoff import PayoffSpec, evaluate
from .pricer import price_recombining

_BLOCK = 16384
_CI99 = 2.576


@dataclass(frozen=True)
class McConfig:
    """Simulation inputs.  ``time_grid`` is kept for future path-dependent
    payoffs; the stopped value itself never needs a grid."""

    n_paths: int = 100_000
    time_grid: int = 1
    seed: int = 0
    antithetic: bool = False

    def __post_init__(self):
        if self.n_paths < 1:
            raise InvalidParams(f"n_paths must be >= 1, got {self.n_paths}")
        if self.time_grid < 1:
            raise InvalidParams(f"time_grid must be >= 1, got {self.time_grid}")


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    n_paths: int
    ci99_low: float
    ci99_high: float


@dataclass(frozen=True)
class ConvergenceRow:
    n: int
    tree_price: float
    mc_mean: float
    mc_se: float
    abs_diff: float


def sample_expiry(cont: ContinuousExpiry, rng: np.random.Generator) -> float:
    """One inverse-CDF draw of the expiry time from the given stream."""
    return float(cont.inverse_cdf(rng.random()))


def _block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed, counter=block << 128))


def _block_values(
    params: MarketParams,
    cont: ContinuousExpiry,
    payoff: PayoffSpec,
    cfg: McConfig,
    block: int,
    count: int,
) -> np.ndarray:
    rng = _block_rng(cfg.seed, block)
    u = rng.random(count)
    z = rng.standard_normal(count)
    drift = params.rate - params.div_yield - 0.5 * params.sigma**2

    def discounted(uu: np.ndarray, zz: np.ndarray) -> np.ndarray:
        tau = np.asarray(cont.inverse_cdf(uu), dtype=float)
        stock = params.spot * np.exp(drift * tau + params.sigma * np.sqrt(tau) * zz)
        return np.exp(-params.rate * tau) * evaluate(payoff, stock)

    if cfg.antithetic:
        return 0.5 * (discounted(u, z) + discounted(1.0 - u, -z))
    return discounted(u, z)


def _combine(n1, m1, s1, n2, m2, s2):
    # Chan et al. pairwise update of (count, mean, sum of squared deviations).
    if n2 == 0:
        return n1, m1, s1
    n = n1 + n2
    delta = m2 - m1
    return n, m1 + delta * n2 / n, s1 + s2 + delta * delta * n1 * n2 / n


def mc_price(
    params: MarketParams,
    cont: ContinuousExpiry,
    payoff: PayoffSpec,
    cfg: McConfig,
    force: bool = False,
    workers: int = 1,
) -> McEstimate:
    """Estimate the stopped-GBM price of the payoff.

    The convergence guarantee backing this estimator assumes a bounded
    payoff; unbounded payoffs (call, zero-strike call, log contract) are
    refused unless ``force`` is set.  ``params.steps`` and
    ``params.maturity`` are unused -- the expiry law carries the horizon.
    """
    if not payoff.is_bounded and not force:
        raise UnboundedPayoff(
            f"payoff {payoff.kind!r} is not bounded; pass force=True to price anyway"
        )
    units = cfg.n_paths
    if cfg.antithetic:
        units = (cfg.n_paths + 1) // 2
    n_blocks = (units + _BLOCK - 1) // _BLOCK
    counts = [min(_BLOCK, units - j * _BLOCK) for j in range(n_blocks)]

    def stats(j: int):
        vals = _block_values(params, cont, payoff, cfg, j, counts[j])
        m = float(np.mean(vals))
        return len(vals), m, float(np.sum((vals - m) ** 2))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            block_stats = list(pool.map(stats, range(n_blocks)))
    else:
        block_stats = [stats(j) for j in range(n_blocks)]

    n, mean, ssq = 0, 0.0, 0.0
    for bn, bm, bs in block_stats:
        n, mean, ssq = _combine(n, mean, ssq, bn, bm, bs)

    se = math.sqrt(ssq / (n - 1) / n) if n > 1 else 0.0
    simulated = n * (2 if cfg.antithetic else 1)
    return McEstimate(
        mean=mean,
        std_error=se,
        n_paths=simulated,
        ci99_low=mean - _CI99 * se,
        ci99_high=mean + _CI99 * se,
    )


def convergence_study(
    params: MarketParams,
    cont: ContinuousExpiry,
    payoff: PayoffSpec,
    steps_list: list[int],
    cfg: McConfig = McConfig(n_paths=1_000_000),
    force: bool = False,
    style: str = EXPONENTIAL,
    workers: int = 1,
) -> list[ConvergenceRow]:
    """Tree prices against one shared Monte-Carlo estimate of the limit.

    Each entry of ``steps_list`` is a number of periods per unit time; the
    tree for n uses the floor-discretized law of the continuous expiry and
    the recombining pricer.  Rows report the absolute gap to the MC mean.
    """
    if sorted(steps_list) != list(steps_list):
        raise InvalidParams("steps_list must be sorted ascending")
    estimate = mc_price(params, cont, payoff, cfg, force=force, workers=workers)
    rows = []
    for n in steps_list:
        law = discretize(cont, n)
        tree_params = replace(params, steps=law.steps, maturity=law.steps / n)
        factors = make_factors(tree_params, style)
        tree_price = price_recombining(tree_params, factors, law, payoff).value
        rows.append(
            ConvergenceRow(
                n=n,
                tree_price=tree_price,
                mc_mean=estimate.mean,
                mc_se=estimate.std_error,
                abs_diff=abs(tree_price - estimate.mean),
            )
        )
    return rows
