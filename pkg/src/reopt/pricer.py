"""Pricing of random-expiry options on the trinomial lattice.

A random-expiry claim pays f(S) the first time the middle branch is taken,
or f(S_N) at the final period if it never is.  Four production pricers share
the same risk-neutral measure and must agree to within roundoff:

* :func:`price_trinomial`      -- full trinomial tree; middle nodes and their
  descendants are pre-filled with the early payoff carried at interest to the
  final layer, then standard backward induction runs over all 3^N states.
* :func:`price_recursive_binomial` -- non-recombining up/down recursion where
  the middle branch is virtual: each step mixes the continuation values with
  the immediate payoff, V = b*q_d*V_down + q_m*f(S) + b*q_u*V_up.
* :func:`price_recombining`    -- the same modified induction on a recombining
  up/down lattice; storage grows linearly per level instead of exponentially.
* :func:`price_conditioning_sum` -- sums fixed-expiry binomial prices over the
  expiry law: V = sum_k disc^k * E[f(S_k) | expiry=k] * pmf[k].

:func:`price_path_enumeration` is the brute-force oracle over all 3^N paths,
and :func:`price_general_tree` handles path-dependent hazards on the
non-recombining tree.  Backward-induction sums are always taken in the fixed
order (down, middle, up) so results do not depend on scheduling.
"""

from __future__ import annotations

import math
import threading
import time
from dataclasses import dataclass

import numpy as np

from .errors import InvalidHazard, InvalidLaw, InvalidParams, InvalidPrice, TooLarge
from .expiry import ExpiryLaw, discount_mgf
from .model import HazardFn, MarketParams, MoveFactors
from .payoff import PayoffSpec, eval_on_lattice

ALGO_TRINOMIAL = "tri"
ALGO_RECURSIVE = "recursive"
ALGO_RECOMBINING = "reco"
ALGO_SUM = "sum"
ALGO_ENUM = "enum"
ALGO_GENERAL = "general"

HOMOGENEOUS_ALGOS = (ALGO_TRINOMIAL, ALGO_RECURSIVE, ALGO_RECOMBINING, ALGO_SUM)

TRINOMIAL_MAX_STEPS = 16
RECURSIVE_MAX_STEPS = 25
ENUM_MAX_STEPS = 8
GENERAL_MAX_STEPS = 20


@dataclass(frozen=True)
class PriceResult:
    """A price plus run diagnostics (deterministic except for wall_time)."""

    value: float
    algo: str
    nodes_touched: int
    wall_time: int  # nanoseconds

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise InvalidPrice(f"price is not finite: {self.value}")


@dataclass(frozen=True)
class PathRecord:
    """One full trinomial path: moves are 'u'/'m'/'d', expiry_period is the
    first middle move (or N if there is none)."""

    moves: tuple[str, ...]
    probability: float
    expiry_period: int
    discounted_payoff: float


@dataclass(frozen=True)
class PriceRange:
    """Hull of no-arbitrage prices over all admissible expiry laws.

    The attainable set is the open interval between the extreme fixed-expiry
    prices; the closed hull is reported with a ``degenerate`` flag for the
    case where all fixed-expiry prices coincide and the interval is empty.
    """

    low: float
    high: float
    per_k_prices: tuple[float, ...]
    degenerate: bool


# Reusable per-thread workspaces for the full-tree pricer: allocating two
# terminal-layer buffers per call costs more in page faults than the pricing
# itself at moderate N.  Buffers above the cap are not retained.
_WORKSPACE_CACHE_MAX = 3**12
_workspaces = threading.local()


def _tree_workspaces(size: int) -> tuple[np.ndarray, np.ndarray]:
    if size > _WORKSPACE_CACHE_MAX:
        return np.empty(size), np.empty(size)
    cached = getattr(_workspaces, "bufs", None)
    if cached is None or cached[0].size < size:
        cached = (np.empty(_WORKSPACE_CACHE_MAX), np.empty(_WORKSPACE_CACHE_MAX))
        _workspaces.bufs = cached
    return cached


def _check_consistent(params: MarketParams, factors: MoveFactors) -> None:
    if abs(factors.dt - params.dt) > 1e-12 * max(1.0, params.dt):
        raise InvalidParams(
            f"factors.dt={factors.dt} inconsistent with maturity/steps={params.dt}"
        )


def _schedule(factors: MoveFactors, law: ExpiryLaw):
    """Per-period (q_up, q_mid, q_down) arrays from the law's hazards.

    Accepts the boundary hazard 1.0 at the final period (a law with no mass
    on the last index), where the step degenerates to (0, 1, 0).
    """
    h = np.asarray(law.hazards, dtype=float)
    stay = 1.0 - h
    spread = factors.up - factors.down
    q_up = (factors.mid - factors.down) / spread * stay
    q_down = (factors.up - factors.mid) / spread * stay
    return q_up, h, q_down


def _binomial_probs(factors: MoveFactors) -> tuple[float, float]:
    spread = factors.up - factors.down
    return (factors.mid - factors.down) / spread, (factors.up - factors.mid) / spread


def price_trinomial(
    params: MarketParams, factors: MoveFactors, law: ExpiryLaw, payoff: PayoffSpec
) -> PriceResult:
    """Full trinomial tree with pre-filled early-expiry nodes (heap layout).

    The tree is laid out as a ternary heap: children of node i sit at 3i+1
    (down), 3i+2 (middle), 3i+3 (up).  Every terminal descendant of a node
    whose path first took the middle branch in period k holds the early
    payoff with carried interest, f(S_k) / b^(N-k); remaining terminal nodes
    hold f(S_N).  Standard backward induction then prices the root.
    """
    n = params.steps
    if n > TRINOMIAL_MAX_STEPS:
        raise TooLarge("trinomial", TRINOMIAL_MAX_STEPS, n)
    if law.steps != n:
        raise InvalidLaw(f"law has {law.steps} steps, tree has {n}")
    _check_consistent(params, factors)
    t0 = time.perf_counter_ns()
    q_up, q_mid, q_down = _schedule(factors, law)
    b = factors.disc
    size = 3**n
    # Two ping-pong workspaces sized to the terminal layer; every array op
    # below writes into one of them.
    work_a, work_b = _tree_workspaces(size)

    # Stock prices level by level (children of local node t at 3t, 3t+1,
    # 3t+2 for down/mid/up); only the terminal level is needed afterwards.
    cur, alt = work_a, work_b
    cur[0] = params.spot
    m = 1
    for _ in range(n):
        level, nxt = cur[:m], alt[: 3 * m]
        np.multiply(level, factors.down, out=nxt[0::3])
        np.multiply(level, factors.mid, out=nxt[1::3])
        np.multiply(level, factors.up, out=nxt[2::3])
        cur, alt = alt, cur
        m *= 3
    terminal_stock = cur[:size]

    # Terminal layer: payoff of the terminal price everywhere, then overwrite
    # each first-middle subtree's block of 3^(N-k) descendants with the early
    # payoff carried at interest.  The blocks partition exactly the terminal
    # nodes whose path took a middle branch, so the overwrite order is free.
    option_buf, alt = alt, cur
    option = option_buf[:size]
    eval_on_lattice(payoff, terminal_stock, out=option)
    frontier_idx = np.array([0], dtype=np.intp)  # level-local up/down indices
    frontier_price = np.array([params.spot])
    for k in range(1, n + 1):
        block = 3 ** (n - k)
        mid_local = 3 * frontier_idx + 1
        values = eval_on_lattice(payoff, frontier_price)
        values /= b ** (n - k + 1)
        option.reshape(3**k, block)[mid_local, :] = values[:, None]
        if k < n:
            count = frontier_idx.shape[0]
            new_idx = np.empty(2 * count, dtype=np.intp)
            scaled = frontier_idx * 3
            new_idx[0::2] = scaled  # down child
            scaled += 2
            new_idx[1::2] = scaled  # up child
            new_price = np.empty(2 * count)
            np.multiply(frontier_price, factors.down, out=new_price[0::2])
            np.multiply(frontier_price, factors.up, out=new_price[1::2])
            frontier_idx, frontier_price = new_idx, new_price

    weights = np.empty(3)
    cur_buf, alt_buf = option_buf, alt
    for k in range(n - 1, -1, -1):
        m = 3**k
        weights[0] = b * q_down[k]
        weights[1] = b * q_mid[k]
        weights[2] = b * q_up[k]
        np.matmul(cur_buf[: 3 * m].reshape(m, 3), weights, out=alt_buf[:m])
        cur_buf, alt_buf = alt_buf, cur_buf

    nodes = (3 ** (n + 1) - 1) // 2
    return PriceResult(
        value=float(cur_buf[0]),
        algo=ALGO_TRINOMIAL,
        nodes_touched=nodes,
        wall_time=time.perf_counter_ns() - t0,
    )


def price_recursive_binomial(
    params: MarketParams, factors: MoveFactors, law: ExpiryLaw, payoff: PayoffSpec
) -> PriceResult:
    """Non-recombining binomial recursion with a virtual middle branch.

    Each node evaluates V = b*q_d*V_down + q_m*f(S) + b*q_u*V_up with base
    case f(S) at the final period.  Work is exponential: 2^(N+1)-1 calls plus
    one virtual middle node per internal call, 3*2^N - 2 touches in total.
    """
    n = params.steps
    if n > RECURSIVE_MAX_STEPS:
        raise TooLarge("recursive", RECURSIVE_MAX_STEPS, n)
    if law.steps != n:
        raise InvalidLaw(f"law has {law.steps} steps, tree has {n}")
    _check_consistent(params, factors)
    t0 = time.perf_counter_ns()
    q_up, q_mid, q_down = _schedule(factors, law)
    bqu = (factors.disc * q_up).tolist()
    qm = q_mid.tolist()
    bqd = (factors.disc * q_down).tolist()
    up, down = factors.up, factors.down
    f = payoff.as_scalar_fn()
    touched = 0

    def value(s: float, k: int) -> float:
        nonlocal touched
        touched += 1
        if k == n:
            return f(s)
        touched += 1  # virtual middle node
        return bqd[k] * value(s * down, k + 1) + qm[k] * f(s) + bqu[k] * value(s * up, k + 1)

    root = value(params.spot, 0)
    return PriceResult(
        value=float(root),
        algo=ALGO_RECURSIVE,
        nodes_touched=touched,
        wall_time=time.perf_counter_ns() - t0,
    )


def price_recombining(
    params: MarketParams, factors: MoveFactors, law: ExpiryLaw, payoff: PayoffSpec
) -> PriceResult:
    """Recombining binomial lattice with the same modified induction.

    Level k starts at flat offset k*(k+1)/2 and node i within it counts up
    moves, so the whole tree needs N*(N+3)/2 + 1 values: linear growth per
    level instead of the exponential trees above.
    """
    n = params.steps
    if law.steps != n:
        raise InvalidLaw(f"law has {law.steps} steps, tree has {n}")
    _check_consistent(params, factors)
    t0 = time.perf_counter_ns()
    q_up, q_mid, q_down = _schedule(factors, law)
    b = factors.disc
    spot, up, down = params.spot, factors.up, factors.down

    size = n * (n + 3) // 2 + 1
    tree = np.empty(size)
    i = np.arange(n + 1)
    tree[n * (n + 1) // 2 :] = eval_on_lattice(payoff, spot * up**i * down ** (n - i))
    for k in range(n - 1, -1, -1):
        base = k * (k + 1) // 2
        child = base + k + 1
        i = np.arange(k + 1)
        stock = spot * up**i * down ** (k - i)
        tree[base : base + k + 1] = (
            b * q_down[k] * tree[child : child + k + 1]
            + q_mid[k] * eval_on_lattice(payoff, stock)
            + b * q_up[k] * tree[child + 1 : child + k + 2]
        )
    return PriceResult(
        value=float(tree[0]),
        algo=ALGO_RECOMBINING,
        nodes_touched=size,
        wall_time=time.perf_counter_ns() - t0,
    )


def fixed_expiry_prices(
    params: MarketParams, factors: MoveFactors, payoff: PayoffSpec
) -> np.ndarray:
    """disc^k * E[f(S_k) | expiry = k] for k = 0..N.

    Conditional on expiring at k the stock has taken k independent up/down
    moves with the binomial risk-neutral weights, so each entry is a plain
    k-step binomial price of f.
    """
    _check_consistent(params, factors)
    n = params.steps
    p_up, p_down = _binomial_probs(factors)
    b = factors.disc
    out = np.empty(n + 1)
    for k in range(n + 1):
        i = np.arange(k + 1)
        values = eval_on_lattice(payoff, params.spot * factors.up**i * factors.down ** (k - i))
        values = np.atleast_1d(values)
        for _ in range(k):
            values = p_down * values[:-1] + p_up * values[1:]
        out[k] = b**k * values[0]
    return out


def price_conditioning_sum(
    params: MarketParams, factors: MoveFactors, law: ExpiryLaw, payoff: PayoffSpec
) -> PriceResult:
    """Mixture of fixed-expiry binomial prices weighted by the expiry law."""
    n = params.steps
    if law.steps != n:
        raise InvalidLaw(f"law has {law.steps} steps, tree has {n}")
    t0 = time.perf_counter_ns()
    per_k = fixed_expiry_prices(params, factors, payoff)
    value = float(np.dot(np.asarray(law.pmf), per_k))
    nodes = (n + 1) * (n + 2) * (n + 3) // 6  # sum of binomial tree sizes
    return PriceResult(
        value=value,
        algo=ALGO_SUM,
        nodes_touched=nodes,
        wall_time=time.perf_counter_ns() - t0,
    )


def price_path_enumeration(
    params: MarketParams, factors: MoveFactors, law: ExpiryLaw, payoff: PayoffSpec
) -> tuple[PriceResult, list[PathRecord]]:
    """Brute-force oracle: every one of the 3^N paths, priced individually.

    Kept deliberately independent of the backward-induction code paths; the
    price is the exact (fsum) probability-weighted sum of discounted payoffs.
    """
    n = params.steps
    if n > ENUM_MAX_STEPS:
        raise TooLarge("enumeration", ENUM_MAX_STEPS, n)
    if law.steps != n:
        raise InvalidLaw(f"law has {law.steps} steps, tree has {n}")
    _check_consistent(params, factors)
    t0 = time.perf_counter_ns()
    q_up, q_mid, q_down = _schedule(factors, law)
    rate, dt = params.rate, factors.dt
    f = payoff.as_scalar_fn()
    branches = [
        (("d", float(q_down[k]), factors.down), ("m", float(q_mid[k]), factors.mid),
         ("u", float(q_up[k]), factors.up))
        for k in range(n)
    ]
    records: list[PathRecord] = []
    moves: list[str] = []

    def walk(k: int, prob: float, stock: float, tau: int | None, stock_at_tau: float):
        if k == n:
            period = n if tau is None else tau
            paid_on = stock if tau is None else stock_at_tau
            dp = math.exp(-rate * period * dt) * f(paid_on)
            records.append(PathRecord(tuple(moves), prob, period, dp))
            return
        for name, q, fac in branches[k]:
            moves.append(name)
            if tau is None and name == "m":
                walk(k + 1, prob * q, stock * fac, k, stock)
            else:
                walk(k + 1, prob * q, stock * fac, tau, stock_at_tau)
            moves.pop()

    walk(0, 1.0, params.spot, None, params.spot)
    total_prob = math.fsum(r.probability for r in records)
    if abs(total_prob - 1.0) > 1e-10:
        raise InvalidLaw(f"path probabilities sum to {total_prob!r}, not 1")
    value = math.fsum(r.probability * r.discounted_payoff for r in records)
    result = PriceResult(
        value=value,
        algo=ALGO_ENUM,
        nodes_touched=3**n,
        wall_time=time.perf_counter_ns() - t0,
    )
    return result, records


def price_zsc_closed_form(params: MarketParams, law: ExpiryLaw) -> float:
    """Closed form for the random-expiry zero-strike call: spot times the
    expected dividend discount e^(-y * expiry * dt)."""
    if law.steps != params.steps:
        raise InvalidLaw(f"law has {law.steps} steps, tree has {params.steps}")
    return params.spot * discount_mgf(law, params.div_yield, params.dt)


def price_range(
    params: MarketParams, factors: MoveFactors, payoff: PayoffSpec
) -> PriceRange:
    """Hull of prices attainable by varying the expiry law.

    Any admissible law mixes the fixed-expiry prices, so every price lies
    between their minimum and maximum; the extremes themselves are limits of
    near-degenerate laws rather than attained values.
    """
    per_k = fixed_expiry_prices(params, factors, payoff)
    low = float(per_k.min())
    high = float(per_k.max())
    degenerate = (high - low) <= 1e-10 * max(1.0, abs(low), abs(high))
    return PriceRange(
        low=low, high=high, per_k_prices=tuple(float(v) for v in per_k), degenerate=degenerate
    )


def price_general_tree(
    params: MarketParams, factors: MoveFactors, hazard_fn: HazardFn, payoff: PayoffSpec
) -> PriceResult:
    """Modified induction on the non-recombining tree with per-node hazards.

    ``hazard_fn(k, path)`` supplies the middle-branch weight at each up/down
    node; nodes after a middle move are never visited.  With a constant
    hazard this reduces exactly to :func:`price_recursive_binomial`.
    """
    n = params.steps
    if n > GENERAL_MAX_STEPS:
        raise TooLarge("general", GENERAL_MAX_STEPS, n)
    _check_consistent(params, factors)
    t0 = time.perf_counter_ns()
    b = factors.disc
    up, down = factors.up, factors.down
    p_up, p_down = _binomial_probs(factors)
    f = payoff.as_scalar_fn()
    touched = 0

    def value(s: float, k: int, path: tuple[str, ...]) -> float:
        nonlocal touched
        touched += 1
        if k == n:
            return f(s)
        h = float(hazard_fn(k, path))
        if not 0.0 <= h < 1.0:
            raise InvalidHazard(
                f"hazard_fn returned {h} at period {k}, path {''.join(path) or '<root>'}"
            )
        stay = 1.0 - h
        touched += 1  # virtual middle node
        return (
            b * (p_down * stay) * value(s * down, k + 1, path + ("d",))
            + h * f(s)
            + b * (p_up * stay) * value(s * up, k + 1, path + ("u",))
        )

    root = value(params.spot, 0, ())
    return PriceResult(
        value=float(root),
        algo=ALGO_GENERAL,
        nodes_touched=touched,
        wall_time=time.perf_counter_ns() - t0,
    )


_PRICERS = {
    ALGO_TRINOMIAL: price_trinomial,
    ALGO_RECURSIVE: price_recursive_binomial,
    ALGO_RECOMBINING: price_recombining,
    ALGO_SUM: price_conditioning_sum,
}


def price_with(
    algo: str, params: MarketParams, factors: MoveFactors, law: ExpiryLaw, payoff: PayoffSpec
) -> PriceResult:
    """Dispatch one of the homogeneous pricers (or the enumeration oracle)."""
    if algo == ALGO_ENUM:
        result, _ = price_path_enumeration(params, factors, law, payoff)
        return result
    try:
        fn = _PRICERS[algo]
    except KeyError:
        raise InvalidParams(f"unknown algorithm: {algo!r}") from None
    return fn(params, factors, law, payoff)
