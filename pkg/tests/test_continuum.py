import math

import numpy as np
import pytest

from oracles import black_scholes
from reopt.continuum import (
    McConfig,
    convergence_study,
    mc_price,
    sample_expiry,
)
from reopt.errors import InvalidParams, UnboundedPayoff
from reopt.expiry import ExponentialWithAtom, GenericDensity, PointMass
from reopt.model import MarketParams
from reopt.payoff import PayoffSpec


def params(**kw):
    base = dict(spot=100.0, rate=0.10, div_yield=0.05, sigma=0.30, maturity=1.0, steps=20)
    base.update(kw)
    return MarketParams(**base)


EXP_ATOM = ExponentialWithAtom(lam=0.1, horizon=1.0)


class TestSampleExpiry:
    def test_point_mass(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            assert sample_expiry(PointMass(0.4), rng) == 0.4

    def test_atom_frequency(self):
        # P(draw == horizon) should match the atom weight within 4 binomial SEs
        rng = np.random.default_rng(1)
        n = 1_000_000
        draws = EXP_ATOM.inverse_cdf(rng.random(n))
        pi = EXP_ATOM.atom_weight
        freq = float(np.mean(draws == 1.0))
        se = math.sqrt(pi * (1 - pi) / n)
        assert abs(freq - pi) <= 4 * se

    def test_mean_matches_integral(self):
        # E[tau] = (1 - e^(-lam*T)) / lam for the exponential-with-atom law
        rng = np.random.default_rng(2)
        n = 1_000_000
        draws = EXP_ATOM.inverse_cdf(rng.random(n))
        expected = (1.0 - math.exp(-0.1)) / 0.1
        se = float(np.std(draws)) / math.sqrt(n)
        assert abs(float(np.mean(draws)) - expected) <= 4 * se

    def test_draws_within_support(self):
        rng = np.random.default_rng(3)
        draws = EXP_ATOM.inverse_cdf(rng.random(10_000))
        assert np.all(draws > 0.0)
        assert np.all(draws <= 1.0)

    def test_generic_density_sampling(self):
        rng = np.random.default_rng(4)
        tri = GenericDensity(cdf_fn=lambda x: x**2, horizon=1.0)  # density 2x
        draws = np.array([sample_expiry(tri, rng) for _ in range(20_000)])
        assert abs(float(np.mean(draws)) - 2.0 / 3.0) <= 4 * float(np.std(draws)) / math.sqrt(
            len(draws)
        )


class TestMcPrice:
    def test_unbounded_payoff_requires_force(self):
        with pytest.raises(UnboundedPayoff):
            mc_price(params(), EXP_ATOM, PayoffSpec.call(100.0), McConfig(n_paths=10))
        mc_price(params(), EXP_ATOM, PayoffSpec.call(100.0), McConfig(n_paths=10), force=True)

    def test_constant_payoff_closed_form(self):
        # E[e^(-r*tau)] = lam/(lam+r)(1 - e^(-(lam+r)T)) + e^(-(lam+r)T)
        c, lam, r, horizon = 3.7, 0.1, 0.10, 1.0
        closed = c * (
            lam / (lam + r) * (1.0 - math.exp(-(lam + r) * horizon))
            + math.exp(-(lam + r) * horizon)
        )
        est = mc_price(
            params(),
            EXP_ATOM,
            PayoffSpec.custom(lambda s: c, bounded=True),
            McConfig(n_paths=400_000, seed=10),
        )
        assert abs(est.mean - closed) <= 4 * est.std_error

    def test_point_mass_put_matches_black_scholes(self):
        p = params()
        est = mc_price(
            p, PointMass(1.0), PayoffSpec.put(100.0), McConfig(n_paths=400_000, seed=11)
        )
        reference = black_scholes(100.0, 100.0, 0.10, 0.05, 0.30, 1.0, "put")
        assert abs(est.mean - reference) <= 4 * est.std_error

    def test_zsc_without_dividends_is_spot(self):
        p = params(div_yield=0.0, sigma=0.05)
        est = mc_price(
            p,
            EXP_ATOM,
            PayoffSpec.zero_strike_call(),
            McConfig(n_paths=400_000, seed=12),
            force=True,
        )
        assert abs(est.mean - 100.0) <= 4 * est.std_error

    def test_bit_reproducible_across_runs_and_workers(self):
        cfg = McConfig(n_paths=123_457, seed=99)
        a = mc_price(params(), EXP_ATOM, PayoffSpec.put(100.0), cfg)
        b = mc_price(params(), EXP_ATOM, PayoffSpec.put(100.0), cfg)
        c = mc_price(params(), EXP_ATOM, PayoffSpec.put(100.0), cfg, workers=3)
        assert a == b == c

    def test_different_seeds_differ(self):
        a = mc_price(params(), EXP_ATOM, PayoffSpec.put(100.0), McConfig(n_paths=1000, seed=1))
        b = mc_price(params(), EXP_ATOM, PayoffSpec.put(100.0), McConfig(n_paths=1000, seed=2))
        assert a.mean != b.mean

    def test_ci_brackets_mean(self):
        est = mc_price(
            params(), EXP_ATOM, PayoffSpec.put(100.0), McConfig(n_paths=10_000, seed=3)
        )
        assert est.ci99_low <= est.mean <= est.ci99_high
        assert est.ci99_high - est.mean == pytest.approx(2.576 * est.std_error)

    def test_antithetic_does_not_hurt(self):
        for payoff in (
            PayoffSpec.put(100.0),
            PayoffSpec.custom(lambda s: min(s, 200.0), bounded=True),  # clipped call proxy
        ):
            plain = mc_price(params(), EXP_ATOM, payoff, McConfig(n_paths=200_000, seed=5))
            anti = mc_price(
                params(), EXP_ATOM, payoff, McConfig(n_paths=200_000, seed=5, antithetic=True)
            )
            assert anti.std_error <= 1.05 * plain.std_error
            assert anti.n_paths == plain.n_paths

    def test_config_validation(self):
        with pytest.raises(InvalidParams):
            McConfig(n_paths=0)
        with pytest.raises(InvalidParams):
            McConfig(time_grid=0)


class TestConvergenceStudy:
    def test_constant_payoff_matches_geometric_sum_each_n(self):
        # tree price of f = 1 is sum_k pmf[k] e^(-r k dt): a geometric series
        p = params()
        one = PayoffSpec.custom(lambda s: 1.0, bounded=True)
        rows = convergence_study(
            p, EXP_ATOM, one, [4, 8, 16, 64], McConfig(n_paths=1000, seed=6)
        )
        for row in rows:
            n = row.n
            prob = 1.0 - math.exp(-0.1 / n)
            x = (1.0 - prob) * math.exp(-0.10 / n)
            closed = prob * (1.0 - x**n) / (1.0 - x) + x**n
            assert row.tree_price == pytest.approx(closed, abs=1e-12)

    def test_put_tree_converges_to_mc(self):
        p = params()
        rows = convergence_study(
            p,
            EXP_ATOM,
            PayoffSpec.put(100.0),
            [16, 32, 64, 128, 256, 512],
            McConfig(n_paths=300_000, seed=7),
        )
        gaps = [r.abs_diff for r in rows]
        assert max(gaps[-2:]) < max(gaps[:2])  # eventually decreasing
        assert gaps[-1] <= 3 * rows[-1].mc_se

    def test_point_mass_reduces_to_fixed_expiry_convergence(self):
        # deterministic expiry: plain lattice-to-Black-Scholes convergence
        p = params()
        rows = convergence_study(
            p,
            PointMass(1.0),
            PayoffSpec.call(100.0),
            [8, 16, 32, 64, 128, 256],
            McConfig(n_paths=200_000, seed=8),
            force=True,
        )
        reference = black_scholes(100.0, 100.0, 0.10, 0.05, 0.30, 1.0, "call")
        errors = [abs(r.tree_price - reference) for r in rows]
        assert errors[-1] < errors[0]
        assert rows[-1].abs_diff <= 4 * rows[-1].mc_se

    def test_rejects_unsorted_steps(self):
        with pytest.raises(InvalidParams):
            convergence_study(
                params(),
                EXP_ATOM,
                PayoffSpec.put(100.0),
                [32, 16],
                McConfig(n_paths=100, seed=9),
            )
