import json

import pytest
from click.testing import CliRunner
from fastapi.testclient import TestClient

import reopt.pricer as pricer_mod
from reopt.cli import main
from reopt.service.app import app


@pytest.fixture
def runner():
    return CliRunner()


def run(runner, *args, env=None):
    return runner.invoke(main, list(args), env=env, catch_exceptions=False)


class TestPriceCommand:
    def test_zsc_without_dividends_equals_spot(self, runner):
        result = run(runner, "price", "--payoff", "zsc", "--div", "0")
        assert result.exit_code == 0
        header, row = result.output.strip().splitlines()
        assert header == "algo,value,nodes_touched"
        assert row.split(",")[1] == "100"

    def test_all_algorithms_consistent(self, runner):
        result = run(runner, "price", "--algo", "all", "--steps", "12")
        assert result.exit_code == 0
        lines = result.output.strip().splitlines()
        assert lines[0] == "algo,value,nodes_touched,max_discrepancy"
        assert len(lines) == 5
        values = {line.split(",")[0]: line.split(",")[1] for line in lines[1:]}
        assert set(values) == {"tri", "recursive", "reco", "sum"}
        assert len(set(values.values())) == 1  # identical at 12 significant digits

    def test_intensity_over_one_exits_2(self, runner):
        result = run(runner, "price", "--lambda", "25", "--steps", "20", "--maturity", "1")
        assert result.exit_code == 2
        assert "lambda*dt must be < 1" in result.output

    def test_guard_exits_3_naming_guard(self, runner):
        result = run(runner, "price", "--algo", "tri")  # default N=20 > 16
        assert result.exit_code == 3
        assert "trinomial guard" in result.output

    def test_conflicting_expiry_flags_exit_2(self, runner):
        result = run(runner, "price", "--lambda", "0.1", "--exp-atom", "0.1")
        assert result.exit_code == 2

    def test_pmf_file(self, runner, tmp_path):
        pmf = tmp_path / "law.json"
        pmf.write_text(json.dumps({"pmf": [0.1, 0.2, 0.7]}))
        result = run(runner, "price", "--steps", "2", "--pmf-file", str(pmf))
        assert result.exit_code == 0

    def test_json_output_round_trips(self, runner):
        result = run(runner, "price", "--steps", "8", "--output", "json")
        body = json.loads(result.output)
        # re-pricing from the echoed config must reproduce the values bitwise
        repriced = TestClient(app).post("/v1/price", json=body["config"]).json()
        assert repriced["results"] == body["results"]


class TestDeterminism:
    def test_price_byte_identical(self, runner):
        a = run(runner, "price", "--steps", "12", "--algo", "all", "--seed", "7")
        b = run(runner, "price", "--steps", "12", "--algo", "all", "--seed", "7")
        assert a.output == b.output

    def test_sweep_byte_identical_across_workers(self, runner):
        args = ("sweep", "--param", "lambda", "--from", "0.01", "--to", "1", "--points", "5")
        a = run(runner, *args, "--workers", "1")
        b = run(runner, *args, "--workers", "3")
        assert a.output == b.output

    def test_selftest_byte_identical(self, runner):
        a = run(runner, "selftest", "--cases", "10", "--seed", "42")
        b = run(runner, "selftest", "--cases", "10", "--seed", "42")
        assert a.output == b.output
        assert a.exit_code == 0

    def test_converge_byte_identical(self, runner):
        args = ("converge", "--n-list", "4,8", "--paths", "4000", "--payoff", "put",
                "--seed", "3")
        a = run(runner, *args)
        b = run(runner, *args)
        assert a.output == b.output

    def test_env_seed_matches_flag(self, runner):
        via_env = run(runner, "converge", "--n-list", "4", "--paths", "2000",
                      "--payoff", "put", env={"REOPT_SEED": "9"})
        via_flag = run(runner, "converge", "--n-list", "4", "--paths", "2000",
                       "--payoff", "put", "--seed", "9")
        assert via_env.output == via_flag.output


class TestSweepCommand:
    def test_zsc_constant_in_steps_without_dividends(self, runner):
        result = run(
            runner, "sweep", "--param", "steps", "--from", "1", "--to", "50",
            "--points", "50", "--div", "0", "--payoff", "zsc",
        )
        assert result.exit_code == 0
        lines = result.output.strip().splitlines()[1:]
        assert len(lines) == 50
        prices = [float(line.split(",")[2]) for line in lines]
        assert max(prices) - min(prices) <= 1e-9

    def test_lambda_sweep_orderings(self, runner):
        result = run(
            runner, "sweep", "--param", "lambda", "--from", "0.01", "--to", "2",
            "--points", "8",
        )
        rows = [line.split(",") for line in result.output.strip().splitlines()[1:]]
        by_payoff = {}
        for value, payoff, price in rows:
            by_payoff.setdefault(payoff, []).append(float(price))
        for a, b in zip(by_payoff["call"], by_payoff["call"][1:]):
            assert b <= a + 1e-12
        for a, b in zip(by_payoff["put"], by_payoff["put"][1:]):
            assert b <= a + 1e-12
        for a, b in zip(by_payoff["zsc"], by_payoff["zsc"][1:]):
            assert b >= a - 1e-12

    def test_spot_sweep_monotonicity(self, runner):
        result = run(
            runner, "sweep", "--param", "spot", "--from", "50", "--to", "150",
            "--points", "11",
        )
        rows = [line.split(",") for line in result.output.strip().splitlines()[1:]]
        calls = [float(p) for _, payoff, p in rows if payoff == "call"]
        puts = [float(p) for _, payoff, p in rows if payoff == "put"]
        assert all(b >= a - 1e-12 for a, b in zip(calls, calls[1:]))
        assert all(b <= a + 1e-12 for a, b in zip(puts, puts[1:]))


class TestSelftestCommand:
    def test_passes_and_prints_summary(self, runner):
        result = run(runner, "selftest", "--cases", "20", "--seed", "1")
        assert result.exit_code == 0
        assert "consistency: 20/20" in result.output
        assert result.output.strip().endswith("PASS")

    def test_corrupted_pricer_exits_1_and_names_algorithm(self, runner, monkeypatch):
        real = pricer_mod.price_recombining

        def corrupted(params, factors, law, payoff):
            result = real(params, factors, law, payoff)
            return type(result)(
                value=-result.value if result.value != 0 else 1.0,
                algo=result.algo,
                nodes_touched=result.nodes_touched,
                wall_time=result.wall_time,
            )

        monkeypatch.setitem(pricer_mod._PRICERS, "reco", corrupted)
        result = run(runner, "selftest", "--cases", "10", "--seed", "1")
        assert result.exit_code == 1
        assert "divergent algorithm: reco" in result.output
        assert "FAIL" in result.output


class TestOtherCommands:
    def test_range_csv(self, runner):
        result = run(runner, "range", "--payoff", "zsc", "--steps", "4")
        lines = result.output.strip().splitlines()
        assert lines[0] == "k,price,low,high,degenerate"
        assert len(lines) == 6

    def test_bench_csv(self, runner):
        result = run(runner, "bench", "--n-min", "1", "--n-max", "2", "--reps", "1")
        lines = result.output.strip().splitlines()
        assert lines[0] == "n_steps,algo,mean_ns,reps,nodes_touched"
        assert len(lines) == 7

    def test_converge_csv_columns(self, runner):
        result = run(runner, "converge", "--n-list", "4", "--paths", "1000",
                     "--payoff", "put")
        lines = result.output.strip().splitlines()
        assert lines[0] == "n,tree_price,mc_mean,mc_se,abs_diff"

    def test_converge_unbounded_needs_force(self, runner):
        result = run(runner, "converge", "--n-list", "4", "--paths", "100")
        assert result.exit_code == 2
        forced = run(runner, "converge", "--n-list", "4", "--paths", "100", "--force")
        assert forced.exit_code == 0

    def test_enum_guard_via_cli(self, runner):
        result = run(runner, "price", "--algo", "enum", "--steps", "9")
        assert result.exit_code == 3
        assert "enumeration guard" in result.output
