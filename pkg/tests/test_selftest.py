import reopt.pricer as pricer_mod
from reopt.selftest import run_selftest


def test_small_run_passes():
    report = run_selftest(cases=40, seed=42)
    assert report.passed
    assert report.consistent == 40
    assert report.enum_ok == report.enum_cases == 8
    assert report.max_discrepancy < 1e-9
    assert report.enum_max_error < 1e-12
    assert report.divergent is None
    assert report.lines()[-1] == "PASS"


def test_deterministic_across_runs_and_workers():
    a = run_selftest(cases=30, seed=7)
    b = run_selftest(cases=30, seed=7)
    c = run_selftest(cases=30, seed=7, workers=4)
    assert a.lines() == b.lines() == c.lines()


def test_different_seed_different_cases():
    a = run_selftest(cases=30, seed=1)
    b = run_selftest(cases=30, seed=2)
    assert a.max_discrepancy != b.max_discrepancy


def test_corrupted_pricer_is_named(monkeypatch):
    # negative control: flip the sign of one algorithm and expect the report
    # to fail and to blame that algorithm
    real = pricer_mod.price_recombining

    def corrupted(params, factors, law, payoff):
        result = real(params, factors, law, payoff)
        return type(result)(
            value=-result.value if result.value != 0 else 1.0,
            algo=result.algo,
            nodes_touched=result.nodes_touched,
            wall_time=result.wall_time,
        )

    monkeypatch.setattr(pricer_mod, "price_recombining", corrupted)
    monkeypatch.setitem(pricer_mod._PRICERS, "reco", corrupted)
    report = run_selftest(cases=20, seed=3)
    assert not report.passed
    assert report.divergent == "reco"
    assert report.lines()[-1] == "FAIL"
    assert any("FAIL consistency" in line for line in report.failures)
