"""Command-line client for the pricing service.

Every command builds a JSON request, posts it to the service, and renders
the response as CSV (default) or JSON.  Without ``--server`` the request is
dispatched to the bundled service in-process, so no daemon is needed; with
``--server URL`` the same request goes over the wire.

Exit codes: 0 success, 1 test/consistency failure, 2 usage error, 3 guard
error (a step count exceeded an algorithm's limit).
"""

from __future__ import annotations

import asyncio
import json
import os
import sys

import click
import httpx

CONSISTENCY_EXIT_TOL = 1e-8

_EXIT_USAGE = 2
_EXIT_GUARD = 3


def _default_seed() -> int:
    env = os.environ.get("REOPT_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise click.UsageError(f"REOPT_SEED must be an integer, got {env!r}")
    return 0


def _post(path: str, payload: dict, server: str | None) -> dict:
    if server:
        with httpx.Client(base_url=server, timeout=None) as client:
            response = client.post(path, json=payload)
    else:
        response = asyncio.run(_post_in_process(path, payload))
    if response.status_code == 200:
        return response.json()
    try:
        detail = response.json().get("detail", response.text)
    except ValueError:
        detail = response.text
    if response.status_code == 409:
        click.echo(f"error: {detail}", err=True)
        sys.exit(_EXIT_GUARD)
    click.echo(f"error: {detail}", err=True)
    sys.exit(_EXIT_USAGE)


async def _post_in_process(path: str, payload: dict) -> httpx.Response:
    from .service.app import app

    transport = httpx.ASGITransport(app=app)
    async with httpx.AsyncClient(
        transport=transport, base_url="http://reopt.local", timeout=None
    ) as client:
        return await client.post(path, json=payload)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def _emit_csv(columns: list[str], rows: list[dict]) -> None:
    click.echo(",".join(columns))
    for row in rows:
        click.echo(",".join(_fmt(row[c]) for c in columns))


def _emit_json(body: dict) -> None:
    click.echo(json.dumps(body, indent=2))


def market_options(f):
    for args, kwargs in reversed(
        [
            (("--steps",), dict(type=int, default=20, show_default=True, help="Tree periods N")),
            (("--maturity",), dict(type=float, default=1.0, show_default=True, help="Horizon in years")),
            (("--spot",), dict(type=float, default=100.0, show_default=True, help="Spot price")),
            (("--sigma",), dict(type=float, default=0.30, show_default=True, help="Annual volatility")),
            (("--rate",), dict(type=float, default=0.10, show_default=True, help="Interest rate")),
            (("--div",), dict(type=float, default=0.05, show_default=True, help="Dividend yield")),
        ]
    ):
        f = click.option(*args, **kwargs)(f)
    return f


def payoff_options(f):
    f = click.option(
        "--payoff",
        type=click.Choice(["call", "put", "zsc", "logcontract"]),
        default="call",
        show_default=True,
    )(f)
    f = click.option("--strike", type=float, default=100.0, show_default=True)(f)
    f = click.option("--reference", type=float, default=100.0, show_default=True)(f)
    return f


def expiry_options(f):
    f = click.option("--lambda", "lam", type=float, default=None, help="Expiry intensity; per-period hazard is lambda*dt")(f)
    f = click.option("--exp-atom", type=float, default=None, help="Discretize an exponential-with-atom law with this intensity")(f)
    f = click.option("--pmf-file", type=click.Path(exists=True, dir_okay=False), default=None, help='JSON file {"pmf": [...]}')(f)
    return f


def common_options(f):
    f = click.option("--seed", type=int, default=None, help="Seed (default REOPT_SEED or 0)")(f)
    f = click.option("--output", type=click.Choice(["csv", "json"]), default="csv", show_default=True)(f)
    f = click.option("--server", type=str, default=None, help="Remote service URL (default: in-process)")(f)
    return f


def _expiry_spec(lam, exp_atom, pmf_file) -> dict:
    given = [v is not None for v in (lam, exp_atom, pmf_file)]
    if sum(given) > 1:
        raise click.UsageError("give at most one of --lambda, --exp-atom, --pmf-file")
    if pmf_file is not None:
        with open(pmf_file) as fh:
            body = json.load(fh)
        if not isinstance(body, dict) or "pmf" not in body:
            raise click.UsageError(f'{pmf_file} must contain {{"pmf": [...]}}')
        return {"kind": "pmf", "pmf": body["pmf"]}
    if exp_atom is not None:
        return {"kind": "exp_atom", "lambda": exp_atom}
    return {"kind": "intensity", "lambda": 0.10 if lam is None else lam}


def _market(steps, maturity, spot, sigma, rate, div) -> dict:
    return {
        "spot": spot,
        "rate": rate,
        "div": div,
        "sigma": sigma,
        "maturity": maturity,
        "steps": steps,
    }


def _payoff(payoff, strike, reference) -> dict:
    return {"kind": payoff, "strike": strike, "reference": reference}


@click.group()
@click.version_option(version="0.1.0", prog_name="reopt")
def main():
    """Price random-expiry options on trinomial trees."""


@main.command()
@market_options
@expiry_options
@payoff_options
@click.option(
    "--algo",
    type=click.Choice(["tri", "recursive", "reco", "sum", "enum", "all"]),
    default="reco",
    show_default=True,
)
@common_options
def price(steps, maturity, spot, sigma, rate, div, lam, exp_atom, pmf_file,
          payoff, strike, reference, algo, seed, output, server):
    """Price one option; --algo all runs every algorithm and cross-checks."""
    payload = {
        "market": _market(steps, maturity, spot, sigma, rate, div),
        "expiry": _expiry_spec(lam, exp_atom, pmf_file),
        "payoff": _payoff(payoff, strike, reference),
        "algo": algo,
        "seed": _default_seed() if seed is None else seed,
    }
    body = _post("/v1/price", payload, server)
    if output == "json":
        _emit_json(body)
    else:
        rows = body["results"]
        if body.get("max_discrepancy") is not None:
            for row in rows:
                row["max_discrepancy"] = body["max_discrepancy"]
            _emit_csv(["algo", "value", "nodes_touched", "max_discrepancy"], rows)
        else:
            _emit_csv(["algo", "value", "nodes_touched"], rows)
    if body.get("max_discrepancy") is not None and body["max_discrepancy"] > CONSISTENCY_EXIT_TOL:
        click.echo(
            f"error: cross-algorithm discrepancy {body['max_discrepancy']:.3e} exceeds "
            f"{CONSISTENCY_EXIT_TOL:.1e}",
            err=True,
        )
        sys.exit(1)


@main.command("range")
@market_options
@payoff_options
@common_options
def range_cmd(steps, maturity, spot, sigma, rate, div, payoff, strike, reference,
              seed, output, server):
    """Print the hull of prices over all admissible expiry laws."""
    payload = {
        "market": _market(steps, maturity, spot, sigma, rate, div),
        "payoff": _payoff(payoff, strike, reference),
        "seed": _default_seed() if seed is None else seed,
    }
    body = _post("/v1/range", payload, server)
    if output == "json":
        _emit_json(body)
    else:
        rows = body["results"]
        for row in rows:
            row.update(low=body["low"], high=body["high"], degenerate=body["degenerate"])
        _emit_csv(["k", "price", "low", "high", "degenerate"], rows)


@main.command()
@market_options
@expiry_options
@click.option("--param", type=click.Choice(["steps", "spot", "lambda"]), required=True)
@click.option("--from", "start", type=float, required=True)
@click.option("--to", "stop", type=float, required=True)
@click.option("--points", type=int, default=50, show_default=True)
@click.option(
    "--payoff",
    "payoffs",
    type=click.Choice(["call", "put", "zsc", "logcontract"]),
    multiple=True,
    help="Restrict to these payoffs (default: all four)",
)
@click.option("--strike", type=float, default=100.0, show_default=True)
@click.option("--reference", type=float, default=100.0, show_default=True)
@click.option(
    "--algo",
    type=click.Choice(["tri", "recursive", "reco", "sum", "enum"]),
    default="reco",
    show_default=True,
)
@click.option("--workers", type=int, default=1, show_default=True)
@common_options
def sweep(steps, maturity, spot, sigma, rate, div, lam, exp_atom, pmf_file, param,
          start, stop, points, payoffs, strike, reference, algo, workers, seed,
          output, server):
    """Price a grid of one parameter (the data behind the standard figures)."""
    payload = {
        "market": _market(steps, maturity, spot, sigma, rate, div),
        "expiry": _expiry_spec(lam, exp_atom, pmf_file),
        "param": param,
        "start": start,
        "stop": stop,
        "points": points,
        "algo": algo,
        "workers": workers,
        "seed": _default_seed() if seed is None else seed,
    }
    if payoffs:
        payload["payoffs"] = [
            {"kind": k, "strike": strike, "reference": reference} for k in payoffs
        ]
    body = _post("/v1/sweep", payload, server)
    if output == "json":
        _emit_json(body)
    else:
        _emit_csv(["param_value", "payoff", "price"], body["results"])


@main.command()
@market_options
@click.option("--lambda", "lam", type=float, default=0.10, show_default=True,
              help="Intensity of the exponential-with-atom expiry law")
@payoff_options
@click.option("--n-list", default="16,32,64,128,256,512,1024", show_default=True,
              help="Comma-separated periods per unit time")
@click.option("--paths", type=int, default=1_000_000, show_default=True)
@click.option("--antithetic", is_flag=True, default=False)
@click.option("--force", is_flag=True, default=False,
              help="Allow unbounded payoffs in the Monte-Carlo estimate")
@click.option("--workers", type=int, default=1, show_default=True)
@common_options
def converge(steps, maturity, spot, sigma, rate, div, lam, payoff, strike, reference,
             n_list, paths, antithetic, force, workers, seed, output, server):
    """Tree prices against a Monte-Carlo estimate of the continuous limit."""
    try:
        steps_list = sorted(int(x) for x in n_list.split(","))
    except ValueError:
        raise click.UsageError(f"--n-list must be comma-separated integers, got {n_list!r}")
    payload = {
        "market": _market(steps, maturity, spot, sigma, rate, div),
        "lambda": lam,
        "payoff": _payoff(payoff, strike, reference),
        "steps_list": steps_list,
        "n_paths": paths,
        "antithetic": antithetic,
        "force": force,
        "workers": workers,
        "seed": _default_seed() if seed is None else seed,
    }
    body = _post("/v1/converge", payload, server)
    if output == "json":
        _emit_json(body)
    else:
        _emit_csv(["n", "tree_price", "mc_mean", "mc_se", "abs_diff"], body["results"])


@main.command()
@market_options
@click.option("--lambda", "lam", type=float, default=0.10, show_default=True)
@payoff_options
@click.option("--n-min", type=int, default=1, show_default=True)
@click.option("--n-max", type=int, default=10, show_default=True)
@click.option("--reps", type=int, default=10, show_default=True)
@common_options
def bench(steps, maturity, spot, sigma, rate, div, lam, payoff, strike, reference,
          n_min, n_max, reps, seed, output, server):
    """Compare wall-clock times of the three tree algorithms."""
    payload = {
        "market": _market(steps, maturity, spot, sigma, rate, div),
        "payoff": _payoff(payoff, strike, reference),
        "lambda": lam,
        "n_min": n_min,
        "n_max": n_max,
        "reps": reps,
        "seed": _default_seed() if seed is None else seed,
    }
    body = _post("/v1/bench", payload, server)
    if output == "json":
        _emit_json(body)
    else:
        _emit_csv(["n_steps", "algo", "mean_ns", "reps", "nodes_touched"], body["results"])


@main.command()
@click.option("--cases", type=int, default=1000, show_default=True)
@click.option("--workers", type=int, default=1, show_default=True)
@common_options
def selftest(cases, workers, seed, output, server):
    """Run the randomized consistency and enumeration-oracle suites."""
    payload = {
        "cases": cases,
        "workers": workers,
        "seed": _default_seed() if seed is None else seed,
    }
    body = _post("/v1/selftest", payload, server)
    if output == "json":
        _emit_json(body)
    else:
        for line in body["lines"]:
            click.echo(line)
    if not body["passed"]:
        sys.exit(1)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host, port):
    """Run the pricing service."""
    import uvicorn

    uvicorn.run("reopt.service.app:app", host=host, port=port)


if __name__ == "__main__":
    main()
