"""quantchar command line: a thin client over the service endpoints.

Every subcommand (except ``serve``) speaks the service wire format.  By
default requests are dispatched to an in-process ASGI instance of the app,
so no server is needed; pass ``--server http://host:port`` (or set
QUANTCHAR_SERVER) to talk to a remote instance instead.  Experiment
subcommands write CSV rows plus a ``<out>.json`` sidecar and exit nonzero
if any internal assertion failed.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import httpx

DEFAULT_TIMEOUT = 600.0


def _client(server: str | None):
    if server:
        return httpx.Client(base_url=server, timeout=DEFAULT_TIMEOUT)
    from fastapi.testclient import TestClient

    from .service.app import app

    return TestClient(app)


def _post(ctx, path, payload):
    with _client(ctx.obj.get("server")) as client:
        resp = client.post(path, json=payload)
    if resp.status_code != 200:
        raise click.ClickException(f"{path} failed ({resp.status_code}): {resp.text}")
    return resp.json()


def _load_measure(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise click.ClickException(f"cannot read measure file {path}: {exc}")


def _parse_grid(text: str):
    # "0.25,0.75" for 1D, "0,0;1,0" for rows of coordinates
    rows = [r for r in text.split(";") if r.strip()]
    if len(rows) == 1 and ";" not in text:
        return [float(v) for v in rows[0].split(",") if v.strip()]
    return [[float(v) for v in r.split(",") if v.strip()] for r in rows]


def _parse_floats(text: str):
    return [float(v) for v in text.split(",") if v.strip()]


def _echo_json(data):
    click.echo(json.dumps(data, indent=2))


@click.group()
@click.option("--server", envvar="QUANTCHAR_SERVER", default=None, help="Remote service URL (default: in-process).")
@click.pass_context
def main(ctx, server):
    """Quantization-error toolkit: error functions, metrics, experiments."""
    ctx.ensure_object(dict)
    ctx.obj["server"] = server


@main.command()
@click.option("--dim", type=int, required=True)
@click.option("--r", "r", default="2", help="Norm order, a number or 'inf'.")
@click.option("--samples", type=int, default=100_000)
@click.option("--seed", type=int, default=0)
@click.pass_context
def covering(ctx, dim, r, samples, seed):
    """Construct a sphere covering and verify it by sampling."""
    out = _post(ctx, "/covering", {"dim": dim, "r": r, "samples": samples, "seed": seed})
    _echo_json(out)


@main.command()
@click.option("--measure", "measure_path", required=True, type=click.Path(exists=True))
@click.option("--grid", required=True, help="e.g. '0.25,0.75' or '0,0;1,0'")
@click.option("--p", type=float, default=2.0)
@click.option("--r", "r", default="2")
@click.option("--mc-samples", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.pass_context
def qerr(ctx, measure_path, grid, p, r, mc_samples, seed):
    """Evaluate the quantization error of a grid."""
    payload = {
        "measure": _load_measure(measure_path),
        "grid": _parse_grid(grid),
        "p": p,
        "r": r,
        "mc_samples": mc_samples,
        "seed": seed,
    }
    out = _post(ctx, "/qerr", payload)
    if out.get("std_error") is None:
        out.pop("std_error", None)
    _echo_json(out)


@main.command()
@click.option("--measure", "measure_path", required=True, type=click.Path(exists=True))
@click.option("--n", type=int, required=True)
@click.option("--iters", type=int, default=100)
@click.option("--seed", type=int, default=0)
@click.option("--pool-size", type=int, default=None)
@click.pass_context
def lloyd(ctx, measure_path, n, iters, seed, pool_size):
    """Near-optimal quadratic grid by Lloyd iteration."""
    out = _post(
        ctx,
        "/lloyd",
        {
            "measure": _load_measure(measure_path),
            "n": n,
            "iters": iters,
            "seed": seed,
            "pool_size": pool_size,
        },
    )
    _echo_json(out)


@main.command()
@click.option("--mu", "mu_path", required=True, type=click.Path(exists=True))
@click.option("--nu", "nu_path", required=True, type=click.Path(exists=True))
@click.option("--n", type=int, required=True)
@click.option("--p", type=float, default=2.0)
@click.option("--box", default=None, help="lo,hi")
@click.option("--restarts", type=int, default=5)
@click.option("--seed", type=int, default=0)
@click.option("--mc-samples", type=int, default=None)
@click.pass_context
def qdist(ctx, mu_path, nu_path, n, p, box, restarts, seed, mc_samples):
    """Lower-bound the quantization distance between two measures."""
    payload = {
        "mu": _load_measure(mu_path),
        "nu": _load_measure(nu_path),
        "n": n,
        "p": p,
        "restarts": restarts,
        "seed": seed,
        "mc_samples": mc_samples,
    }
    if box:
        lo, hi = _parse_floats(box)
        payload["box"] = (lo, hi)
    _echo_json(_post(ctx, "/qdist", payload))


@main.command()
@click.option("--mu", "mu_path", required=True, type=click.Path(exists=True))
@click.option("--nu", "nu_path", required=True, type=click.Path(exists=True))
@click.option("--p", type=float, default=2.0)
@click.pass_context
def wasserstein(ctx, mu_path, nu_path, p):
    """Exact 1D Wasserstein distance (quantile coupling)."""
    out = _post(ctx, "/wasserstein", {"mu": _load_measure(mu_path), "nu": _load_measure(nu_path), "p": p})
    click.echo(repr(out["value"]))


def _write_point_rows(rows, header, out_path):
    lines = [header] + [f"{x!r},{y!r}" for x, y in rows]
    text = "\n".join(lines) + "\n"
    if out_path:
        Path(out_path).write_text(text)
    else:
        click.echo(text, nl=False)


@main.command()
@click.option("--measure", "measure_path", required=True, type=click.Path(exists=True))
@click.option("--p", type=float, default=2.0)
@click.option("--eps", type=float, required=True)
@click.option("--xs", required=True, help="x0,x1,...")
@click.option("--mc-samples", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--out", "out_path", default=None, type=click.Path())
@click.pass_context
def mollify(ctx, measure_path, p, eps, xs, mc_samples, seed, out_path):
    """Density estimates from the error function via the mollifier identity."""
    out = _post(
        ctx,
        "/mollify",
        {
            "measure": _load_measure(measure_path),
            "p": p,
            "eps": eps,
            "xs": _parse_floats(xs),
            "mc_samples": mc_samples,
            "seed": seed,
        },
    )
    _write_point_rows(out["rows"], "x,density_estimate", out_path)


@main.command("cdf-extract")
@click.option("--measure", "measure_path", required=True, type=click.Path(exists=True))
@click.option("--xs", required=True, help="x0,x1,...")
@click.option("--h", type=float, default=None)
@click.option("--mc-samples", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--out", "out_path", default=None, type=click.Path())
@click.pass_context
def cdf_extract(ctx, measure_path, xs, h, mc_samples, seed, out_path):
    """CDF estimates from the level-1 order-1 error function."""
    out = _post(
        ctx,
        "/cdf-extract",
        {
            "measure": _load_measure(measure_path),
            "xs": _parse_floats(xs),
            "h": h,
            "mc_samples": mc_samples,
            "seed": seed,
        },
    )
    _write_point_rows(out["rows"], "x,F_estimate", out_path)


def _write_experiment(result: dict, out_path: str):
    out = Path(out_path)
    cols = result["columns"]
    lines = [",".join(cols)]
    for row in result["rows"]:
        lines.append(",".join(repr(row[c]) if isinstance(row[c], float) else str(row[c]) for c in cols))
    out.write_text("\n".join(lines) + "\n")
    sidecar = out.with_name(out.name + ".json")
    sidecar.write_text(
        json.dumps(
            {
                "experiment": result["experiment"],
                "config": result["config"],
                "assertions": result["assertions"],
            },
            indent=2,
        )
        + "\n"
    )
    for a in result["assertions"]:
        if not a["passed"]:
            click.echo(f"ASSERTION FAILED: {a['name']} {a['detail']}", err=True)
    click.echo(f"wrote {out} and {sidecar}")
    if not result["passed"]:
        sys.exit(1)


@main.command()
@click.option("--N", "n_level", type=int, default=2)
@click.option("--n-max", type=int, default=8)
@click.option("--grid-budget", type=int, default=1000)
@click.option("--seed", type=int, default=0)
@click.option("--lattice-half-width", type=float, default=10.0)
@click.option("--pitch", type=float, default=0.25)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.pass_context
def counterexample(ctx, n_level, n_max, grid_budget, seed, lattice_half_width, pitch, out_path):
    """Lognormal sequence: Q-Cauchy but not Wasserstein-Cauchy."""
    result = _post(
        ctx,
        "/experiments/counterexample",
        {
            "N": n_level,
            "n_max": n_max,
            "grid_budget": grid_budget,
            "seed": seed,
            "lattice_half_width": lattice_half_width,
            "pitch": pitch,
        },
    )
    _write_experiment(result, out_path)


@main.command("grid-law")
@click.option("--family", default="normal")
@click.option("--Ns", "ns", default="10,25,50,100")
@click.option("--lloyd-iters", type=int, default=None)
@click.option("--pool-size", type=int, default=400_000)
@click.option("--seed", type=int, default=1)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.pass_context
def grid_law(ctx, family, ns, lloyd_iters, pool_size, seed, out_path):
    """Empirical law of Lloyd grids vs the h^(1/3) limit law."""
    result = _post(
        ctx,
        "/experiments/grid-law",
        {
            "family": family,
            "Ns": [int(v) for v in ns.split(",") if v.strip()],
            "lloyd_iters": lloyd_iters,
            "pool_size": pool_size,
            "seed": seed,
        },
    )
    _write_experiment(result, out_path)


@main.command()
@click.option("--family", default="shrinking-dirac")
@click.option("--N", "n_level", type=int, default=2)
@click.option("--p", type=float, default=None)
@click.option("--n-list", default="1,2,3,4,5,6,7,8")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.pass_context
def equivalence(ctx, family, n_level, p, n_list, out_path):
    """Sup-norm error-function gaps against exact Wasserstein distances."""
    result = _post(
        ctx,
        "/experiments/equivalence",
        {
            "family": family,
            "N": n_level,
            "p": p,
            "n_list": [int(v) for v in n_list.split(",") if v.strip()],
        },
    )
    _write_experiment(result, out_path)


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    uvicorn.run("quantchar.service.app:app", host=host, port=port)


if __name__ == "__main__":
    main()
