"""Command-line client.

Each subcommand builds a service request and dispatches it either to the
in-process handlers (default) or to a running server (``--url``); ``serve``
starts that server. ``bench`` is the exception: it orchestrates long
experiment campaigns locally and writes a results directory.
"""

from __future__ import annotations

import csv
import json
import sys
from pathlib import Path

import click

from .service import handlers, models


class LocalClient:
    routes = {
        "/catalog/dump": (handlers.catalog_dump, models.CatalogDumpResponse),
        "/simulate": (handlers.simulate_config, models.SimulateResponse),
        "/reduce": (handlers.reduce_endpoint, models.ReduceResponse),
        "/encode": (handlers.encode, models.EncodeResponse),
        "/decode": (handlers.decode, models.DecodeResponse),
        "/solve": (handlers.solve, models.SolveResponse),
        "/boost": (handlers.boost_endpoint, models.BoostResponse),
        "/pgco": (handlers.pgco, models.PgcoResponse),
    }

    def post(self, path: str, request):
        handler, _ = self.routes[path]
        try:
            return handler(request)
        except handlers.ServiceError as err:
            raise click.ClickException(err.detail) from err


class RemoteClient:
    def __init__(self, base_url: str):
        self.base_url = base_url.rstrip("/")

    def post(self, path: str, request):
        import httpx

        _, response_model = LocalClient.routes[path]
        resp = httpx.post(self.base_url + path, json=request.model_dump(), timeout=600.0)
        if resp.status_code != 200:
            try:
                detail = resp.json().get("detail", resp.text)
            except Exception:
                detail = resp.text
            raise click.ClickException(f"server answered {resp.status_code}: {detail}")
        return response_model.model_validate(resp.json())


def _client(ctx) -> LocalClient | RemoteClient:
    url = ctx.obj.get("url")
    return RemoteClient(url) if url else LocalClient()


def _catalog_text(path: str | None) -> str | None:
    return Path(path).read_text() if path else None


def _load_space(path: str) -> models.SpaceDoc:
    return models.SpaceDoc.model_validate(json.loads(Path(path).read_text()))


def _parse_config(text: str) -> list[int]:
    try:
        values = [int(x) for x in text.replace(" ", "").split(",")]
    except ValueError:
        raise click.ClickException("config must be 12 comma-separated integers") from None
    if len(values) != 12:
        raise click.ClickException("config must list 12 integers: s1,r1,...,s6,r6")
    return values


def _write_trace(rows, path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["eval_index", "config", "cost", "best_so_far"])
        for row in rows:
            writer.writerow([
                row.eval_index,
                ",".join(str(v) for v in row.config),
                repr(row.cost),
                repr(row.best_so_far),
            ])


@click.group()
@click.option("--url", default=None, help="Base URL of a running lineopt server; default runs in-process.")
@click.pass_context
def main(ctx, url):
    """Assembly-line planning toolkit."""
    ctx.ensure_object(dict)
    ctx.obj["url"] = url


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    from .service.app import app

    uvicorn.run(app, host=host, port=port)


@main.command()
@click.option("--catalog", "catalog_path", type=click.Path(exists=True), default=None,
              help="Catalog file; omit for the shipped default.")
@click.option("--out", type=click.Path(), default=None, help="Write canonical form here.")
@click.pass_context
def dump(ctx, catalog_path, out):
    """Emit the canonical catalog form."""
    resp = _client(ctx).post("/catalog/dump", models.CatalogRequest(
        catalog_text=_catalog_text(catalog_path)))
    if out:
        Path(out).write_text(resp.catalog_text)
        click.echo(f"wrote {out}")
    else:
        click.echo(resp.catalog_text, nl=False)


@main.command()
@click.option("--catalog", "catalog_path", type=click.Path(exists=True), default=None)
@click.option("--config", "config_text", required=True, help='"s1,r1,...,s6,r6"')
@click.option("--trace", "trace_path", type=click.Path(), default=None,
              help="Write a per-step CSV here.")
@click.pass_context
def simulate(ctx, catalog_path, config_text, trace_path):
    """Simulate one configuration for a year and print its cost."""
    resp = _client(ctx).post("/simulate", models.SimulateRequest(
        catalog_text=_catalog_text(catalog_path),
        config=_parse_config(config_text),
        include_trace=trace_path is not None,
    ))
    if trace_path:
        with open(trace_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["step", "slot_time",
                 *(f"produced_{n}" for n in ("body1", "body2", "paint1", "paint2", "asm1", "asm2")),
                 *(f"idle_{n}" for n in ("body1", "body2", "paint1", "paint2", "asm1", "asm2")),
                 "buffer1", "buffer2"])
            for row in resp.trace:
                writer.writerow([row.step, row.hour, *row.produced, *row.idle_flags,
                                 row.buffer1, row.buffer2])
        click.echo(f"trace written to {trace_path}")
    click.echo(f"annual production: {sum(resp.monthly_production)}")
    click.echo(f"monthly production: {resp.monthly_production}")
    click.echo(f"final buffers: {resp.final_buffers}")
    click.echo(f"cost: {resp.cost.total} (production {resp.cost.production_term}, "
               f"idle {resp.cost.idle_term})")


@main.command()
@click.option("--catalog", "catalog_path", type=click.Path(exists=True), default=None)
@click.option("--margin", type=float, required=True, help="Relative margin, e.g. 0.05; 1.0 disables filtering.")
@click.option("--dev", "dev_mode", type=click.Choice(["yes", "no"]), required=True)
@click.option("--out", type=click.Path(), required=True, help="Write the space document here.")
@click.pass_context
def reduce(ctx, catalog_path, margin, dev_mode, out):
    """Reduce the stage-state space to estimates near the annual target."""
    resp = _client(ctx).post("/reduce", models.ReduceRequest(
        catalog_text=_catalog_text(catalog_path), margin=margin, dev_mode=dev_mode))
    Path(out).write_text(json.dumps(resp.space.model_dump(), indent=1))
    sizes = [len(s) for s in resp.space.stages]
    click.echo(f"stage sizes {sizes}, total {resp.space.total_size}; wrote {out}")


@main.command()
@click.option("--catalog", "catalog_path", type=click.Path(exists=True), default=None)
@click.option("--space", "space_path", type=click.Path(exists=True), default=None)
@click.option("--scheme", type=click.Choice(["basic", "gray", "pggray", "twelvebody-gray"]),
              required=True)
@click.option("--triple", default=None, help="i,j,k stage positions (three-body schemes)")
@click.option("--config", "config_text", default=None, help='"s1,r1,...,s6,r6" (twelvebody-gray)')
@click.option("--pg-chain", is_flag=True, help="Key stage 3 to stage 2 instead of stage 1.")
@click.pass_context
def encode(ctx, catalog_path, space_path, scheme, triple, config_text, pg_chain):
    """Encode a state as a bitstring."""
    triple_values = None
    if triple is not None:
        parts = triple.split(",")
        if len(parts) != 3:
            raise click.ClickException("triple must be i,j,k")
        triple_values = tuple(int(x) for x in parts)
    resp = _client(ctx).post("/encode", models.EncodeRequest(
        catalog_text=_catalog_text(catalog_path),
        scheme=scheme,
        space=_load_space(space_path) if space_path else None,
        triple=triple_values,
        config=_parse_config(config_text) if config_text else None,
        pg_chain=pg_chain,
    ))
    click.echo(resp.bits)


@main.command()
@click.option("--catalog", "catalog_path", type=click.Path(exists=True), default=None)
@click.option("--space", "space_path", type=click.Path(exists=True), default=None)
@click.option("--scheme", type=click.Choice(["basic", "gray", "pggray", "twelvebody-gray"]),
              required=True)
@click.option("--bits", required=True)
@click.option("--pg-chain", is_flag=True)
@click.pass_context
def decode(ctx, catalog_path, space_path, scheme, bits, pg_chain):
    """Decode a bitstring; prints 'invalid' for out-of-space codes."""
    resp = _client(ctx).post("/decode", models.DecodeRequest(
        catalog_text=_catalog_text(catalog_path),
        scheme=scheme,
        space=_load_space(space_path) if space_path else None,
        bits=bits,
        pg_chain=pg_chain,
    ))
    if not resp.valid:
        click.echo("invalid")
        sys.exit(1)
    if resp.triple is not None:
        click.echo(f"triple: {resp.triple[0]},{resp.triple[1]},{resp.triple[2]}")
    click.echo("config: " + ",".join(str(v) for v in resp.config))


@main.command()
@click.option("--catalog", "catalog_path", type=click.Path(exists=True), default=None)
@click.option("--space", "space_path", type=click.Path(exists=True), default=None)
@click.option("--solver", type=click.Choice(["ga1", "ga2", "gau", "sa", "pt"]), required=True)
@click.option("--budget", default=240, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--dev", "dev_mode", type=click.Choice(["yes", "no"]), default="yes",
              help="Full-space dev mode when no space document is given.")
@click.option("--twelve-body", is_flag=True, help="Optimize the raw 12-parameter formulation.")
@click.option("--no-cache", is_flag=True, help="Count duplicate GA configurations against the budget.")
@click.option("--trace", "trace_path", type=click.Path(), default=None)
@click.pass_context
def solve(ctx, catalog_path, space_path, solver, budget, seed, dev_mode, twelve_body,
          no_cache, trace_path):
    """Run one seeded conventional solver to its evaluation budget."""
    resp = _client(ctx).post("/solve", models.SolveRequest(
        catalog_text=_catalog_text(catalog_path),
        solver=solver,
        budget=budget,
        seed=seed,
        space=_load_space(space_path) if space_path else None,
        dev_mode=dev_mode,
        twelve_body=twelve_body,
        cache=not no_cache,
    ))
    if trace_path:
        _write_trace(resp.trace, trace_path)
        click.echo(f"trace written to {trace_path}")
    click.echo(f"{resp.solver} on {resp.space} ({resp.parameterization}): "
               f"best cost {resp.best_cost}")
    click.echo("best config: " + ",".join(str(v) for v in resp.best_config))


@main.command()
@click.option("--catalog", "catalog_path", type=click.Path(exists=True), default=None)
@click.option("--space", "space_path", type=click.Path(exists=True), required=True)
@click.option("--scheme", type=click.Choice(["basic", "gray", "pggray"]), default="pggray",
              show_default=True)
@click.option("--solver", type=click.Choice(["ga1", "ga2", "gau", "sa", "pt"]), required=True)
@click.option("--budget", default=240, show_default=True)
@click.option("--seed-evals", default=100, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--chi", default=6, show_default=True, help="Bond-dimension cap of the generative model.")
@click.option("--select", "selection", type=click.Choice(["probability", "random"]),
              default="probability", show_default=True)
@click.option("--pg-chain", is_flag=True)
@click.option("--trace", "trace_path", type=click.Path(), default=None)
@click.pass_context
def boost(ctx, catalog_path, space_path, scheme, solver, budget, seed_evals, seed, chi,
          selection, pg_chain, trace_path):
    """Boost a conventional solver with the generative model."""
    resp = _client(ctx).post("/boost", models.BoostRequest(
        catalog_text=_catalog_text(catalog_path),
        solver=solver,
        scheme=scheme,
        space=_load_space(space_path),
        budget=budget,
        seed_evals=seed_evals,
        seed=seed,
        chi=chi,
        selection=selection,
        pg_chain=pg_chain,
    ))
    if trace_path:
        _write_trace(resp.trace, trace_path)
        click.echo(f"trace written to {trace_path}")
    click.echo(f"{resp.solver} prefix best {resp.prefix_best_cost} -> "
               f"boosted ({resp.scheme}) best {resp.best_cost}")
    click.echo("best config: " + ",".join(str(v) for v in resp.best_config))


@main.command()
@click.option("--catalog", "catalog_path", type=click.Path(exists=True), default=None)
@click.option("--roots", type=int, required=True)
@click.option("--branches", type=int, required=True)
@click.option("--dev", "dev_mode", type=click.Choice(["yes", "no"]), default="yes")
@click.pass_context
def pgco(ctx, catalog_path, roots, branches, dev_mode):
    """Production-guided forest search over stage states."""
    resp = _client(ctx).post("/pgco", models.PgcoRequest(
        catalog_text=_catalog_text(catalog_path),
        n_roots=roots, n_branches=branches, dev_mode=dev_mode))
    click.echo(f"explored {resp.explored} configurations")
    click.echo(f"best cost {resp.cost.total} (production {resp.cost.production_term}, "
               f"idle {resp.cost.idle_term})")
    click.echo("best config: " + ",".join(str(v) for v in resp.best_config))


@main.command()
@click.option("--grid", "grid_path", type=click.Path(exists=True), required=True,
              help="TOML grid description.")
@click.option("--catalog", "catalog_path", type=click.Path(exists=True), default=None)
@click.option("--out", "out_dir", type=click.Path(), required=True)
def bench(grid_path, catalog_path, out_dir):
    """Run an experiment grid locally and write traces, summaries and tables."""
    from .bench import (
        bond_sweep, load_grid, run_formulation_comparison, run_grid,
        convergence_curves, write_bond_sweep_csv, write_convergence_csv,
    )
    from .catalog import default_catalog, load_catalog

    catalog = load_catalog(catalog_path) if catalog_path else default_catalog()
    grid = load_grid(grid_path)
    out = Path(out_dir)
    result = run_grid(grid, catalog, out_dir=out, progress=lambda msg: click.echo(msg))
    click.echo(f"grid done: {len(result.cells)} cells, {len(result.skipped)} skipped")
    if grid.chi_list:
        rows = bond_sweep(grid, catalog, result, grid.chi_list)
        write_bond_sweep_csv(rows, out / "bond_sweep.csv")
        click.echo("bond sweep written")
    if grid.compare_formulations:
        comparison = run_formulation_comparison(
            catalog, grid.solvers, grid.formulation_runs, grid.budget, grid.master_seed)
        for formulation, by_solver in comparison.items():
            curves = convergence_curves(by_solver, grid.budget)
            write_convergence_csv(curves, out / f"convergence_{formulation}.csv")
        click.echo("formulation comparison written")
    click.echo(f"outputs in {out}")


@main.group()
def mps():
    """Generative-model files: create, dump, reload."""


@mps.command("init")
@click.option("--sites", type=int, required=True)
@click.option("--chi", type=int, default=6, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), required=True)
def mps_init(sites, chi, seed, out):
    """Create a random normalized model."""
    import numpy as np

    from .mps import TrainParams, init_mps, save_mps

    model = init_mps(sites, TrainParams(chi_max=chi), np.random.default_rng(seed))
    save_mps(model, out)
    click.echo(f"wrote {out} (sites {sites}, bonds {model.bond_dimensions()})")


@mps.command("dump")
@click.option("--model", "model_path", type=click.Path(exists=True), required=True)
@click.option("--out", type=click.Path(), default=None)
def mps_dump(model_path, out):
    """Print (or rewrite) a model's canonical text form."""
    from .mps import dumps_mps, load_mps

    text = dumps_mps(load_mps(model_path))
    if out:
        Path(out).write_text(text)
        click.echo(f"wrote {out}")
    else:
        click.echo(text)


@mps.command("load")
@click.option("--model", "model_path", type=click.Path(exists=True), required=True)
@click.option("--out", type=click.Path(), required=True)
def mps_load(model_path, out):
    """Round-trip a model file through the codec (bit-exact)."""
    from .mps import load_mps, save_mps

    model = load_mps(model_path)
    save_mps(model, out)
    click.echo(f"loaded {model.n_sites} sites, bonds {model.bond_dimensions()}; wrote {out}")


if __name__ == "__main__":
    main()
