"""FastAPI wiring around the service handlers."""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from . import handlers, models


def create_app() -> FastAPI:
    app = FastAPI(
        title="lineopt",
        description="Assembly-line planning: simulation, space reduction, "
                    "encodings, metaheuristic solvers, and a generative booster.",
    )

    def guard(fn, *args):
        try:
            return fn(*args)
        except handlers.ServiceError as err:
            raise HTTPException(status_code=err.status, detail=err.detail) from err

    @app.get("/health", response_model=models.HealthResponse)
    def health():
        return handlers.health()

    @app.post("/catalog/dump", response_model=models.CatalogDumpResponse)
    def catalog_dump(req: models.CatalogRequest):
        return guard(handlers.catalog_dump, req)

    @app.post("/simulate", response_model=models.SimulateResponse)
    def simulate(req: models.SimulateRequest):
        return guard(handlers.simulate_config, req)

    @app.post("/reduce", response_model=models.ReduceResponse)
    def reduce(req: models.ReduceRequest):
        return guard(handlers.reduce_endpoint, req)

    @app.post("/encode", response_model=models.EncodeResponse)
    def encode(req: models.EncodeRequest):
        return guard(handlers.encode, req)

    @app.post("/decode", response_model=models.DecodeResponse)
    def decode(req: models.DecodeRequest):
        return guard(handlers.decode, req)

    @app.post("/solve", response_model=models.SolveResponse)
    def solve(req: models.SolveRequest):
        return guard(handlers.solve, req)

    @app.post("/boost", response_model=models.BoostResponse)
    def boost(req: models.BoostRequest):
        return guard(handlers.boost_endpoint, req)

    @app.post("/pgco", response_model=models.PgcoResponse)
    def pgco(req: models.PgcoRequest):
        return guard(handlers.pgco, req)

    return app


app = create_app()
