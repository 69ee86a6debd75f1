"""Endpoint logic, independent of the HTTP layer.

Every handler takes a request model and returns a response model; the CLI
calls them directly in local mode, and ``app.py`` wires them to routes. A
``ServiceError`` carries the HTTP status the app should answer with.
"""

from __future__ import annotations

import numpy as np

from .. import __version__
from ..catalog import CatalogError, ProblemCatalog, default_catalog, dumps_catalog, loads_catalog
from ..encoding import EncodingScheme
from ..evaluation import CachedEvaluator, Evaluator
from ..freestage import (
    InfeasibleMarginError,
    ReducedSpace,
    StageIndexer,
    normalize_dev_mode,
    pgco_search,
    reduce_space,
)
from ..geo import GeoParams, boost
from ..mps import TrainParams
from ..simulate import LineConfig, ShopState, cost, simulate
from ..solvers import SOLVER_IDS, run_solver
from ..spaces import ThreeBodySpace, TwelveBodySpace
from . import models


class ServiceError(Exception):
    def __init__(self, status: int, detail: str):
        super().__init__(detail)
        self.status = status
        self.detail = detail


def _catalog(req: models.CatalogRequest) -> ProblemCatalog:
    if req.catalog_text is None:
        return default_catalog()
    try:
        return loads_catalog(req.catalog_text)
    except CatalogError as err:
        raise ServiceError(422, f"catalog: {err}") from err


def _config(values: list[int]) -> LineConfig:
    if len(values) != 12:
        raise ServiceError(422, "config must list 12 integers: s1,r1,...,s6,r6")
    try:
        return LineConfig(tuple(ShopState(values[2 * j], values[2 * j + 1]) for j in range(6)))
    except ValueError as err:
        raise ServiceError(422, str(err)) from err


def _interleaved(config: LineConfig) -> list[int]:
    out: list[int] = []
    for shop in config.shops:
        out.extend((shop.shift_id, shop.rate_id))
    return out


def space_to_doc(space: ReducedSpace) -> models.SpaceDoc:
    stages = []
    for k in range(3):
        rows = []
        for idx in space.allowed[k]:
            a, b = space.indexer.states[idx]
            rows.append((a.shift_id, b.shift_id, a.rate_id, b.rate_id))
        stages.append(rows)
    return models.SpaceDoc(
        dev_mode=space.dev_mode,
        margin=space.margin,
        annual_target=space.annual_target,
        total_size=space.total_size,
        stages=stages,
    )


def space_from_doc(doc: models.SpaceDoc, catalog: ProblemCatalog) -> ReducedSpace:
    if doc.format != "lineopt-space/1":
        raise ServiceError(422, f"unknown space format {doc.format!r}")
    dev = normalize_dev_mode(doc.dev_mode)
    indexer = StageIndexer(catalog, dev)
    allowed = []
    for k, rows in enumerate(doc.stages):
        indices = []
        for s1, s2, r1, r2 in rows:
            try:
                indices.append(indexer.index_of((ShopState(s1, r1), ShopState(s2, r2))))
            except KeyError:
                raise ServiceError(
                    422, f"stage {k + 1}: state ({s1},{s2},{r1},{r2}) not in {dev} indexer"
                ) from None
        if not indices:
            raise ServiceError(422, f"stage {k + 1}: empty allowed list")
        if any(b <= a for a, b in zip(indices, indices[1:])):
            raise ServiceError(422, f"stage {k + 1}: states not in indexer order")
        allowed.append(tuple(indices))
    if len(allowed) != 3:
        raise ServiceError(422, "space document must list 3 stages")
    space = ReducedSpace(indexer, doc.margin, doc.annual_target, tuple(allowed))
    if space.total_size != doc.total_size:
        raise ServiceError(
            422, f"total_size {doc.total_size} does not match stage lists ({space.total_size})"
        )
    return space


def health() -> models.HealthResponse:
    return models.HealthResponse(status="ok", version=__version__)


def catalog_dump(req: models.CatalogRequest) -> models.CatalogDumpResponse:
    cat = _catalog(req)
    return models.CatalogDumpResponse(
        catalog_text=dumps_catalog(cat),
        summary=models.CatalogSummary(
            shifts=len(cat.shifts),
            rates=len(cat.rates),
            nominal_rate_id=cat.nominal_rate_id,
            annual_target=cat.annual_target,
            buffer_capacities=cat.buffer_capacities,
            idle_weight=cat.idle_weight,
            weekly_hours=[s.weekly_hours for s in cat.shifts],
        ),
    )


def simulate_config(req: models.SimulateRequest) -> models.SimulateResponse:
    cat = _catalog(req)
    config = _config(req.config)
    try:
        config.validate_against(cat)
    except ValueError as err:
        raise ServiceError(422, str(err)) from err
    record: list | None = [] if req.include_trace else None
    result = simulate(cat, config, record=record)
    value = cost(result, cat)
    trace = None
    if record is not None:
        trace = [
            models.TraceStep(
                step=row[0], hour=row[1], produced=list(row[2:8]),
                idle_flags=list(row[8:14]), buffer1=row[14], buffer2=row[15],
            )
            for row in record
        ]
    return models.SimulateResponse(
        monthly_production=list(result.monthly_production),
        idle_hours=[list(m) for m in result.idle_hours],
        final_buffers=result.final_buffers,
        cost=models.CostBody(
            total=value.total, production_term=value.production_term, idle_term=value.idle_term
        ),
        trace=trace,
    )


def reduce_endpoint(req: models.ReduceRequest) -> models.ReduceResponse:
    cat = _catalog(req)
    try:
        space = reduce_space(cat, req.margin, normalize_dev_mode(req.dev_mode))
    except InfeasibleMarginError as err:
        raise ServiceError(409, str(err)) from err
    except ValueError as err:
        raise ServiceError(422, str(err)) from err
    return models.ReduceResponse(space=space_to_doc(space))


def _scheme(req, cat: ProblemCatalog) -> EncodingScheme:
    if req.scheme == "twelvebody-gray":
        return EncodingScheme("twelvebody-gray")
    if req.space is None:
        raise ServiceError(422, f"scheme {req.scheme!r} requires a space document")
    space = space_from_doc(req.space, cat)
    try:
        return EncodingScheme(req.scheme, space, pg_chain=req.pg_chain)
    except ValueError as err:
        raise ServiceError(422, str(err)) from err


def encode(req: models.EncodeRequest) -> models.EncodeResponse:
    cat = _catalog(req)
    scheme = _scheme(req, cat)
    try:
        if req.scheme == "twelvebody-gray":
            if req.config is None:
                raise ServiceError(422, "twelvebody-gray encodes a config, not a triple")
            bits = scheme.encode_config(_config(req.config))
        else:
            if req.triple is None:
                raise ServiceError(422, "three-body schemes encode a triple i,j,k")
            bits = scheme.encode_triple(req.triple)
    except (ValueError, IndexError) as err:
        raise ServiceError(422, str(err)) from err
    return models.EncodeResponse(bits=bits)


def decode(req: models.DecodeRequest) -> models.DecodeResponse:
    cat = _catalog(req)
    scheme = _scheme(req, cat)
    try:
        if req.scheme == "twelvebody-gray":
            config = scheme.decode_config(req.bits)
            if config is None:
                return models.DecodeResponse(valid=False)
            return models.DecodeResponse(valid=True, config=_interleaved(config))
        triple = scheme.decode_triple(req.bits)
    except ValueError as err:
        raise ServiceError(422, str(err)) from err
    if triple is None:
        return models.DecodeResponse(valid=False)
    return models.DecodeResponse(
        valid=True, triple=triple, config=_interleaved(scheme.space.config(triple))
    )


def _trace_rows(trace) -> list[models.TraceRow]:
    return [
        models.TraceRow(
            eval_index=e.eval_index,
            config=_interleaved(e.config),
            cost=e.cost,
            best_so_far=e.best_so_far,
        )
        for e in trace.entries
    ]


def solve(req: models.SolveRequest) -> models.SolveResponse:
    cat = _catalog(req)
    if req.solver not in SOLVER_IDS:
        raise ServiceError(422, f"unknown solver {req.solver!r}; choose from {SOLVER_IDS}")
    if req.twelve_body:
        if req.space is not None:
            raise ServiceError(422, "the twelve-body formulation takes no space document")
        space = TwelveBodySpace(cat)
    elif req.space is not None:
        space = ThreeBodySpace(space_from_doc(req.space, cat))
    else:
        space = ThreeBodySpace(reduce_space(cat, 1.0, normalize_dev_mode(req.dev_mode)))
    try:
        trace = run_solver(
            req.solver, space, req.budget, req.seed,
            CachedEvaluator(Evaluator(cat)), cache=req.cache,
        )
    except ValueError as err:
        raise ServiceError(422, str(err)) from err
    return models.SolveResponse(
        solver=req.solver,
        seed=req.seed,
        parameterization=space.parameterization,
        space=space.describe(),
        best_cost=trace.best_cost,
        best_config=_interleaved(trace.best_config),
        trace=_trace_rows(trace),
    )


def boost_endpoint(req: models.BoostRequest) -> models.BoostResponse:
    cat = _catalog(req)
    if req.solver not in SOLVER_IDS:
        raise ServiceError(422, f"unknown solver {req.solver!r}; choose from {SOLVER_IDS}")
    reduced = space_from_doc(req.space, cat)
    space = ThreeBodySpace(reduced)
    try:
        scheme = EncodingScheme(req.scheme, reduced, pg_chain=req.pg_chain)
    except ValueError as err:
        raise ServiceError(422, str(err)) from err
    evaluator = CachedEvaluator(Evaluator(cat))
    try:
        prefix = run_solver(req.solver, space, req.seed_evals, req.seed, evaluator)
        params = GeoParams(
            seed_evals=req.seed_evals,
            total_budget=req.budget,
            chi_max=req.chi,
            selection=req.selection,
            train=TrainParams(sweeps=req.train_sweeps, chi_max=req.chi),
        )
        trace = boost(prefix, scheme, params, evaluator,
                      np.random.default_rng(req.seed + (1 << 32)))
    except ValueError as err:
        raise ServiceError(422, str(err)) from err
    return models.BoostResponse(
        solver=req.solver,
        scheme=req.scheme,
        seed=req.seed,
        best_cost=trace.best_cost,
        best_config=_interleaved(trace.best_config),
        prefix_best_cost=prefix.best_cost,
        trace=_trace_rows(trace),
    )


def pgco(req: models.PgcoRequest) -> models.PgcoResponse:
    cat = _catalog(req)
    try:
        config, value, explored = pgco_search(
            cat, req.n_roots, req.n_branches,
            CachedEvaluator(Evaluator(cat)), dev_mode=normalize_dev_mode(req.dev_mode),
        )
    except ValueError as err:
        raise ServiceError(422, str(err)) from err
    return models.PgcoResponse(
        best_config=_interleaved(config),
        cost=models.CostBody(
            total=value.total, production_term=value.production_term, idle_term=value.idle_term
        ),
        explored=explored,
    )
