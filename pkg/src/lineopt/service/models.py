"""Request/response models of the HTTP service.

Catalogs travel as their canonical text form (``catalog_text``); omitting it
selects the shipped default. Reduced spaces travel as the space document
also written to ``space.json`` by the CLI.
"""

from __future__ import annotations

from pydantic import BaseModel, Field


class SpaceDoc(BaseModel):
    format: str = "lineopt-space/1"
    dev_mode: str
    margin: float
    annual_target: float
    total_size: int
    stages: list[list[tuple[int, int, int, int]]] = Field(
        description="per stage: allowed (shift1, shift2, rate1, rate2) tuples in indexer order"
    )


class CatalogRequest(BaseModel):
    catalog_text: str | None = None


class CatalogSummary(BaseModel):
    shifts: int
    rates: int
    nominal_rate_id: int
    annual_target: float
    buffer_capacities: tuple[int, int]
    idle_weight: float
    weekly_hours: list[float]


class CatalogDumpResponse(BaseModel):
    catalog_text: str
    summary: CatalogSummary


class SimulateRequest(CatalogRequest):
    config: list[int] = Field(description="s1,r1,...,s6,r6 interleaved shop fields")
    include_trace: bool = False


class CostBody(BaseModel):
    total: float
    production_term: float
    idle_term: float


class TraceStep(BaseModel):
    step: int
    hour: float
    produced: list[int]
    idle_flags: list[int]
    buffer1: int
    buffer2: int


class SimulateResponse(BaseModel):
    monthly_production: list[int]
    idle_hours: list[list[float]]
    final_buffers: tuple[int, int]
    cost: CostBody
    trace: list[TraceStep] | None = None


class ReduceRequest(CatalogRequest):
    margin: float
    dev_mode: str


class ReduceResponse(BaseModel):
    space: SpaceDoc


class EncodeRequest(CatalogRequest):
    scheme: str
    space: SpaceDoc | None = None  # None for the twelvebody-gray scheme
    triple: tuple[int, int, int] | None = None
    config: list[int] | None = None
    pg_chain: bool = False


class EncodeResponse(BaseModel):
    bits: str


class DecodeRequest(CatalogRequest):
    scheme: str
    space: SpaceDoc | None = None
    bits: str
    pg_chain: bool = False


class DecodeResponse(BaseModel):
    valid: bool
    triple: tuple[int, int, int] | None = None
    config: list[int] | None = None


class TraceRow(BaseModel):
    eval_index: int
    config: list[int]
    cost: float
    best_so_far: float


class SolveRequest(CatalogRequest):
    solver: str
    budget: int = 240
    seed: int = 0
    space: SpaceDoc | None = None
    dev_mode: str = "yesDev"  # used when no space document is given
    twelve_body: bool = False
    cache: bool = True


class SolveResponse(BaseModel):
    solver: str
    seed: int
    parameterization: str
    space: str
    best_cost: float
    best_config: list[int]
    trace: list[TraceRow]


class BoostRequest(CatalogRequest):
    solver: str
    scheme: str
    space: SpaceDoc
    budget: int = 240
    seed_evals: int = 100
    seed: int = 0
    chi: int = 6
    train_sweeps: int = 10
    selection: str = "probability"
    pg_chain: bool = False


class BoostResponse(BaseModel):
    solver: str
    scheme: str
    seed: int
    best_cost: float
    best_config: list[int]
    prefix_best_cost: float
    trace: list[TraceRow]


class PgcoRequest(CatalogRequest):
    n_roots: int
    n_branches: int
    dev_mode: str = "yesDev"


class PgcoResponse(BaseModel):
    best_config: list[int]
    cost: CostBody
    explored: int


class HealthResponse(BaseModel):
    status: str
    version: str
