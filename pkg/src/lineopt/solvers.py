"""Conventional black-box optimizers: three genetic-algorithm variants,
simulated annealing, and parallel tempering, with strict evaluation-budget
accounting and full traces.

Each solver is written as a generator that yields batches of configurations
and receives their costs, so the same engine can be driven one run at a time
(``run_solver``) or many runs in lockstep against a batching evaluator
(``bench`` does this). Within a run, repeated configurations are answered
from a memo and do not consume budget; ``cache=False`` restores raw
counting. Seeded runs are bit-reproducible: every random draw goes through
the run's own ``numpy`` generator in a fixed order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np

from .simulate import CostValue, LineConfig

SOLVER_IDS = ("ga1", "ga2", "gau", "sa", "pt")

CROSSOVER_BY_SOLVER = {"ga1": "one-point", "ga2": "two-point", "gau": "uniform"}


@dataclass(frozen=True)
class GAParams:
    population_size: int = 10
    tournament_size: int = 3
    selected: int = 9
    mutation_prob: float = 0.8
    crossover_prob: float = 0.8
    crossover_kind: str = "one-point"

    def __post_init__(self):
        if self.selected >= self.population_size:
            raise ValueError("selected must leave room for the elitism slot")
        if self.crossover_kind not in ("one-point", "two-point", "uniform"):
            raise ValueError(f"unknown crossover kind {self.crossover_kind!r}")


@dataclass(frozen=True)
class SAParams:
    t0: float = 50.0
    cooling_factor: float = 1.2  # temperature divided by this per iteration

    def __post_init__(self):
        if self.t0 <= 0 or self.cooling_factor <= 1:
            raise ValueError("t0 must be positive and cooling_factor > 1")


@dataclass(frozen=True)
class PTParams:
    replicas: int = 5
    updates_per_swap: int = 4
    beta_min: float = 0.1
    beta_max: float = 10.0

    @property
    def betas(self) -> tuple[float, ...]:
        return tuple(
            float(b)
            for b in np.logspace(math.log10(self.beta_min), math.log10(self.beta_max), self.replicas)
        )

    def __post_init__(self):
        if self.replicas < 2 or self.updates_per_swap < 1:
            raise ValueError("need >= 2 replicas and >= 1 update per swap")
        if not 0 < self.beta_min < self.beta_max:
            raise ValueError("betas must be positive and increasing")


@dataclass(frozen=True)
class TraceEntry:
    eval_index: int
    config: LineConfig
    cost: float
    best_so_far: float


@dataclass
class Trace:
    solver_id: str
    seed: int
    parameterization: str
    space: str
    entries: list[TraceEntry] = field(default_factory=list)

    @property
    def best_cost(self) -> float:
        return self.entries[-1].best_so_far

    @property
    def best_config(self) -> LineConfig:
        best = min(self.entries, key=lambda e: e.cost)
        return best.config

    def best_series(self, length: int) -> list[float]:
        """best_so_far at eval 1..length, held constant past the last entry."""
        series = [e.best_so_far for e in self.entries[:length]]
        while len(series) < length:
            series.append(series[-1])
        return series

    def prefix(self, count: int) -> "Trace":
        if len(self.entries) < count:
            raise ValueError(f"trace has {len(self.entries)} entries, need {count}")
        return Trace(self.solver_id, self.seed, self.parameterization, self.space,
                     list(self.entries[:count]))


def sa_acceptance_probability(previous_cost: float, proposed_cost: float, temperature: float) -> float:
    """min{1, exp((C_prev - C_new)/T)}."""
    delta = previous_cost - proposed_cost
    if delta >= 0:
        return 1.0
    return math.exp(delta / temperature)


def pt_swap_probability(cost_r: float, cost_r1: float, beta_r: float, beta_r1: float) -> float:
    """min{1, exp((C_r - C_{r+1})(beta_r - beta_{r+1}))}."""
    exponent = (cost_r - cost_r1) * (beta_r - beta_r1)
    if exponent >= 0:
        return 1.0
    return math.exp(exponent)


# ---------------------------------------------------------------------------
# Engines: generators yielding batches of configs, receiving lists of costs
# ---------------------------------------------------------------------------

def sa_engine(space, params: SAParams, rng: np.random.Generator) -> Iterator[list[LineConfig]]:
    """Single-site annealing. Draw order per iteration: proposal site and
    value, then one uniform for the acceptance decision."""
    current = space.random_config(rng)
    (current_cost,) = yield [current]
    temperature = params.t0
    while True:
        proposal = space.mutate(current, rng)
        (proposed_cost,) = yield [proposal]
        p = sa_acceptance_probability(current_cost, proposed_cost, temperature)
        if rng.random() < p:
            current, current_cost = proposal, proposed_cost
        temperature /= params.cooling_factor


def pt_engine(space, params: PTParams, rng: np.random.Generator) -> Iterator[list[LineConfig]]:
    """Parallel tempering: replicas at fixed temperatures do SA-style updates,
    then adjacent pairs attempt state swaps in index order."""
    betas = params.betas
    temperatures = [1.0 / b for b in betas]
    states = [space.random_config(rng) for _ in range(params.replicas)]
    costs = list((yield list(states)))
    while True:
        for _ in range(params.updates_per_swap):
            proposals = [space.mutate(states[r], rng) for r in range(params.replicas)]
            proposed_costs = list((yield proposals))
            for r in range(params.replicas):
                p = sa_acceptance_probability(costs[r], proposed_costs[r], temperatures[r])
                if rng.random() < p:
                    states[r], costs[r] = proposals[r], proposed_costs[r]
        for r in range(params.replicas - 1):
            p = pt_swap_probability(costs[r], costs[r + 1], betas[r], betas[r + 1])
            if rng.random() < p:
                states[r], states[r + 1] = states[r + 1], states[r]
                costs[r], costs[r + 1] = costs[r + 1], costs[r]


def _crossover(kind: str, a: list, b: list, rng: np.random.Generator) -> None:
    """Exchange genome segments in place."""
    n = len(a)
    if kind == "one-point":
        cut = 1 + int(rng.integers(n - 1))
        a[cut:], b[cut:] = b[cut:], a[cut:]
    elif kind == "two-point":
        points = rng.choice(n - 1, size=2, replace=False) + 1
        lo, hi = int(points.min()), int(points.max())
        a[lo:hi], b[lo:hi] = b[lo:hi], a[lo:hi]
    else:  # uniform
        for i in range(n):
            if rng.random() < 0.5:
                a[i], b[i] = b[i], a[i]


def ga_engine(space, params: GAParams, rng: np.random.Generator) -> Iterator[list[LineConfig]]:
    """Tournament GA with elitism.

    Per generation: select ``selected`` individuals by size-3 tournament,
    mutate each with ``mutation_prob`` (single-site move), cross consecutive
    pairs with ``crossover_prob`` (odd leftover passes through), then append
    the best individual seen so far. The elite re-enters as a memo hit, so
    it costs no budget under caching.
    """
    pop = [space.random_config(rng) for _ in range(params.population_size)]
    costs = list((yield list(pop)))
    best_i = min(range(len(pop)), key=lambda i: costs[i])
    elite, elite_cost = pop[best_i], costs[best_i]
    while True:
        chosen = []
        for _ in range(params.selected):
            aspirants = [int(rng.integers(len(pop))) for _ in range(params.tournament_size)]
            winner = min(aspirants, key=lambda i: costs[i])
            chosen.append(list(space.genome(pop[winner])))
        for genome in chosen:
            if rng.random() < params.mutation_prob:
                mutated = space.mutate(space.from_genome(genome), rng)
                genome[:] = space.genome(mutated)
        for i in range(0, params.selected - 1, 2):
            if rng.random() < params.crossover_prob:
                _crossover(params.crossover_kind, chosen[i], chosen[i + 1], rng)
        pop = [space.from_genome(g) for g in chosen] + [elite]
        costs = list((yield list(pop)))
        best_i = min(range(len(pop)), key=lambda i: costs[i])
        if costs[best_i] < elite_cost:
            elite, elite_cost = pop[best_i], costs[best_i]


def _ga_engine_factory(kind: str):
    def factory(space, params, rng):
        if params is None:
            params = GAParams(crossover_kind=kind)
        return ga_engine(space, params, rng)
    return factory


ENGINE_FACTORIES: dict[str, Callable] = {
    "ga1": _ga_engine_factory("one-point"),
    "ga2": _ga_engine_factory("two-point"),
    "gau": _ga_engine_factory("uniform"),
    "sa": lambda space, params, rng: sa_engine(space, params or SAParams(), rng),
    "pt": lambda space, params, rng: pt_engine(space, params or PTParams(), rng),
}

DEFAULT_PARAMS = {
    "ga1": lambda: GAParams(crossover_kind="one-point"),
    "ga2": lambda: GAParams(crossover_kind="two-point"),
    "gau": lambda: GAParams(crossover_kind="uniform"),
    "sa": SAParams,
    "pt": PTParams,
}


class RunState:
    """Drives one engine against an evaluation budget.

    ``pending()`` returns the configurations whose costs must be supplied by
    the caller's evaluator; ``supply(costs)`` feeds them back and appends
    trace entries. Two counting modes exist: ``unique`` (the GA default)
    answers configurations already evaluated in this run from a memo without
    consuming budget, while ``all`` (SA and PT, or any solver without
    caching) counts every proposal. A run finishes when the budget is spent,
    the whole space has been evaluated, the engine stops, or - under unique
    counting - the engine produces no new configuration for a long stretch.
    """

    STALL_LIMIT = 2000  # memo-only engine advances before giving up (unique mode)

    def __init__(self, engine, budget: int, total_size: int, count_unique: bool):
        if budget < 1:
            raise ValueError("budget must be >= 1")
        self.budget = budget
        self.total_size = total_size
        self.count_unique = count_unique
        self.memo: dict[tuple, float] = {}
        self.entries: list[TraceEntry] = []
        self.best = math.inf
        self.finished = False
        self._engine = engine
        self._batch: list[LineConfig] = []
        self._costs: list[float | None] = []
        self._await: list[int] = []
        self._truncated = False
        self._stall = 0
        try:
            self._batch = next(engine)
        except StopIteration:
            self.finished = True
        if not self.finished:
            self._resolve()

    def _key(self, config: LineConfig) -> tuple:
        return config.twelve_body()

    def _budget_left(self) -> int:
        return self.budget - len(self.entries)

    def _resolve(self) -> None:
        """Advance the engine until external costs are needed or the run ends."""
        while not self.finished:
            self._costs = [None] * len(self._batch)
            if self.count_unique:
                waiting = []
                seen_now: set[tuple] = set()
                for i, cfg in enumerate(self._batch):
                    key = self._key(cfg)
                    known = self.memo.get(key)
                    if known is not None:
                        self._costs[i] = known
                    elif key not in seen_now:
                        seen_now.add(key)
                        waiting.append(i)
                    # duplicates within the batch are filled after evaluation
            else:
                waiting = list(range(len(self._batch)))
            if len(waiting) > self._budget_left():
                # budget exhausts mid-batch: evaluate what fits, then stop
                waiting = waiting[: self._budget_left()]
                self._truncated = True
            self._await = waiting
            if waiting:
                self._stall = 0
                return
            if self._truncated:
                self._finish()
                return
            self._stall += 1
            if self._stall > self.STALL_LIMIT:
                self._finish()
                return
            self._fill_duplicates()
            self._send()
            if not self.finished and self.count_unique and len(self.memo) >= self.total_size:
                self._finish()

    def _fill_duplicates(self) -> None:
        for i, cfg in enumerate(self._batch):
            if self._costs[i] is None:
                self._costs[i] = self.memo[self._key(cfg)]

    def _send(self) -> None:
        try:
            self._batch = self._engine.send([float(c) for c in self._costs])
        except StopIteration:
            self._finish()

    def _finish(self) -> None:
        if not self.finished:
            self.finished = True
            self._engine.close()

    def pending(self) -> list[LineConfig]:
        if self.finished:
            return []
        return [self._batch[i] for i in self._await]

    def supply(self, costs: Sequence[float]) -> None:
        if self.finished:
            raise RuntimeError("run already finished")
        if len(costs) != len(self._await):
            raise ValueError(f"expected {len(self._await)} costs, got {len(costs)}")
        for i, value in zip(self._await, costs):
            value = float(value)
            self.best = min(self.best, value)
            self.entries.append(
                TraceEntry(len(self.entries) + 1, self._batch[i], value, self.best)
            )
            self._costs[i] = value
            self.memo[self._key(self._batch[i])] = value
        if self._truncated or len(self.entries) >= self.budget:
            self._finish()
            return
        if self.count_unique and len(self.memo) >= self.total_size:
            self._finish()
            return
        self._fill_duplicates()
        self._send()
        if not self.finished:
            self._resolve()


def _as_total(value) -> float:
    return value.total if isinstance(value, CostValue) else float(value)


def run_solver(
    solver_id: str,
    space,
    budget: int,
    seed,
    evaluator: Callable[[LineConfig], CostValue],
    params=None,
    cache: bool = True,
) -> Trace:
    """Run one seeded solver to its evaluation budget and return its trace."""
    if solver_id not in ENGINE_FACTORIES:
        raise ValueError(f"unknown solver {solver_id!r}; choose from {SOLVER_IDS}")
    if solver_id.startswith("ga"):
        if params is not None and params.crossover_kind != CROSSOVER_BY_SOLVER[solver_id]:
            raise ValueError(
                f"solver {solver_id} uses {CROSSOVER_BY_SOLVER[solver_id]} crossover, "
                f"params say {params.crossover_kind}"
            )
        pop = (params or GAParams()).population_size
        if budget < pop:
            raise ValueError(f"budget {budget} is below the GA population size {pop}")
    if solver_id == "pt" and budget < (params or PTParams()).replicas:
        raise ValueError("budget below the replica count")
    rng = np.random.default_rng(seed)
    engine = ENGINE_FACTORIES[solver_id](space, params, rng)
    # GA budgets count unique configurations (duplicates are memo hits);
    # SA and PT count every proposal, as each iteration is one evaluation.
    count_unique = cache and solver_id.startswith("ga")
    state = RunState(engine, budget, space.total_size, count_unique=count_unique)
    many = getattr(evaluator, "many", None)
    while not state.finished:
        batch = state.pending()
        if not batch:
            break
        if many is not None:
            values = many(batch)
        else:
            values = [evaluator(c) for c in batch]
        state.supply([_as_total(v) for v in values])
    seed_int = seed if isinstance(seed, int) else -1
    return Trace(
        solver_id=solver_id,
        seed=seed_int,
        parameterization=space.parameterization,
        space=space.describe(),
        entries=state.entries,
    )


def run_ga(space, params: GAParams | None, budget: int, seed, evaluator, cache: bool = True) -> Trace:
    params = params or GAParams()
    solver_id = {v: k for k, v in CROSSOVER_BY_SOLVER.items()}[params.crossover_kind]
    return run_solver(solver_id, space, budget, seed, evaluator, params, cache)


def run_sa(space, params: SAParams | None, budget: int, seed, evaluator, cache: bool = True) -> Trace:
    return run_solver("sa", space, budget, seed, evaluator, params or SAParams(), cache)


def run_pt(space, params: PTParams | None, budget: int, seed, evaluator, cache: bool = True) -> Trace:
    return run_solver("pt", space, budget, seed, evaluator, params or PTParams(), cache)


def random_config(space, rng: np.random.Generator) -> LineConfig:
    """Uniform draw from a search space (single-site move distribution's base)."""
    return space.random_config(rng)
