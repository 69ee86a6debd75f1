"""Free-stage machinery: per-stage production estimates that ignore buffer
coupling, margin-based reduction of the solution space, stage-state indexing
for the three-body view, and the production-guided forest search (PGCO).

The free-stage estimate of a stage is the production it would achieve with
unlimited input and output; the minimum over stages upper-bounds the true
annual production of any configuration.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .catalog import N_MONTHS, ProblemCatalog, scheduled_hours
from .simulate import CostValue, LineConfig, ShopState

DEV_MODES = ("noDev", "yesDev")
N_STAGES = 3


class InfeasibleMarginError(ValueError):
    """No stage state estimates within the requested margin of the target."""


def normalize_dev_mode(value: str) -> str:
    alias = {"no": "noDev", "nodev": "noDev", "yes": "yesDev", "yesdev": "yesDev"}
    mode = alias.get(value.lower(), value)
    if mode not in DEV_MODES:
        raise ValueError(f"unknown dev mode {value!r}, expected noDev or yesDev")
    return mode


def monthly_hours_table(catalog: ProblemCatalog) -> dict[int, tuple[float, ...]]:
    """Scheduled hours per (shift id, month)."""
    return {
        s.id: tuple(scheduled_hours(s, m, catalog) for m in range(1, N_MONTHS + 1))
        for s in catalog.shifts
    }


@dataclass(frozen=True)
class StageEstimate:
    stage: int
    monthly: tuple[float, ...]
    annual: float


def estimate_production(
    catalog: ProblemCatalog, stage: int, stage_state: tuple[ShopState, ShopState]
) -> StageEstimate:
    """Free-stage estimate: per month, both shops' scheduled hours times their
    rates, ignoring buffers. Identical formula for every stage."""
    if not 1 <= stage <= N_STAGES:
        raise ValueError(f"stage must be 1..{N_STAGES}")
    a, b = stage_state
    ha = [scheduled_hours(catalog.shift(a.shift_id), m, catalog) for m in range(1, N_MONTHS + 1)]
    hb = [scheduled_hours(catalog.shift(b.shift_id), m, catalog) for m in range(1, N_MONTHS + 1)]
    ra = catalog.rate(a.rate_id).cars_per_hour
    rb = catalog.rate(b.rate_id).cars_per_hour
    monthly = tuple(ha[m] * ra + hb[m] * rb for m in range(N_MONTHS))
    annual = 0.0
    for v in monthly:
        annual += v
    return StageEstimate(stage=stage, monthly=monthly, annual=annual)


class StageIndexer:
    """Enumeration of single-stage states (a pair of shop states) ordered by
    ideal weekly output in cars, ascending.

    noDev pins both shops' rates to the catalog's nominal option (225 states
    on a full catalog); yesDev frees them (5625 states).
    """

    def __init__(self, catalog: ProblemCatalog, dev_mode: str):
        self.dev_mode = normalize_dev_mode(dev_mode)
        self.catalog = catalog
        if self.dev_mode == "noDev":
            rate_ids: Sequence[int] = (catalog.nominal_rate_id,)
        else:
            rate_ids = [r.id for r in catalog.rates]
        weekly = {s.id: s.weekly_hours for s in catalog.shifts}
        rate = {r.id: r.cars_per_hour for r in catalog.rates}
        entries = []
        for s1 in catalog.shifts:
            for r1 in rate_ids:
                for s2 in catalog.shifts:
                    for r2 in rate_ids:
                        output = weekly[s1.id] * rate[r1] + weekly[s2.id] * rate[r2]
                        entries.append((output, s1.id, r1, s2.id, r2))
        entries.sort()
        self.states: tuple[tuple[ShopState, ShopState], ...] = tuple(
            (ShopState(s1, r1), ShopState(s2, r2)) for _, s1, r1, s2, r2 in entries
        )
        self.ideal_weekly_output: tuple[float, ...] = tuple(e[0] for e in entries)
        self._index_of = {state: i for i, state in enumerate(self.states)}
        self._annual: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.states)

    def index_of(self, state: tuple[ShopState, ShopState]) -> int:
        """Index of a stage state; KeyError if outside this dev mode."""
        return self._index_of[state]

    def annual_estimates(self) -> np.ndarray:
        """Annual free-stage estimate per indexed state (stage-independent)."""
        if self._annual is None:
            hours = monthly_hours_table(self.catalog)
            rate = {r.id: r.cars_per_hour for r in self.catalog.rates}
            out = np.empty(len(self.states))
            for i, (a, b) in enumerate(self.states):
                ha, hb = hours[a.shift_id], hours[b.shift_id]
                ra, rb = rate[a.rate_id], rate[b.rate_id]
                annual = 0.0
                for m in range(N_MONTHS):
                    annual += ha[m] * ra + hb[m] * rb
                out[i] = annual
            self._annual = out
        return self._annual


@dataclass(frozen=True)
class ReducedSpace:
    """Per-stage allowed stage states within margin of the annual target,
    with flat-index arithmetic over the allowed triples.

    ``allowed[k]`` lists indexer indices in indexer order; a solver-facing
    triple is per-stage positions into these lists.
    """

    indexer: StageIndexer
    margin: float
    annual_target: float
    allowed: tuple[tuple[int, ...], tuple[int, ...], tuple[int, ...]]

    @property
    def dev_mode(self) -> str:
        return self.indexer.dev_mode

    @property
    def sizes(self) -> tuple[int, int, int]:
        return tuple(len(a) for a in self.allowed)  # type: ignore[return-value]

    @property
    def total_size(self) -> int:
        s = self.sizes
        return s[0] * s[1] * s[2]

    def stage_state(self, stage: int, position: int) -> tuple[ShopState, ShopState]:
        return self.indexer.states[self.allowed[stage - 1][position]]

    def config(self, triple: Sequence[int]) -> LineConfig:
        shops = []
        for k in range(N_STAGES):
            pair = self.indexer.states[self.allowed[k][triple[k]]]
            shops.extend(pair)
        return LineConfig(tuple(shops))

    def triple_of(self, config: LineConfig) -> tuple[int, int, int] | None:
        """Per-stage positions of a config, or None if outside the space."""
        triple = []
        for k in range(N_STAGES):
            pair = (config.shops[2 * k], config.shops[2 * k + 1])
            idx = self.indexer._index_of.get(pair)
            if idx is None:
                return None
            pos = self._positions[k].get(idx)
            if pos is None:
                return None
            triple.append(pos)
        return tuple(triple)  # type: ignore[return-value]

    @property
    def _positions(self) -> tuple[dict[int, int], ...]:
        cached = getattr(self, "_positions_cache", None)
        if cached is None:
            cached = tuple({idx: pos for pos, idx in enumerate(a)} for a in self.allowed)
            object.__setattr__(self, "_positions_cache", cached)
        return cached

    def flat_index(self, triple: Sequence[int]) -> int:
        s = self.sizes
        return (triple[0] * s[1] + triple[1]) * s[2] + triple[2]

    def triple_at(self, flat: int) -> tuple[int, int, int]:
        s = self.sizes
        if not 0 <= flat < self.total_size:
            raise IndexError(f"flat index {flat} outside space of size {self.total_size}")
        i3 = flat % s[2]
        rest = flat // s[2]
        return (rest // s[1], rest % s[1], i3)

    def stage_estimates(self, stage: int) -> np.ndarray:
        """Annual estimates of the allowed states of one stage, in order."""
        table = self.indexer.annual_estimates()
        return table[list(self.allowed[stage - 1])]


def build_indexer(catalog: ProblemCatalog, dev_mode: str) -> StageIndexer:
    return StageIndexer(catalog, dev_mode)


def reduce_space(
    catalog: ProblemCatalog,
    margin: float,
    dev_mode: str,
    indexer: StageIndexer | None = None,
) -> ReducedSpace:
    """Filter stage states to those whose annual estimate lies within
    ``margin`` of the annual target. ``margin >= 1.0`` disables filtering
    (the full space)."""
    if margin <= 0:
        raise ValueError("margin must be positive")
    if indexer is None:
        indexer = StageIndexer(catalog, dev_mode)
    target = catalog.annual_target
    if margin >= 1.0:
        allowed_one = tuple(range(len(indexer)))
        return ReducedSpace(indexer, margin, target, (allowed_one,) * 3)
    estimates = indexer.annual_estimates()
    lo, hi = 1.0 - margin, 1.0 + margin
    allowed_one = tuple(
        i for i in range(len(indexer)) if lo <= estimates[i] / target <= hi
    )
    if not allowed_one:
        raise InfeasibleMarginError(
            f"margin {margin} admits no stage states (target {target})"
        )
    # the estimate formula is stage-symmetric, so all stages share one list
    return ReducedSpace(indexer, margin, target, (allowed_one,) * 3)


def full_space(catalog: ProblemCatalog, dev_mode: str) -> ReducedSpace:
    return reduce_space(catalog, 1.0, dev_mode)


def min_stage_estimate(catalog: ProblemCatalog, config: LineConfig) -> float:
    """Upper bound on annual production: minimum stage estimate."""
    return min(
        estimate_production(catalog, k, config.stage_pair(k)).annual
        for k in (1, 2, 3)
    )


def pgco_search(
    catalog: ProblemCatalog,
    n_roots: int,
    n_branches: int,
    evaluator: Callable[[LineConfig], CostValue],
    dev_mode: str = "yesDev",
) -> tuple[LineConfig, CostValue, int]:
    """Production-guided forest search.

    Roots are the ``n_roots`` first-stage states whose estimate is closest to
    the annual target; each root gets the ``n_branches`` second- and
    third-stage states closest to the root's own estimate. All generated
    triples are evaluated exhaustively; first-found minimum wins ties.
    """
    if n_roots < 1 or n_branches < 1:
        raise ValueError("n_roots and n_branches must be >= 1")
    indexer = StageIndexer(catalog, dev_mode)
    estimates = indexer.annual_estimates()
    target = catalog.annual_target
    order = sorted(range(len(indexer)), key=lambda i: (abs(estimates[i] - target), i))
    roots = order[: min(n_roots, len(indexer))]

    configs: list[LineConfig] = []
    for root in roots:
        near = sorted(range(len(indexer)), key=lambda i: (abs(estimates[i] - estimates[root]), i))
        branches = near[: min(n_branches, len(indexer))]
        pair1 = indexer.states[root]
        for b2 in branches:
            pair2 = indexer.states[b2]
            for b3 in branches:
                pair3 = indexer.states[b3]
                configs.append(LineConfig(pair1 + pair2 + pair3))

    many = getattr(evaluator, "many", None)
    costs = many(configs) if many is not None else [evaluator(c) for c in configs]
    best = 0
    for i in range(1, len(configs)):
        if costs[i].total < costs[best].total:
            best = i
    return configs[best], costs[best], len(configs)
