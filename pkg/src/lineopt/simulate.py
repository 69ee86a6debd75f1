"""Time-domain simulation of the 3-stage, 6-shop line with two storage lots.

The year is stepped at half-hour resolution. Stages are serviced
downstream-first (assembly, paint, body) and shop 1 before shop 2 within a
stage, so runs are reproducible. Shops carry fractional work-in-progress;
only whole cars enter or leave buffers. A scheduled shop that cannot complete
its attempted output (starved or blocked) accrues idle time proportional to
the missing part of the step.

``simulate`` processes one configuration; ``simulate_batch`` runs many
configurations lane-parallel with numpy and produces bit-identical results
lane by lane.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .catalog import N_MONTHS, N_SHOPS, ProblemCatalog, SLOTS_PER_DAY

# shop indices: 0,1 body; 2,3 paint; 4,5 assembly
SHOP_NAMES = ("body1", "body2", "paint1", "paint2", "asm1", "asm2")


@dataclass(frozen=True)
class ShopState:
    shift_id: int
    rate_id: int

    def __post_init__(self):
        if not 1 <= self.shift_id:
            raise ValueError(f"shift_id must be >= 1, got {self.shift_id}")
        if not 1 <= self.rate_id:
            raise ValueError(f"rate_id must be >= 1, got {self.rate_id}")


@dataclass(frozen=True)
class LineConfig:
    """One assembly-line state: 6 shops ordered body1, body2, paint1,
    paint2, asm1, asm2."""

    shops: tuple[ShopState, ShopState, ShopState, ShopState, ShopState, ShopState]

    def __post_init__(self):
        if len(self.shops) != N_SHOPS:
            raise ValueError(f"expected {N_SHOPS} shops, got {len(self.shops)}")

    @classmethod
    def from_ids(cls, ids: Sequence[int]) -> "LineConfig":
        """Build from 12 integers grouped as 6 shift ids then 6 rate ids."""
        if len(ids) != 12:
            raise ValueError(f"expected 12 integers, got {len(ids)}")
        return cls(tuple(ShopState(ids[j], ids[6 + j]) for j in range(N_SHOPS)))

    def twelve_body(self) -> tuple[int, ...]:
        """The 12-integer view: 6 shift ids followed by 6 rate ids."""
        return tuple(s.shift_id for s in self.shops) + tuple(s.rate_id for s in self.shops)

    def stage_pair(self, stage: int) -> tuple[ShopState, ShopState]:
        """The two shops of stage 1, 2 or 3."""
        return self.shops[2 * (stage - 1)], self.shops[2 * (stage - 1) + 1]

    def validate_against(self, catalog: ProblemCatalog) -> None:
        for s in self.shops:
            if s.shift_id > len(catalog.shifts) or s.rate_id > len(catalog.rates):
                raise ValueError(f"shop state {s} outside catalog ranges")


@dataclass(frozen=True)
class SimResult:
    monthly_production: tuple[int, ...]  # cars completing assembly, per month
    idle_hours: tuple[tuple[float, ...], ...]  # [shop][month]
    final_buffers: tuple[int, int]

    def annual_production(self) -> int:
        return sum(self.monthly_production)

    def total_idle(self) -> float:
        total = 0.0
        for shop in self.idle_hours:
            for h in shop:
                total += h
        return total


@dataclass(frozen=True)
class CostValue:
    total: float
    production_term: float
    idle_term: float


class _Compiled:
    """Per-catalog slot tables shared by every simulation."""

    def __init__(self, catalog: ProblemCatalog):
        lengths = catalog.calendar
        n_days = sum(lengths)
        self.n_slots = n_days * SLOTS_PER_DAY
        weekday = (catalog.start_weekday + np.arange(n_days)) % 7
        self.month_slot_ranges = []
        day0 = 0
        for m in range(N_MONTHS):
            self.month_slot_ranges.append(
                (day0 * SLOTS_PER_DAY, (day0 + lengths[m]) * SLOTS_PER_DAY)
            )
            day0 += lengths[m]
        self.activity: dict[int, np.ndarray] = {}
        for shift in catalog.shifts:
            pattern = np.asarray(shift.weekly_pattern, dtype=np.uint8).reshape(7, SLOTS_PER_DAY)
            self.activity[shift.id] = pattern[weekday].reshape(-1)
        self.rate_value = {r.id: r.cars_per_hour for r in catalog.rates}


_compiled_cache: "weakref.WeakKeyDictionary[ProblemCatalog, _Compiled]" = weakref.WeakKeyDictionary()


def _compiled(catalog: ProblemCatalog) -> _Compiled:
    comp = _compiled_cache.get(catalog)
    if comp is None:
        comp = _Compiled(catalog)
        _compiled_cache[catalog] = comp
    return comp


def simulate(
    catalog: ProblemCatalog,
    config: LineConfig,
    record: list | None = None,
) -> SimResult:
    """Deterministic full-year simulation of one configuration.

    When ``record`` is a list, a per-step trace row
    (step, hour, produced x6, idle flag x6, buffer1, buffer2) is appended
    for every step.
    """
    comp = _compiled(catalog)
    act = [comp.activity[s.shift_id] for s in config.shops]
    att = [comp.rate_value[s.rate_id] * 0.5 for s in config.shops]
    inv = [0.5 / a for a in att]
    cap1, cap2 = catalog.buffer_capacities

    frac = [0.0] * N_SHOPS
    b1 = b2 = 0
    done = [0] * N_SHOPS  # whole cars completed per shop, cumulative
    monthly_production: list[int] = []
    idle = [[0.0] * N_MONTHS for _ in range(N_SHOPS)]
    # downstream-first servicing; shop 1 before shop 2 within each stage
    for month in range(N_MONTHS):
        lo, hi = comp.month_slot_ranges[month]
        p_month = 0
        idle_month = [0.0] * N_SHOPS
        for step in range(lo, hi):
            if record is not None:
                produced_row = [0] * N_SHOPS
                idle_row = [0] * N_SHOPS
            # assembly: consumes buffer 2, output unbounded
            for j in (4, 5):
                if act[j][step]:
                    q = frac[j] + att[j]
                    n = int(q)
                    n_ok = n if n <= b2 else b2
                    if n_ok < n:
                        idle_month[j] += 0.5 - n_ok * inv[j]
                        frac[j] = 0.0
                    else:
                        frac[j] = q - n
                    b2 -= n_ok
                    done[j] += n_ok
                    p_month += n_ok
                    if record is not None:
                        produced_row[j] = n_ok
                        idle_row[j] = 1 if n_ok < n else 0
            # paint: consumes buffer 1, fills buffer 2
            for j in (2, 3):
                if act[j][step]:
                    q = frac[j] + att[j]
                    n = int(q)
                    n_ok = n if n <= b1 else b1
                    room = cap2 - b2
                    if n_ok > room:
                        n_ok = room
                    if n_ok < n:
                        idle_month[j] += 0.5 - n_ok * inv[j]
                        frac[j] = 0.0
                    else:
                        frac[j] = q - n
                    b1 -= n_ok
                    b2 += n_ok
                    done[j] += n_ok
                    if record is not None:
                        produced_row[j] = n_ok
                        idle_row[j] = 1 if n_ok < n else 0
            # body: raw input unbounded, fills buffer 1
            for j in (0, 1):
                if act[j][step]:
                    q = frac[j] + att[j]
                    n = int(q)
                    room = cap1 - b1
                    n_ok = n if n <= room else room
                    if n_ok < n:
                        idle_month[j] += 0.5 - n_ok * inv[j]
                        frac[j] = 0.0
                    else:
                        frac[j] = q - n
                    b1 += n_ok
                    done[j] += n_ok
                    if record is not None:
                        produced_row[j] = n_ok
                        idle_row[j] = 1 if n_ok < n else 0
            if record is not None:
                record.append((step, step * 0.5, *produced_row, *idle_row, b1, b2))
        monthly_production.append(p_month)
        for j in range(N_SHOPS):
            idle[j][month] = idle_month[j]

    _check_conservation(done, b1, b2)
    return SimResult(
        monthly_production=tuple(monthly_production),
        idle_hours=tuple(tuple(row) for row in idle),
        final_buffers=(b1, b2),
    )


def _check_conservation(done: Sequence[int], b1: int, b2: int) -> None:
    body, paint, asm = done[0] + done[1], done[2] + done[3], done[4] + done[5]
    if body != b1 + paint or paint != b2 + asm:
        raise RuntimeError(
            f"car conservation violated: body={body} paint={paint} asm={asm} buffers=({b1},{b2})"
        )


def simulate_batch(catalog: ProblemCatalog, configs: Sequence[LineConfig]) -> list[SimResult]:
    """Simulate many configurations lane-parallel.

    Lane ``i`` is bit-identical to ``simulate(catalog, configs[i])`` and
    independent of its batch companions.
    """
    if not configs:
        return []
    comp = _compiled(catalog)
    B = len(configs)
    act = np.empty((N_SHOPS, comp.n_slots, B), dtype=np.uint8)
    att = np.empty((N_SHOPS, B))
    for i, cfg in enumerate(configs):
        for j, s in enumerate(cfg.shops):
            act[j, :, i] = comp.activity[s.shift_id]
            att[j, i] = comp.rate_value[s.rate_id] * 0.5
    inv = 0.5 / att
    cap1, cap2 = catalog.buffer_capacities

    frac = np.zeros((N_SHOPS, B))
    b1 = np.zeros(B, dtype=np.int64)
    b2 = np.zeros(B, dtype=np.int64)
    done = np.zeros((N_SHOPS, B), dtype=np.int64)
    prod = np.zeros((N_MONTHS, B), dtype=np.int64)
    idle = np.zeros((N_MONTHS, N_SHOPS, B))

    # steps where no lane schedules any shop leave all state untouched
    step_has_work = act.any(axis=(0, 2))
    for month in range(N_MONTHS):
        lo, hi = comp.month_slot_ranges[month]
        p_month = np.zeros(B, dtype=np.int64)
        idle_month = np.zeros((N_SHOPS, B))
        for step in range(lo, hi):
            if not step_has_work[step]:
                continue
            a_step = act[:, step, :]
            q = frac + att * a_step
            n = q.astype(np.int64)  # floor for q >= 0
            for j in (4, 5):
                n_ok = np.minimum(n[j], b2)
                constrained = n_ok < n[j]
                idle_month[j] += (0.5 - n_ok * inv[j]) * constrained
                frac[j] = np.where(constrained, 0.0, q[j] - n[j])
                b2 -= n_ok
                done[j] += n_ok
                p_month += n_ok
            for j in (2, 3):
                n_ok = np.minimum(n[j], b1)
                n_ok = np.minimum(n_ok, cap2 - b2)
                constrained = n_ok < n[j]
                idle_month[j] += (0.5 - n_ok * inv[j]) * constrained
                frac[j] = np.where(constrained, 0.0, q[j] - n[j])
                b1 -= n_ok
                b2 += n_ok
                done[j] += n_ok
            for j in (0, 1):
                n_ok = np.minimum(n[j], cap1 - b1)
                constrained = n_ok < n[j]
                idle_month[j] += (0.5 - n_ok * inv[j]) * constrained
                frac[j] = np.where(constrained, 0.0, q[j] - n[j])
                b1 += n_ok
                done[j] += n_ok
        prod[month] = p_month
        idle[month] = idle_month

    results = []
    for i in range(B):
        _check_conservation(done[:, i].tolist(), int(b1[i]), int(b2[i]))
        results.append(
            SimResult(
                monthly_production=tuple(int(x) for x in prod[:, i]),
                idle_hours=tuple(tuple(float(h) for h in idle[:, j, i]) for j in range(N_SHOPS)),
                final_buffers=(int(b1[i]), int(b2[i])),
            )
        )
    return results


def cost(result: SimResult, catalog: ProblemCatalog) -> CostValue:
    """Weighted cost: production shortfall plus idle-hour penalty."""
    production_term = 0.0
    for target, produced in zip(catalog.monthly_targets, result.monthly_production):
        production_term += abs(target - produced)
    idle_sum = 0.0
    for shop in result.idle_hours:
        for h in shop:
            idle_sum += h
    idle_term = catalog.idle_weight * idle_sum
    return CostValue(
        total=production_term + idle_term,
        production_term=production_term,
        idle_term=idle_term,
    )


def evaluate(catalog: ProblemCatalog, config: LineConfig) -> CostValue:
    """Simulate then cost: the unit counted against evaluation budgets."""
    return cost(simulate(catalog, config), catalog)


def evaluate_batch(catalog: ProblemCatalog, configs: Sequence[LineConfig]) -> list[CostValue]:
    return [cost(r, catalog) for r in simulate_batch(catalog, configs)]
