import dataclasses

import numpy as np
import pytest

from lineopt.catalog import (
    ProblemCatalog,
    RateOption,
    ShiftSchedule,
    SLOTS_PER_WEEK,
    default_catalog,
)
from lineopt.evaluation import CachedEvaluator, Evaluator
from lineopt.freestage import reduce_space


def unchecked_shift(shift_id: int, pattern) -> ShiftSchedule:
    """Build a ShiftSchedule bypassing validation (tests need degenerate
    schedules such as the all-false pattern, which loaders reject)."""
    shift = object.__new__(ShiftSchedule)
    object.__setattr__(shift, "id", shift_id)
    object.__setattr__(shift, "weekly_pattern", tuple(pattern))
    return shift


def block_week(days: int, start_hour: float, hours: float) -> tuple[bool, ...]:
    """Weekly pattern: one daily block on the first ``days`` weekdays."""
    week = [False] * SLOTS_PER_WEEK
    s0 = int(start_hour * 2)
    for d in range(days):
        for s in range(s0, s0 + int(hours * 2)):
            week[d * 48 + s] = True
    return tuple(week)


@pytest.fixture(scope="session")
def catalog():
    return default_catalog()


@pytest.fixture(scope="session")
def aligned_catalog():
    return default_catalog(calendar="aligned")


@pytest.fixture(scope="session")
def space729(catalog):
    return reduce_space(catalog, 0.015, "noDev")


@pytest.fixture(scope="session")
def evaluator(catalog, space729):
    """Cross-test cached evaluator, preloaded with the whole 729-state space."""
    ev = CachedEvaluator(Evaluator(catalog))
    ev.preload([space729.config(space729.triple_at(k)) for k in range(space729.total_size)])
    return ev


@pytest.fixture(scope="session")
def costs729(space729, evaluator):
    """Cost of every configuration of the 729-state space, by flat index."""
    configs = [space729.config(space729.triple_at(k)) for k in range(space729.total_size)]
    return [c.total for c in evaluator.many(configs)]


def toy_catalog(n_shifts: int = 2, n_rates: int = 1, base=None) -> ProblemCatalog:
    """Miniature unvalidated instance for exhaustive oracles."""
    base = base or default_catalog()
    shifts = tuple(
        ShiftSchedule(i + 1, block_week(5, 6.0, 8.0 + 4.0 * i)) for i in range(n_shifts)
    )
    rates = tuple(RateOption(i + 1, 40.0 + 10.0 * i) for i in range(n_rates))
    return dataclasses.replace(
        base, shifts=shifts, rates=rates, nominal_rate_id=1,
        monthly_targets=(17500.0,) * 12,
    )


@pytest.fixture(scope="session")
def tiny_catalog():
    return toy_catalog()


@pytest.fixture()
def rng():
    return np.random.default_rng(20230504)
