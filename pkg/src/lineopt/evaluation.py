"""Evaluator objects: the cost oracle that solvers consume.

An evaluator is a callable ``config -> CostValue``; the optional ``many``
method evaluates a batch (the simulator is far faster lane-parallel).
Wrappers add call counting (budget audits) and cross-run caching (the
simulator is pure, so identical configs always cost the same).
"""

from __future__ import annotations

from typing import Sequence

from .catalog import ProblemCatalog
from .simulate import CostValue, LineConfig, evaluate, evaluate_batch

BATCH_CHUNK = 2048  # keeps the lane-parallel simulator's memory bounded
MIN_LANE_BATCH = 33  # below this the per-step numpy overhead beats the scalar loop


class Evaluator:
    """Direct simulate-then-cost evaluation against one catalog."""

    def __init__(self, catalog: ProblemCatalog):
        self.catalog = catalog

    def __call__(self, config: LineConfig) -> CostValue:
        return evaluate(self.catalog, config)

    def many(self, configs: Sequence[LineConfig]) -> list[CostValue]:
        if len(configs) < MIN_LANE_BATCH:
            return [evaluate(self.catalog, c) for c in configs]
        out: list[CostValue] = []
        for lo in range(0, len(configs), BATCH_CHUNK):
            out.extend(evaluate_batch(self.catalog, list(configs[lo : lo + BATCH_CHUNK])))
        return out


class CountingEvaluator:
    """Counts underlying evaluations; used to audit budget contracts."""

    def __init__(self, inner):
        self.inner = inner
        self.calls = 0

    def __call__(self, config: LineConfig) -> CostValue:
        self.calls += 1
        return self.inner(config)

    def many(self, configs: Sequence[LineConfig]) -> list[CostValue]:
        self.calls += len(configs)
        inner_many = getattr(self.inner, "many", None)
        if inner_many is not None:
            return inner_many(configs)
        return [self.inner(c) for c in configs]


class CachedEvaluator:
    """Cross-run memo over a pure evaluator.

    Budget accounting is unaffected: solvers count their own evaluator
    calls; this cache only removes redundant simulations of configurations
    already costed in another run of the same experiment.
    """

    def __init__(self, inner):
        self.inner = inner
        self.cache: dict[tuple, CostValue] = {}

    def _key(self, config: LineConfig) -> tuple:
        return config.twelve_body()

    def __call__(self, config: LineConfig) -> CostValue:
        key = self._key(config)
        hit = self.cache.get(key)
        if hit is None:
            hit = self.inner(config)
            self.cache[key] = hit
        return hit

    def many(self, configs: Sequence[LineConfig]) -> list[CostValue]:
        missing: list[LineConfig] = []
        seen: set[tuple] = set()
        for c in configs:
            key = self._key(c)
            if key not in self.cache and key not in seen:
                seen.add(key)
                missing.append(c)
        if missing:
            inner_many = getattr(self.inner, "many", None)
            values = inner_many(missing) if inner_many else [self.inner(c) for c in missing]
            for c, v in zip(missing, values):
                self.cache[self._key(c)] = v
        return [self.cache[self._key(c)] for c in configs]

    def preload(self, configs: Sequence[LineConfig]) -> None:
        self.many(configs)
