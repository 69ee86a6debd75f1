"""Solver-facing search spaces for the two problem parameterizations.

A space knows how to draw uniform configurations, apply the single-site move
(one stage in three-body form, one shop in twelve-body form), and convert
configurations to flat genomes for crossover. All randomness flows through a
``numpy.random.Generator``; draw order is fixed so seeded runs reproduce.
"""

from __future__ import annotations

import numpy as np

from .catalog import ProblemCatalog
from .freestage import ReducedSpace
from .simulate import LineConfig, ShopState


class ThreeBodySpace:
    """Triples of per-stage positions into a reduced space's allowed lists."""

    n_genes = 3
    parameterization = "3body"

    def __init__(self, space: ReducedSpace):
        self.space = space
        self.sizes = space.sizes

    @property
    def total_size(self) -> int:
        return self.space.total_size

    def describe(self) -> str:
        return f"{self.space.dev_mode}@{self.space.margin:g}"

    def random_config(self, rng: np.random.Generator) -> LineConfig:
        triple = tuple(int(rng.integers(s)) for s in self.sizes)
        return self.space.config(triple)

    def mutate(self, config: LineConfig, rng: np.random.Generator) -> LineConfig:
        genes = list(self.genome(config))
        k = int(rng.integers(3))
        genes[k] = int(rng.integers(self.sizes[k]))
        return self.from_genome(genes)

    def genome(self, config: LineConfig) -> tuple[int, ...]:
        triple = self.space.triple_of(config)
        if triple is None:
            raise ValueError("configuration lies outside the reduced space")
        return triple

    def from_genome(self, genes) -> LineConfig:
        return self.space.config(tuple(genes))


class TwelveBodySpace:
    """The raw 12-parameter space: 6 shift ids and 6 rate ids."""

    n_genes = 12
    parameterization = "12body"

    def __init__(self, catalog: ProblemCatalog):
        self.n_shifts = len(catalog.shifts)
        self.n_rates = len(catalog.rates)

    @property
    def total_size(self) -> int:
        return (self.n_shifts * self.n_rates) ** 6

    def describe(self) -> str:
        return "12body-full"

    def random_config(self, rng: np.random.Generator) -> LineConfig:
        shops = tuple(
            ShopState(1 + int(rng.integers(self.n_shifts)), 1 + int(rng.integers(self.n_rates)))
            for _ in range(6)
        )
        return LineConfig(shops)

    def mutate(self, config: LineConfig, rng: np.random.Generator) -> LineConfig:
        shops = list(config.shops)
        j = int(rng.integers(6))
        shops[j] = ShopState(
            1 + int(rng.integers(self.n_shifts)), 1 + int(rng.integers(self.n_rates))
        )
        return LineConfig(tuple(shops))

    def genome(self, config: LineConfig) -> tuple[int, ...]:
        return config.twelve_body()

    def from_genome(self, genes) -> LineConfig:
        return LineConfig.from_ids(list(genes))
