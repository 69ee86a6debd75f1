"""Generative booster loop: seed a Born machine with a conventional solver's
first evaluations, then iterate train -> sample -> prune -> select ->
evaluate until the shared budget is spent.

Each iteration retrains a fresh model on the full seed set with costs turned
into exponential weights (lower cost, higher weight), samples candidates,
discards already-seen or invalid bitstrings, keeps the highest-probability
survivors, and evaluates them. Every evaluated state joins the seed set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field
from typing import Callable, Sequence

import numpy as np

from .encoding import EncodingScheme
from .mps import TrainParams, WeightedDataset, amplitudes, init_mps, sample, train
from .simulate import CostValue, LineConfig
from .solvers import Trace, TraceEntry

WEIGHT_TEMPERATURE_FLOOR = 1e-9


@dataclass(frozen=True)
class GeoParams:
    seed_evals: int = 100
    total_budget: int = 240
    batch_size: int = 10
    oversample_factor: int = 20
    chi_max: int = 6
    resample_rounds: int = 3
    selection: str = "probability"  # or "random" (ablation)
    train: TrainParams = dataclass_field(default_factory=TrainParams)

    def __post_init__(self):
        if not 0 < self.seed_evals <= self.total_budget:
            raise ValueError("need 0 < seed_evals <= total_budget")
        if self.batch_size < 1 or self.oversample_factor < 1:
            raise ValueError("batch_size and oversample_factor must be >= 1")
        if self.selection not in ("probability", "random"):
            raise ValueError("selection must be 'probability' or 'random'")
        if self.train.chi_max != self.chi_max:
            object.__setattr__(self, "train", TrainParams(
                sweeps=self.train.sweeps,
                learning_rate=self.train.learning_rate,
                chi_max=self.chi_max,
                svd_cutoff=self.train.svd_cutoff,
                init_scale=self.train.init_scale,
            ))


def reweight(costs: Sequence[float], temperature: float | None = None) -> np.ndarray:
    """Exponential cost weighting: w_i proportional to
    exp(-(C_i - C_min)/T). By default T is the standard deviation of the
    costs (floored, so equal costs give uniform weights); passing
    ``temperature`` overrides the rule."""
    if len(costs) == 0:
        raise ValueError("no costs to reweight")
    arr = np.asarray(costs, dtype=np.float64)
    if temperature is None:
        temperature = float(arr.std())
    temperature = max(temperature, WEIGHT_TEMPERATURE_FLOOR)
    w = np.exp(-(arr - arr.min()) / temperature)
    return w / w.sum()


@dataclass
class SeedSet:
    """Evaluated states, deduplicated by bitstring; grows monotonically."""

    bits: list[str] = dataclass_field(default_factory=list)
    configs: list[LineConfig] = dataclass_field(default_factory=list)
    costs: list[float] = dataclass_field(default_factory=list)
    _seen: set[str] = dataclass_field(default_factory=set)

    def __contains__(self, bits: str) -> bool:
        return bits in self._seen

    def add(self, bits: str, config: LineConfig, cost: float) -> bool:
        if bits in self._seen:
            return False
        self._seen.add(bits)
        self.bits.append(bits)
        self.configs.append(config)
        self.costs.append(cost)
        return True

    def __len__(self) -> int:
        return len(self.bits)


class BoostRun:
    """Incremental booster with a pending/supply interface, so many boosted
    runs can share one batching evaluator (mirrors ``solvers.RunState``)."""

    def __init__(
        self,
        prefix: Trace,
        scheme: EncodingScheme,
        params: GeoParams,
        rng: np.random.Generator,
    ):
        if len(prefix.entries) < params.seed_evals:
            raise ValueError(
                f"prefix has {len(prefix.entries)} entries, need {params.seed_evals}"
            )
        if scheme.n_bits < 2:
            raise ValueError("scheme produces too few bits for a generative model")
        self.scheme = scheme
        self.params = params
        self.rng = rng
        self.seeds = SeedSet()
        self.entries: list[TraceEntry] = []
        self.best = math.inf
        for entry in prefix.entries[: params.seed_evals]:
            bits = scheme.encode_config(entry.config)
            self.seeds.add(bits, entry.config, entry.cost)
            self.best = min(self.best, entry.cost)
            self.entries.append(
                TraceEntry(len(self.entries) + 1, entry.config, entry.cost, self.best)
            )
        self.meta = prefix
        self.finished = len(self.entries) >= params.total_budget
        self._pending: list[LineConfig] | None = None
        self._pending_bits: list[str] = []

    # -- candidate generation ------------------------------------------------

    def _train_model(self):
        weights = reweight(self.seeds.costs)
        dataset = WeightedDataset(list(zip(self.seeds.bits, weights.tolist())))
        model = init_mps(self.scheme.n_bits, self.params.train, self.rng)
        model, _ = train(model, dataset, self.params.train)
        return model

    def _sample_candidates(self, model, need: int) -> tuple[list[str], list[LineConfig]]:
        pool_bits: list[str] = []
        pool_cfgs: list[LineConfig] = []
        chosen: set[str] = set()
        for _ in range(self.params.resample_rounds):
            drawn = self.params.oversample_factor * need
            for bits in sample(model, drawn, self.rng):
                if bits in chosen or bits in self.seeds:
                    continue
                config = self.scheme.decode_config(bits)
                if config is None:
                    continue  # pruned: outside the problem's constraints
                chosen.add(bits)
                pool_bits.append(bits)
                pool_cfgs.append(config)
            if len(pool_bits) >= need:
                break
        return pool_bits, pool_cfgs

    def _uniform_unseen(self, count: int, chosen: set[str]) -> tuple[list[str], list[LineConfig]]:
        """Uniform fallback draws: random bitstrings, rejecting invalid and
        seen codes (valid codes biject onto configurations)."""
        bits_out: list[str] = []
        cfg_out: list[LineConfig] = []
        attempts = 0
        limit = 2000 * max(count, 1)
        while len(bits_out) < count and attempts < limit:
            attempts += 1
            bits = "".join("1" if b else "0" for b in self.rng.integers(0, 2, size=self.scheme.n_bits))
            if bits in chosen or bits in self.seeds:
                continue
            config = self.scheme.decode_config(bits)
            if config is None:
                continue
            chosen.add(bits)
            bits_out.append(bits)
            cfg_out.append(config)
        return bits_out, cfg_out

    def _prepare_batch(self) -> None:
        need = min(self.params.batch_size, self.params.total_budget - len(self.entries))
        model = self._train_model()
        pool_bits, pool_cfgs = self._sample_candidates(model, need)
        if len(pool_bits) < need:
            extra_bits, extra_cfgs = self._uniform_unseen(need - len(pool_bits), set(pool_bits))
            pool_bits.extend(extra_bits)
            pool_cfgs.extend(extra_cfgs)
        if not pool_bits:
            self.finished = True  # space exhausted
            self._pending = []
            return
        if self.params.selection == "probability" and len(pool_bits) > need:
            data = np.array([[int(c) for c in b] for b in pool_bits], dtype=np.int64)
            amps = amplitudes(model, data)
            probs = amps * amps
            order = sorted(range(len(pool_bits)), key=lambda i: (-probs[i], i))
            keep = order[:need]
        elif self.params.selection == "random" and len(pool_bits) > need:
            keep = list(self.rng.choice(len(pool_bits), size=need, replace=False))
        else:
            keep = list(range(len(pool_bits)))
        self._pending = [pool_cfgs[i] for i in keep]
        self._pending_bits = [pool_bits[i] for i in keep]

    # -- driver interface ----------------------------------------------------

    def pending(self) -> list[LineConfig]:
        if self.finished:
            return []
        if self._pending is None:
            self._prepare_batch()
        return self._pending or []

    def supply(self, costs: Sequence[float]) -> None:
        assert self._pending is not None
        if len(costs) != len(self._pending):
            raise ValueError(f"expected {len(self._pending)} costs, got {len(costs)}")
        for bits, config, value in zip(self._pending_bits, self._pending, costs):
            value = float(value)
            self.seeds.add(bits, config, value)
            self.best = min(self.best, value)
            self.entries.append(
                TraceEntry(len(self.entries) + 1, config, value, self.best)
            )
        self._pending = None
        self._pending_bits = []
        if len(self.entries) >= self.params.total_budget:
            self.finished = True

    def trace(self) -> Trace:
        return Trace(
            solver_id=f"{self.meta.solver_id}+geo",
            seed=self.meta.seed,
            parameterization=self.meta.parameterization,
            space=self.meta.space,
            entries=list(self.entries),
        )


def boost(
    prefix: Trace,
    scheme: EncodingScheme,
    params: GeoParams,
    evaluator: Callable[[LineConfig], CostValue],
    rng: np.random.Generator,
) -> Trace:
    """Boost a conventional run: keep its first ``seed_evals`` evaluations,
    then spend the remaining budget on generator-proposed candidates."""
    run = BoostRun(prefix, scheme, params, rng)
    many = getattr(evaluator, "many", None)
    while not run.finished:
        batch = run.pending()
        if not batch:
            break
        values = many(batch) if many is not None else [evaluator(c) for c in batch]
        run.supply([v.total if isinstance(v, CostValue) else float(v) for v in values])
    return run.trace()
