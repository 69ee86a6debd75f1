"""Experiment orchestration: brute-force oracle, multi-run campaigns over a
grid of reduced spaces, booster comparisons, and machine-readable outputs.

Runs are driven in lockstep: every live run contributes its pending
configurations to one shared batch per round, which the lane-parallel
simulator evaluates together. Per-run seeds derive from the master seed and
the cell coordinates, so adding cells never perturbs other cells' streams,
and rerunning a grid reproduces every number bit-exactly.
"""

from __future__ import annotations

import csv
import json
import math
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .catalog import ProblemCatalog
from .encoding import EncodingScheme
from .evaluation import CachedEvaluator, Evaluator
from .freestage import InfeasibleMarginError, ReducedSpace, StageIndexer, reduce_space
from .geo import BoostRun, GeoParams
from .mps import TrainParams
from .simulate import CostValue, LineConfig
from .solvers import ENGINE_FACTORIES, RunState, SOLVER_IDS, Trace
from .spaces import ThreeBodySpace, TwelveBodySpace

BRUTE_FORCE_CAP = 50_000


class SpaceTooLargeError(ValueError):
    """Brute force refused: the space exceeds the configured cap."""


def derive_seed(master_seed: int, *parts) -> int:
    """Stable per-run seed from the master seed and labels (strings or ints)."""
    words = [master_seed & 0xFFFFFFFF]
    for part in parts:
        if isinstance(part, int):
            words.append(part & 0xFFFFFFFF)
        else:
            words.append(zlib.crc32(str(part).encode()))
    state = np.random.SeedSequence(words).generate_state(2)
    return int(state[0]) << 32 | int(state[1])


def brute_force(
    catalog: ProblemCatalog,
    space: ReducedSpace,
    cap: int = BRUTE_FORCE_CAP,
    evaluator=None,
) -> tuple[LineConfig, CostValue]:
    """Exhaustively evaluate a reduced space; ties go to the lowest flat index."""
    total = space.total_size
    if total > cap:
        raise SpaceTooLargeError(f"space has {total} states, cap is {cap}")
    if evaluator is None:
        evaluator = Evaluator(catalog)
    configs = [space.config(space.triple_at(k)) for k in range(total)]
    costs = evaluator.many(configs)
    best = 0
    for k in range(1, total):
        if costs[k].total < costs[best].total:
            best = k
    return configs[best], costs[best]


def drive_lockstep(runs: Sequence, evaluator) -> None:
    """Advance many pending/supply runs together, one shared batch per round."""
    live = list(runs)
    while live:
        round_runs = []
        batches = []
        for run in live:
            batch = run.pending()
            if batch:
                round_runs.append(run)
                batches.append(batch)
        live = [r for r in live if not r.finished]
        if not round_runs:
            break
        flat: list[LineConfig] = []
        for batch in batches:
            flat.extend(batch)
        values = evaluator.many(flat)
        pos = 0
        for run, batch in zip(round_runs, batches):
            run.supply([v.total for v in values[pos : pos + len(batch)]])
            pos += len(batch)


def run_conventional(
    catalog: ProblemCatalog,
    space,
    solver_ids: Sequence[str],
    runs_per_solver: int,
    budget: int,
    master_seed: int,
    evaluator=None,
    seed_labels: tuple = (),
) -> dict[str, list[Trace]]:
    """Lockstep campaign of seeded conventional runs on one space."""
    if evaluator is None:
        evaluator = CachedEvaluator(Evaluator(catalog))
    states: list[tuple[str, int, RunState]] = []
    for solver_id in solver_ids:
        for k in range(runs_per_solver):
            seed = derive_seed(master_seed, *seed_labels, solver_id, k)
            rng = np.random.default_rng(seed)
            engine = ENGINE_FACTORIES[solver_id](space, None, rng)
            state = RunState(engine, budget, space.total_size,
                             count_unique=solver_id.startswith("ga"))
            states.append((solver_id, seed, state))
    drive_lockstep([s for _, _, s in states], evaluator)
    out: dict[str, list[Trace]] = {sid: [] for sid in solver_ids}
    for solver_id, seed, state in states:
        out[solver_id].append(
            Trace(solver_id, seed, space.parameterization, space.describe(), state.entries)
        )
    return out


def run_boosted(
    prefixes: Sequence[Trace],
    scheme: EncodingScheme,
    params: GeoParams,
    evaluator,
    master_seed: int,
    seed_labels: tuple = (),
) -> list[Trace]:
    """Boost each prefix run; candidate evaluations are batched across runs."""
    runs = []
    for k, prefix in enumerate(prefixes):
        seed = derive_seed(master_seed, *seed_labels, "geo", scheme.kind, k)
        runs.append(BoostRun(prefix, scheme, params, np.random.default_rng(seed)))
    drive_lockstep(runs, evaluator)
    return [r.trace() for r in runs]


# ---------------------------------------------------------------------------
# Experiment grid
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GridSpec:
    margins: tuple[float, ...] = (0.015, 0.02, 0.025, 0.05, 1.0)
    dev_modes: tuple[str, ...] = ("noDev", "yesDev")
    schemes: tuple[str, ...] = ("basic", "gray", "pggray")
    solvers: tuple[str, ...] = SOLVER_IDS
    runs_per_cell: int = 50
    budget: int = 240
    seed_evals: int = 100
    chi: int = 6
    train_sweeps: int = 10
    master_seed: int = 1
    chi_list: tuple[int, ...] = ()  # bond sweep when non-empty
    compare_formulations: bool = False
    formulation_runs: int = 50

    def geo_params(self, chi: int | None = None) -> GeoParams:
        return GeoParams(
            seed_evals=self.seed_evals,
            total_budget=self.budget,
            chi_max=chi if chi is not None else self.chi,
            train=TrainParams(sweeps=self.train_sweeps, chi_max=chi if chi is not None else self.chi),
        )


@dataclass
class CellResult:
    margin: float
    dev_mode: str
    solver_id: str
    conv_bests: list[float]
    geo_bests: dict[str, list[float]]  # scheme -> per-run best

    @property
    def best_conventional(self) -> float:
        return min(self.conv_bests)

    def best_boosted(self, scheme: str) -> float:
        return min(self.geo_bests[scheme])

    def delta(self, scheme: str) -> float:
        """Positive when boosting found a strictly lower best cost."""
        return self.best_conventional - self.best_boosted(scheme)


@dataclass
class GridResult:
    spec: GridSpec
    cells: list[CellResult]
    skipped: list[tuple[float, str, str]]  # (margin, dev, reason)
    conv_traces: dict[tuple[float, str, str], list[Trace]] = field(default_factory=dict)
    geo_traces: dict[tuple[float, str, str, str], list[Trace]] = field(default_factory=dict)

    def cell(self, margin: float, dev_mode: str, solver_id: str) -> CellResult:
        for c in self.cells:
            if c.margin == margin and c.dev_mode == dev_mode and c.solver_id == solver_id:
                return c
        raise KeyError((margin, dev_mode, solver_id))


def run_grid(
    grid: GridSpec,
    catalog: ProblemCatalog,
    out_dir: str | Path | None = None,
    progress=None,
) -> GridResult:
    """Full campaign: per (margin, dev) cell and solver, ``runs_per_cell``
    conventional runs, then a boosted counterpart per scheme reusing each
    run's first ``seed_evals`` evaluations.

    All conventional runs across all cells advance in one lockstep batch, as
    do all boosted runs of a scheme, so the lane-parallel simulator sees
    large batches."""
    evaluator = CachedEvaluator(Evaluator(catalog))
    indexers = {dev: StageIndexer(catalog, dev) for dev in grid.dev_modes}
    cells: list[CellResult] = []
    skipped: list[tuple[float, str, str]] = []
    result = GridResult(grid, cells, skipped)

    spaces: dict[tuple[float, str], ReducedSpace] = {}
    for margin in grid.margins:
        for dev in grid.dev_modes:
            try:
                spaces[(margin, dev)] = reduce_space(catalog, margin, dev, indexer=indexers[dev])
            except InfeasibleMarginError as err:
                skipped.append((margin, dev, str(err)))

    # phase 1: every conventional run of every cell, one lockstep
    conv_states: dict[tuple[float, str, str], list[tuple[int, RunState]]] = {}
    for (margin, dev), reduced in spaces.items():
        space = ThreeBodySpace(reduced)
        for solver_id in grid.solvers:
            states = []
            for k in range(grid.runs_per_cell):
                seed = derive_seed(grid.master_seed, f"{margin:g}", dev, solver_id, k)
                rng = np.random.default_rng(seed)
                engine = ENGINE_FACTORIES[solver_id](space, None, rng)
                states.append((seed, RunState(engine, grid.budget, space.total_size,
                                              count_unique=solver_id.startswith("ga"))))
            conv_states[(margin, dev, solver_id)] = states
    if progress:
        total_runs = sum(len(v) for v in conv_states.values())
        progress(f"conventional phase: {total_runs} runs across {len(spaces)} cells")
    drive_lockstep([st for states in conv_states.values() for _, st in states], evaluator)
    for (margin, dev, solver_id), states in conv_states.items():
        reduced = spaces[(margin, dev)]
        space = ThreeBodySpace(reduced)
        result.conv_traces[(margin, dev, solver_id)] = [
            Trace(solver_id, seed, space.parameterization, space.describe(), st.entries)
            for seed, st in states
        ]

    # phase 2: per scheme, every boosted counterpart, one lockstep each
    geo_bests_by_cell: dict[tuple[float, str, str], dict[str, list[float]]] = {
        key: {} for key in conv_states
    }
    for kind in grid.schemes:
        boost_runs: dict[tuple[float, str, str], list[BoostRun]] = {}
        for (margin, dev, solver_id), traces in result.conv_traces.items():
            if any(len(t.entries) < grid.seed_evals for t in traces):
                skipped.append((margin, dev,
                                f"{solver_id}: some runs ended before "
                                f"{grid.seed_evals} evaluations; boosting skipped"))
                continue
            scheme = EncodingScheme(kind, spaces[(margin, dev)])
            runs = []
            for k, trace in enumerate(traces):
                seed = derive_seed(grid.master_seed, f"{margin:g}", dev, solver_id,
                                   "geo", kind, k)
                runs.append(BoostRun(trace.prefix(grid.seed_evals), scheme,
                                     grid.geo_params(), np.random.default_rng(seed)))
            boost_runs[(margin, dev, solver_id)] = runs
        if progress:
            progress(f"boost phase [{kind}]: {sum(len(v) for v in boost_runs.values())} runs")
        drive_lockstep([r for runs in boost_runs.values() for r in runs], evaluator)
        for key, runs in boost_runs.items():
            traces = [r.trace() for r in runs]
            result.geo_traces[(*key, kind)] = traces
            geo_bests_by_cell[key][kind] = [t.best_cost for t in traces]

    for (margin, dev, solver_id), traces in result.conv_traces.items():
        cells.append(CellResult(
            margin, dev, solver_id,
            conv_bests=[t.best_cost for t in traces],
            geo_bests=geo_bests_by_cell[(margin, dev, solver_id)],
        ))
    if out_dir is not None:
        write_outputs(result, Path(out_dir))
    return result


# ---------------------------------------------------------------------------
# Analyses
# ---------------------------------------------------------------------------

def heatmap(result: GridResult, scheme: str) -> list[dict]:
    """Per cell and solver: the boosting improvement and Fig-style markers.

    ``delta`` is best_conventional - best_boosted (positive = improved,
    zero = tie, negative = worse). ``is_best``/``is_worst`` mark the
    solver(s) whose best entity (conventional or boosted) attains the cell's
    overall best/worst minimum; ties produce multiple markers.
    """
    rows = []
    by_config: dict[tuple[float, str], list[CellResult]] = {}
    for cell in result.cells:
        by_config.setdefault((cell.margin, cell.dev_mode), []).append(cell)
    for (margin, dev), group in by_config.items():
        entity_minima = []
        for cell in group:
            entity_minima.append(cell.best_conventional)
            entity_minima.append(cell.best_boosted(scheme))
        overall_best, overall_worst = min(entity_minima), max(entity_minima)
        for cell in group:
            delta = cell.delta(scheme)
            cls = "improved" if delta > 0 else ("tie" if delta == 0 else "worse")
            rows.append({
                "margin": margin,
                "dev_mode": dev,
                "solver": cell.solver_id,
                "delta": delta,
                "class": cls,
                "is_best": min(cell.best_conventional, cell.best_boosted(scheme)) == overall_best,
                "is_worst": max(cell.best_conventional, cell.best_boosted(scheme)) == overall_worst,
            })
    return rows


def relative_table(result: GridResult, family: str, scheme: str | None = None) -> list[dict]:
    """Per cell: each solver's best minus the cell-best within one family
    (``conventional`` or ``boosted``); zero marks the cell's best solver."""
    rows = []
    by_config: dict[tuple[float, str], list[CellResult]] = {}
    for cell in result.cells:
        by_config.setdefault((cell.margin, cell.dev_mode), []).append(cell)
    for (margin, dev), group in by_config.items():
        if family == "conventional":
            values = {c.solver_id: c.best_conventional for c in group}
        else:
            values = {c.solver_id: c.best_boosted(scheme) for c in group}
        floor_value = min(values.values())
        for solver_id, value in values.items():
            rows.append({
                "margin": margin,
                "dev_mode": dev,
                "solver": solver_id,
                "excess": value - floor_value,
            })
    return rows


def bond_sweep(
    grid: GridSpec,
    catalog: ProblemCatalog,
    result: GridResult,
    chi_list: Sequence[int],
    evaluator=None,
) -> list[dict]:
    """Re-boost every cell's runs with each bond-dimension cap (production
    guided encoding) and count the cases improved upon the conventional
    solver."""
    if evaluator is None:
        evaluator = CachedEvaluator(Evaluator(catalog))
    indexers = {dev: StageIndexer(catalog, dev) for dev in grid.dev_modes}
    schemes: dict[tuple[float, str], EncodingScheme] = {}
    rows = []
    for chi in chi_list:
        runs_by_case: dict[tuple, list[BoostRun]] = {}
        for (margin, dev, solver_id), traces in result.conv_traces.items():
            if any(len(t.entries) < grid.seed_evals for t in traces):
                continue
            if (margin, dev) not in schemes:
                reduced = reduce_space(catalog, margin, dev, indexer=indexers[dev])
                schemes[(margin, dev)] = EncodingScheme("pggray", reduced)
            scheme = schemes[(margin, dev)]
            runs = []
            for k, trace in enumerate(traces):
                seed = derive_seed(grid.master_seed, f"{margin:g}", dev, solver_id,
                                   "geo", "chi", chi, k)
                runs.append(BoostRun(trace.prefix(grid.seed_evals), scheme,
                                     grid.geo_params(chi), np.random.default_rng(seed)))
            runs_by_case[(margin, dev, solver_id)] = runs
        drive_lockstep([r for runs in runs_by_case.values() for r in runs], evaluator)
        improved = 0
        improved_or_tie = 0
        total = 0
        for key, runs in runs_by_case.items():
            traces = result.conv_traces[key]
            best_conv = min(t.best_cost for t in traces)
            best_geo = min(r.trace().best_cost for r in runs)
            total += 1
            if best_geo < best_conv:
                improved += 1
            if best_geo <= best_conv:
                improved_or_tie += 1
        rows.append({
            "chi": chi,
            "cases": total,
            "improved": improved,
            "improved_or_tie": improved_or_tie,
            "improved_pct": 100.0 * improved / total if total else math.nan,
            "improved_or_tie_pct": 100.0 * improved_or_tie / total if total else math.nan,
        })
    return rows


def convergence_curves(traces_by_key: dict[str, list[Trace]], budget: int) -> dict[str, list[float]]:
    """Mean best-so-far at evaluation 1..budget per key (solver/formulation);
    shorter traces hold their last best."""
    curves = {}
    for key, traces in traces_by_key.items():
        series = np.array([t.best_series(budget) for t in traces])
        curves[key] = series.mean(axis=0).tolist()
    return curves


def run_formulation_comparison(
    catalog: ProblemCatalog,
    solvers: Sequence[str],
    runs: int,
    budget: int,
    master_seed: int,
    evaluator=None,
    three_body_margin: float = 0.05,
) -> dict[str, dict[str, list[Trace]]]:
    """Paired campaigns in both parameterizations.

    The no-knowledge side is the raw 12-parameter space. The
    problem-inspired side is the three-body formulation as the pipeline
    uses it, i.e. with its induced free-stage reduction at
    ``three_body_margin`` (the widest production-guided margin by default);
    pass ``three_body_margin=1.0`` for the strict unreduced variant, which
    on synthetic catalogs may not separate the formulations within small
    budgets."""
    if evaluator is None:
        evaluator = CachedEvaluator(Evaluator(catalog))
    three = ThreeBodySpace(reduce_space(catalog, three_body_margin, "yesDev"))
    twelve = TwelveBodySpace(catalog)
    out = {}
    out["3body"] = run_conventional(
        catalog, three, solvers, runs, budget, master_seed, evaluator, ("form", "3body"))
    out["12body"] = run_conventional(
        catalog, twelve, solvers, runs, budget, master_seed, evaluator, ("form", "12body"))
    return out


# ---------------------------------------------------------------------------
# File outputs
# ---------------------------------------------------------------------------

def config_text(config: LineConfig) -> str:
    """Interleaved shop fields: s1,r1,...,s6,r6."""
    parts = []
    for shop in config.shops:
        parts.append(str(shop.shift_id))
        parts.append(str(shop.rate_id))
    return ",".join(parts)


def write_trace_csv(trace: Trace, path: Path) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["eval_index", "config", "cost", "best_so_far"])
        for e in trace.entries:
            writer.writerow([e.eval_index, config_text(e.config), repr(e.cost), repr(e.best_so_far)])


def write_outputs(result: GridResult, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    traces_dir = out_dir / "traces"
    traces_dir.mkdir(exist_ok=True)
    for (margin, dev, solver_id), traces in result.conv_traces.items():
        cell_dir = traces_dir / f"m{margin:g}_{dev}" / solver_id
        cell_dir.mkdir(parents=True, exist_ok=True)
        for k, trace in enumerate(traces):
            write_trace_csv(trace, cell_dir / f"run{k:03d}_conv.csv")
    for (margin, dev, solver_id, scheme), traces in result.geo_traces.items():
        cell_dir = traces_dir / f"m{margin:g}_{dev}" / solver_id
        cell_dir.mkdir(parents=True, exist_ok=True)
        for k, trace in enumerate(traces):
            write_trace_csv(trace, cell_dir / f"run{k:03d}_geo-{scheme}.csv")

    summary = {
        "margins": list(result.spec.margins),
        "dev_modes": list(result.spec.dev_modes),
        "schemes": list(result.spec.schemes),
        "solvers": list(result.spec.solvers),
        "runs_per_cell": result.spec.runs_per_cell,
        "budget": result.spec.budget,
        "seed_evals": result.spec.seed_evals,
        "master_seed": result.spec.master_seed,
        "skipped": [{"margin": m, "dev_mode": d, "reason": r} for m, d, r in result.skipped],
        "cells": [
            {
                "margin": c.margin,
                "dev_mode": c.dev_mode,
                "solver": c.solver_id,
                "best_conventional": c.best_conventional,
                "conv_bests": c.conv_bests,
                "geo": {
                    scheme: {
                        "best": c.best_boosted(scheme),
                        "delta": c.delta(scheme),
                        "bests": bests,
                    }
                    for scheme, bests in c.geo_bests.items()
                },
            }
            for c in result.cells
        ],
    }
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=1))

    for scheme in result.spec.schemes:
        rows = heatmap(result, scheme)
        with (out_dir / f"heatmap_{scheme}.csv").open("w", newline="") as fh:
            writer = csv.DictWriter(
                fh, fieldnames=["margin", "dev_mode", "solver", "delta", "class", "is_best", "is_worst"])
            writer.writeheader()
            writer.writerows(rows)
    with (out_dir / "relative_conv.csv").open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["margin", "dev_mode", "solver", "excess"])
        writer.writeheader()
        writer.writerows(relative_table(result, "conventional"))
    with (out_dir / "relative_geo.csv").open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["margin", "dev_mode", "solver", "scheme", "excess"])
        writer.writeheader()
        for scheme in result.spec.schemes:
            for row in relative_table(result, "boosted", scheme):
                writer.writerow({**row, "scheme": scheme})


def write_bond_sweep_csv(rows: list[dict], path: Path) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(
            fh,
            fieldnames=["chi", "cases", "improved", "improved_or_tie",
                        "improved_pct", "improved_or_tie_pct"])
        writer.writeheader()
        writer.writerows(rows)


def write_convergence_csv(curves: dict[str, list[float]], path: Path) -> None:
    keys = sorted(curves)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["eval_index"] + keys)
        length = max(len(v) for v in curves.values())
        for i in range(length):
            writer.writerow([i + 1] + [repr(curves[k][i]) for k in keys])


# ---------------------------------------------------------------------------
# Grid file loading (TOML)
# ---------------------------------------------------------------------------

def load_grid(path: str | Path) -> GridSpec:
    try:
        import tomllib  # Python >= 3.11
    except ModuleNotFoundError:
        import tomli as tomllib
    doc = tomllib.loads(Path(path).read_text())
    grid = doc.get("grid", {})
    sweep = doc.get("bond_sweep", {})
    forms = doc.get("formulations", {})
    return GridSpec(
        margins=tuple(grid.get("margins", GridSpec.margins)),
        dev_modes=tuple(grid.get("dev_modes", GridSpec.dev_modes)),
        schemes=tuple(grid.get("schemes", GridSpec.schemes)),
        solvers=tuple(grid.get("solvers", GridSpec.solvers)),
        runs_per_cell=int(grid.get("runs_per_cell", GridSpec.runs_per_cell)),
        budget=int(grid.get("budget", GridSpec.budget)),
        seed_evals=int(grid.get("seed_evals", GridSpec.seed_evals)),
        chi=int(grid.get("chi", GridSpec.chi)),
        train_sweeps=int(grid.get("train_sweeps", GridSpec.train_sweeps)),
        master_seed=int(grid.get("master_seed", GridSpec.master_seed)),
        chi_list=tuple(sweep.get("chi_list", ())),
        compare_formulations=bool(forms.get("enabled", False)),
        formulation_runs=int(forms.get("runs", GridSpec.formulation_runs)),
    )
