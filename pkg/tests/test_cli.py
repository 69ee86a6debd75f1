import csv
import json

import numpy as np
import pytest
from click.testing import CliRunner

from lineopt.catalog import default_catalog, dumps_catalog
from lineopt.cli import main
from lineopt.mps import load_mps


@pytest.fixture()
def runner():
    return CliRunner()


def invoke(runner, *args):
    result = runner.invoke(main, list(args), catch_exceptions=False)
    assert result.exit_code == 0, result.output
    return result.output


def test_dump_default_catalog(runner, tmp_path):
    out = tmp_path / "cat.txt"
    invoke(runner, "dump", "--out", str(out))
    assert out.read_text() == dumps_catalog(default_catalog())


def test_dump_round_trips_file(runner, tmp_path):
    path = tmp_path / "cat.txt"
    path.write_text(dumps_catalog(default_catalog()))
    output = invoke(runner, "dump", "--catalog", str(path))
    assert output == dumps_catalog(default_catalog())


def test_simulate_command(runner, tmp_path):
    trace = tmp_path / "steps.csv"
    output = invoke(
        runner, "simulate", "--config", "11,3,11,3,11,3,11,3,11,3,11,3",
        "--trace", str(trace),
    )
    assert "cost:" in output
    with open(trace) as fh:
        rows = list(csv.reader(fh))
    assert rows[0][:2] == ["step", "slot_time"]
    assert len(rows) == 1 + 365 * 48


def test_reduce_encode_decode_cycle(runner, tmp_path):
    space = tmp_path / "space.json"
    out = invoke(runner, "reduce", "--margin", "0.015", "--dev", "no", "--out", str(space))
    assert "total 729" in out
    doc = json.loads(space.read_text())
    assert doc["total_size"] == 729
    bits = invoke(runner, "encode", "--space", str(space), "--scheme", "pggray",
                  "--triple", "4,5,6").strip()
    decoded = invoke(runner, "decode", "--space", str(space), "--scheme", "pggray",
                     "--bits", bits)
    assert "triple: 4,5,6" in decoded


def test_decode_invalid_exits_nonzero(runner, tmp_path):
    space = tmp_path / "space.json"
    invoke(runner, "reduce", "--margin", "0.015", "--dev", "no", "--out", str(space))
    result = runner.invoke(
        main, ["decode", "--space", str(space), "--scheme", "gray", "--bits", "1000" * 3])
    assert result.exit_code == 1
    assert "invalid" in result.output


def test_solve_writes_trace(runner, tmp_path):
    space = tmp_path / "space.json"
    invoke(runner, "reduce", "--margin", "0.015", "--dev", "no", "--out", str(space))
    trace = tmp_path / "run.csv"
    out = invoke(runner, "solve", "--space", str(space), "--solver", "ga1",
                 "--budget", "30", "--seed", "5", "--trace", str(trace))
    assert "best cost" in out
    with open(trace) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 30
    assert [r["eval_index"] for r in rows] == [str(i) for i in range(1, 31)]
    bests = [float(r["best_so_far"]) for r in rows]
    assert all(a >= b for a, b in zip(bests, bests[1:]))


def test_boost_command(runner, tmp_path):
    space = tmp_path / "space.json"
    invoke(runner, "reduce", "--margin", "0.015", "--dev", "no", "--out", str(space))
    out = invoke(runner, "boost", "--space", str(space), "--solver", "sa",
                 "--budget", "50", "--seed-evals", "30", "--seed", "2", "--chi", "4")
    assert "boosted (pggray) best" in out


def test_pgco_command(runner):
    out = invoke(runner, "pgco", "--roots", "2", "--branches", "2", "--dev", "no")
    assert "explored 8 configurations" in out


def test_mps_round_trip(runner, tmp_path):
    model_path = tmp_path / "model.json"
    copy_path = tmp_path / "copy.json"
    invoke(runner, "mps", "init", "--sites", "8", "--chi", "4", "--seed", "3",
           "--out", str(model_path))
    invoke(runner, "mps", "load", "--model", str(model_path), "--out", str(copy_path))
    a = load_mps(model_path)
    b = load_mps(copy_path)
    assert all(np.array_equal(x, y) for x, y in zip(a.tensors, b.tensors))
    assert model_path.read_text() == copy_path.read_text()
    dumped = invoke(runner, "mps", "dump", "--model", str(model_path))
    assert dumped.strip() == model_path.read_text().strip()


def test_bench_command_small(runner, tmp_path):
    grid = tmp_path / "grid.toml"
    grid.write_text(
        """
[grid]
margins = [0.015]
dev_modes = ["noDev"]
schemes = ["pggray"]
solvers = ["sa"]
runs_per_cell = 2
budget = 120
seed_evals = 60
chi = 4
train_sweeps = 3
master_seed = 5
"""
    )
    out_dir = tmp_path / "results"
    output = invoke(runner, "bench", "--grid", str(grid), "--out", str(out_dir))
    assert "grid done" in output
    assert (out_dir / "summary.json").exists()
    assert (out_dir / "heatmap_pggray.csv").exists()


def test_malformed_catalog_is_reported(runner, tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("[shifts]\n1 01\n")
    result = runner.invoke(main, ["dump", "--catalog", str(bad)])
    assert result.exit_code != 0
    assert "pattern" in result.output
