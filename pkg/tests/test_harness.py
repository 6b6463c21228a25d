import json

import numpy as np
import pytest

from lcalab.core import lucas_support
from lcalab.errors import ConfigError
from lcalab.harness import cli
from lcalab.harness.config import load_config, parse_config
from lcalab.harness.runs import (
    manifest_path,
    parallel_map,
    read_data_csv,
    read_pbm,
    run,
    task_rng,
)

CODE = {"type": "block-code", "Q": 4, "R": 2, "generator": ["1100", "0011"]}


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return path


# --- config validation -------------------------------------------------------


@pytest.mark.parametrize("measure", [
    {"type": "block-code", "Q": 6, "R": 2, "generator": ["110000", "001100"]},
    {"type": "block-code", "Q": 4, "R": 2, "generator": ["1100", "1100"]},
    {"type": "hierarchical", "depth": 10, "tolerance": 1e-9},
    {"type": "bernoulli", "p": 2.0},
    {"type": "unknown"},
])
def test_bad_measures_rejected(measure):
    with pytest.raises(ConfigError):
        parse_config({"seed": 1, "measure": measure, "character": {"support": [0]}}, kind="spectrum")


def test_empty_automaton_rejected():
    with pytest.raises(ConfigError):
        parse_config({"seed": 1, "automaton": {"support": []}}, kind="space-time")


def test_seed_is_mandatory():
    with pytest.raises(ConfigError):
        parse_config({}, kind="verify-core")
    assert parse_config({}, kind="verify-core", seed=3).seed == 3


def test_unknown_options_rejected():
    with pytest.raises(ConfigError):
        parse_config({"seed": 1, "space_time": {"colour": "red"}}, kind="space-time")


def test_kind_mismatch_rejected():
    with pytest.raises(ConfigError):
        parse_config({"seed": 1, "kind": "spectrum"}, kind="space-time")


def test_support_check_needs_block_code():
    with pytest.raises(ConfigError):
        parse_config({"seed": 1, "measure": {"type": "bernoulli"}}, kind="support-check")


def test_load_config_and_digest(tmp_path):
    path = _write(tmp_path, "c.toml", 'kind = "spectrum"\nseed = 4\n[iterates]\nstart = 1\nstop = 8\n')
    cfg = load_config(path)
    assert cfg.iterates == range(1, 9)
    assert cfg.measure.depth == 120
    again = load_config(path)
    again.workers = 5
    assert again.digest == cfg.digest
    assert load_config(path, seed=5).digest != cfg.digest


def test_invalid_toml(tmp_path):
    with pytest.raises(ConfigError):
        load_config(_write(tmp_path, "bad.toml", "seed = = 1\n"), kind="verify-core")


# --- seeds and the work queue --------------------------------------------------


def _draw(args):
    master, index = args
    return task_rng(master, index).integers(0, 2 ** 62)


def test_parallel_map_order_and_seeds():
    tasks = [(9, i) for i in range(12)]
    serial = parallel_map(_draw, tasks, 1)
    assert parallel_map(_draw, tasks, 3) == serial
    assert len(set(serial)) == len(serial)


# --- runners -----------------------------------------------------------------


def _run_twice(tmp_path, data, kind):
    outs = []
    for workers in (1, 3):
        cfg = parse_config(dict(data), kind=kind)
        cfg.workers = workers
        out = tmp_path / f"{kind}-{workers}.csv"
        run(cfg, out)
        outs.append(out.read_bytes())
    return outs


@pytest.mark.parametrize("kind,data", [
    ("spectrum", {"seed": 2, "iterates": {"start": 1, "stop": 40}}),
    ("spectrum", {"seed": 2, "measure": {"type": "bernoulli"}, "character": {"support": [0, 2]},
                  "iterates": {"start": 1, "stop": 10}, "sampling": {"samples": 2000}}),
    ("spectrum", {"seed": 2, "measure": {"type": "hierarchical", "depth": 20}, "spectrum": {"method": "mc"},
                  "iterates": {"start": 1, "stop": 6}, "sampling": {"samples": 500}}),
    ("support-check", {"seed": 2, "iterates": {"start": 0, "stop": 6}, "sampling": {"samples": 5}}),
    ("entropy-scan", {"seed": 2, "entropy_scan": {"levels": [2, 4]}, "sampling": {"samples": 3000}}),
    ("genericity-scan", {"seed": 2, "genericity_scan": {"max_exponent": 12}}),
])
def test_worker_count_does_not_change_bytes(tmp_path, kind, data):
    one, three = _run_twice(tmp_path, data, kind)
    assert one == three


def test_spectrum_rows_and_manifest(tmp_path):
    cfg = parse_config({"seed": 1, "iterates": {"start": 1, "stop": 16}}, kind="spectrum")
    out = tmp_path / "s.csv"
    res = run(cfg, out)
    rows, summary = read_data_csv(out)
    assert [int(r["n"]) for r in rows] == list(range(1, 17))
    assert all(r["stderr"] == "" for r in rows)
    assert rows[4]["rank"] == str(len(lucas_support(5)))
    assert "cesaro_density[0.05]" in summary and res.exit_code == 0
    man = json.loads(manifest_path(out).read_text())
    assert man["config_digest"] == cfg.digest and man["version"]
    assert "wall_clock_s" in man and "timestamp" in man


def test_witness_recorded(tmp_path):
    data = {"seed": 1, "measure": CODE, "iterates": {"start": 4, "stop": 64, "stride": 4},
            "spectrum": {"find_witness": True}}
    out = tmp_path / "w.csv"
    run(parse_config(data, kind="spectrum"), out)
    man = json.loads(manifest_path(out).read_text())
    assert man["witness"]["min_abs_expectation"] == 0.5
    rows, _ = read_data_csv(out)
    assert min(abs(float(r["value"])) for r in rows) == 0.5


def test_support_check_zero_iterate(tmp_path):
    cfg = parse_config({"seed": 1, "iterates": {"start": 0, "stop": 0}, "sampling": {"samples": 20}},
                       kind="support-check")
    out = tmp_path / "sc.csv"
    res = run(cfg, out)
    rows, summary = read_data_csv(out)
    assert all(r["member"] == "1" for r in rows)
    assert float(summary["member_fraction"]) == 1.0
    assert res.extra_files and res.extra_files[0].exists()


def test_space_time_impulse(tmp_path):
    cfg = parse_config({"seed": 1}, kind="space-time")
    out = tmp_path / "st.pbm"
    run(cfg, out)
    grid = read_pbm(out)
    assert grid.shape == (65, 128)
    for k in range(7):
        assert grid[2 ** k].sum() == 2
    lines = out.read_text().splitlines()
    assert lines[0] == "P1" and max(len(ln) for ln in lines) <= 70
    again = tmp_path / "st2.pbm"
    run(parse_config({"seed": 1}, kind="space-time"), again)
    assert again.read_bytes() == out.read_bytes()


def test_space_time_zero_row(tmp_path):
    cfg = parse_config({"seed": 1, "space_time": {"initial": "zeros", "width": 16, "steps": 8}}, kind="space-time")
    out = tmp_path / "z.pbm"
    run(cfg, out)
    assert not read_pbm(out).any()


def test_space_time_pascal_rows(tmp_path):
    # row t of an impulse at 40 lights 40 - l for every l in the Lucas support of t
    cfg = parse_config({"seed": 1, "space_time": {"width": 64, "steps": 31, "position": 40}}, kind="space-time")
    out = tmp_path / "p.pbm"
    run(cfg, out)
    grid = read_pbm(out)
    for t in range(32):
        assert set(np.flatnonzero(grid[t]).tolist()) == {40 - l for l in lucas_support(t)}


# --- CLI ---------------------------------------------------------------------


def test_cli_verify_core(tmp_path, capsys):
    assert cli.main(["verify-core", "--seed", "1", "--out", str(tmp_path / "v.txt")]) == 0
    assert "OVERALL PASS" in capsys.readouterr().out


def test_cli_mutation_fails(tmp_path, capsys):
    cfg = _write(tmp_path, "m.toml", "seed = 1\n[verify_core]\nmutate = true\n")
    assert cli.main(["verify-core", "--config", str(cfg), "--out", str(tmp_path / "m.txt")]) == 2
    out = capsys.readouterr().out
    assert "FAIL lucas_equivalence: n=257" in out


def test_cli_validation_error(tmp_path):
    cfg = _write(tmp_path, "bad.toml", 'seed = 1\n[measure]\ntype = "block-code"\nQ = 3\nR = 1\ngenerator = ["111"]\n')
    assert cli.main(["support-check", "--config", str(cfg), "--out", str(tmp_path / "x.csv")]) == 1


def test_cli_missing_seed(tmp_path):
    assert cli.main(["space-time", "--out", str(tmp_path / "x.pbm")]) == 1


def test_cli_io_error(tmp_path):
    assert cli.main(["space-time", "--seed", "1", "--config", str(tmp_path / "missing.toml")]) == 3
    blocker = _write(tmp_path, "file", "")
    assert cli.main(["space-time", "--seed", "1", "--out", str(blocker / "x.pbm")]) == 3
