"""End-to-end CLI tests over synthetic streams and tiny files."""

import csv
import hashlib
import json
import os

import pytest

from streamtree.cli import ALGORITHM_NAMES, main, parse_flags, split_algorithm_name
from streamtree.errors import ConfigError

SYNTH = "attrs=3,classes=2,depth=2,n=400,noise=0.05"


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def test_algorithm_registry_is_the_thirteen_named_variants():
    assert len(ALGORITHM_NAMES) == 13
    assert set(ALGORITHM_NAMES) == {
        "VFDT", "VFDT_G", "VFDT_T", "VFDT_E", "VFDT_GT",
        "DFDT", "DFDT_G", "DFDT_T", "DFDT_E", "DFDT_GT",
        "DFDT_GE", "DFDT_TE", "DFDT_GTE",
    }
    for name in ALGORITHM_NAMES:
        base, flags = split_algorithm_name(name)
        assert base in ("vfdt", "dfdt")
        # round-trips uniquely
        from streamtree.cli import canonical_name

        assert canonical_name(base, flags) == name


def test_parse_flags_normalizes_and_rejects():
    assert parse_flags("etg") == "GTE"
    assert parse_flags("") == ""
    with pytest.raises(ConfigError):
        parse_flags("GX")


def test_run_happy_path_writes_outputs(tmp_path, capsys):
    out = tmp_path / "out"
    code = main([
        "run", "--algo", "dfdt", "--flags", "GTE", "--format", "synthetic",
        "--data", SYNTH, "--seed", "7", "--out", str(out), "--export-tree",
    ])
    assert code == 0
    run_dirs = [d for d in os.listdir(out) if d != "manifest.json"]
    assert len(run_dirs) == 1 and "DFDT_GTE" in run_dirs[0]
    run_dir = out / run_dirs[0]
    assert (run_dir / "records.csv").exists()
    assert (run_dir / "summary.json").exists()
    assert (run_dir / "tree.txt").exists()
    summary = read_json(run_dir / "summary.json")
    assert summary["n_instances"] == 400
    assert summary["algorithm"] == "DFDT_GTE"
    assert summary["config"]["strict"] is True
    # manifest hashes verify
    manifest = read_json(out / "manifest.json")
    for rel, digest in manifest["files"].items():
        payload = (out / rel).read_bytes()
        assert hashlib.sha256(payload).hexdigest() == digest


def test_run_unknown_flag_letter_exits_2(tmp_path, capsys):
    code = main([
        "run", "--algo", "vfdt", "--flags", "Q", "--format", "synthetic",
        "--data", SYNTH, "--out", str(tmp_path / "o"),
    ])
    assert code == 2
    assert "Q" in capsys.readouterr().err


def test_run_missing_file_exits_1_with_path(tmp_path, capsys):
    code = main([
        "run", "--algo", "vfdt", "--data", "nope/missing.csv",
        "--format", "csv", "--out", str(tmp_path / "o"),
    ])
    assert code == 1
    assert "missing.csv" in capsys.readouterr().err


def test_run_bad_algorithm_exits_2(tmp_path, capsys):
    code = main([
        "run", "--algo", "cart", "--format", "synthetic", "--data", SYNTH,
        "--out", str(tmp_path / "o"),
    ])
    assert code == 2


def test_ablate_all_thirteen_rows_and_report(tmp_path, capsys):
    out = tmp_path / "abl"
    code = main([
        "ablate", "--all", "--format", "synthetic", "--data", SYNTH,
        "--seed", "3", "--out", str(out),
    ])
    assert code == 0
    with open(out / "matrix.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 13
    assert {r["algorithm"] for r in rows} == set(ALGORITHM_NAMES)

    # a dedicated run of VFDT reproduces the matrix row bit-exactly
    solo = tmp_path / "solo"
    assert main([
        "run", "--algo", "vfdt", "--format", "synthetic", "--data", SYNTH,
        "--seed", "3", "--out", str(solo),
    ]) == 0
    solo_dir = next(d for d in os.listdir(solo) if d != "manifest.json")
    summary = read_json(solo / solo_dir / "summary.json")
    matrix_row = next(r for r in rows if r["algorithm"] == "VFDT")
    assert float(matrix_row["accuracy"]) == summary["final_accuracy"]
    assert int(matrix_row["memory_bytes"]) == summary["memory_bytes"]

    # the ablation directory feeds the report command unchanged
    report_out = tmp_path / "report"
    code = main([
        "report", "--runs", str(out), "--out", str(report_out), "--alpha", "0.05",
    ])
    assert code == 0
    eff = (report_out / "efficiency_per_dataset.csv").read_text().splitlines()
    assert len(eff) == 2  # header + single dataset
    header = eff[0].split(",")
    values = eff[1].split(",")
    for v in values[1:-1]:
        assert 0.0 <= float(v) <= 1.0
    agg = (report_out / "aggregate_ranking.csv").read_text().splitlines()
    assert len(agg) == 14
    assert not (report_out / "rank_summary.json").exists()  # single dataset

    # report is idempotent byte-for-byte
    before = {
        f: (report_out / f).read_bytes() for f in os.listdir(report_out)
    }
    assert main([
        "report", "--runs", str(out), "--out", str(report_out), "--alpha", "0.05",
    ]) == 0
    after = {f: (report_out / f).read_bytes() for f in os.listdir(report_out)}
    assert before == after


def test_ablate_all_runs_failing_exits_3(tmp_path, capsys):
    code = main([
        "ablate", "--algos", "VFDT,DFDT", "--format", "csv",
        "--data", "does-not-exist.csv", "--out", str(tmp_path / "o"),
    ])
    assert code == 3
    assert "does-not-exist.csv" in capsys.readouterr().err


def test_ablate_parallel_matches_serial(tmp_path):
    serial = tmp_path / "serial"
    parallel = tmp_path / "parallel"
    args = [
        "ablate", "--algos", "VFDT,VFDT_T,DFDT_GTE", "--format", "synthetic",
        "--data", SYNTH, "--seed", "5",
    ]
    assert main(args + ["--out", str(serial)]) == 0
    assert main(args + ["--out", str(parallel), "--jobs", "3"]) == 0

    def deterministic_columns(path):
        return [row.rsplit(",", 1)[0] for row in path.read_text().splitlines()]

    assert deterministic_columns(serial / "matrix.csv") == deterministic_columns(
        parallel / "matrix.csv"
    )


def test_report_multi_dataset_emits_rank_summary(tmp_path):
    out = tmp_path / "runs"
    for seed, spec in ((1, SYNTH), (2, "attrs=4,classes=2,depth=2,n=300,noise=0.1")):
        assert main([
            "ablate", "--algos", "VFDT,VFDT_T,DFDT_GTE", "--format", "synthetic",
            "--data", spec, "--seed", str(seed), "--out", str(out),
        ]) == 0
    report_out = tmp_path / "rep"
    assert main(["report", "--runs", str(out), "--out", str(report_out)]) == 0

    # the best-per-dataset marker names the argmax efficiency column
    eff_lines = (report_out / "efficiency_per_dataset.csv").read_text().splitlines()
    header = eff_lines[0].split(",")
    algos = header[1:-1]
    for line in eff_lines[1:]:
        cells = line.split(",")
        values = [float(v) for v in cells[1:-1]]
        assert cells[-1] == algos[values.index(max(values))]

    ranks = read_json(report_out / "rank_summary.json")
    for section in ("accuracy", "memory"):
        avg = ranks[section]["average_ranks"]
        assert len(avg) == 3
        assert sum(avg.values()) == pytest.approx(3 * 4 / 2)
        assert ranks[section]["critical_difference"] > 0
    ts = [f for f in os.listdir(report_out) if f.startswith("timeseries_")]
    assert len(ts) == 6


def test_report_mismatched_algorithm_sets_exits_2(tmp_path, capsys):
    out = tmp_path / "runs"
    assert main([
        "ablate", "--algos", "VFDT,VFDT_T", "--format", "synthetic",
        "--data", SYNTH, "--seed", "1", "--out", str(out),
    ]) == 0
    assert main([
        "run", "--algo", "dfdt", "--format", "synthetic",
        "--data", "attrs=4,classes=2,depth=2,n=300,noise=0.0", "--seed", "2",
        "--out", str(out),
    ]) == 0
    code = main(["report", "--runs", str(out), "--out", str(tmp_path / "rep")])
    assert code == 2
    err = capsys.readouterr().err
    assert "DFDT" in err or "VFDT" in err


def test_grid_default_nine_cells_and_best(tmp_path):
    out = tmp_path / "grid"
    code = main([
        "grid", "--algo", "vfdt", "--format", "synthetic", "--data", SYNTH,
        "--seed", "9", "--out", str(out),
    ])
    assert code == 0
    with open(out / "grid.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 9
    assert {r["grace"] for r in rows} == {"100", "400", "1000"}
    best = read_json(out / "best.json")
    assert best["accuracy"] == max(float(r["accuracy"]) for r in rows)


def test_grid_single_cell_matches_run(tmp_path):
    grid_out = tmp_path / "g"
    assert main([
        "grid", "--algo", "vfdt", "--format", "synthetic", "--data", SYNTH,
        "--seed", "11", "--grace-grid", "200", "--tau-grid", "0.05",
        "--out", str(grid_out),
    ]) == 0
    run_out = tmp_path / "r"
    assert main([
        "run", "--algo", "vfdt", "--format", "synthetic", "--data", SYNTH,
        "--seed", "11", "--grace", "200", "--tau", "0.05", "--out", str(run_out),
    ]) == 0
    best = read_json(grid_out / "best.json")
    run_dir = next(d for d in os.listdir(run_out) if d != "manifest.json")
    summary = read_json(run_out / run_dir / "summary.json")
    assert best["accuracy"] == summary["final_accuracy"]
    assert best["memory_bytes"] == summary["memory_bytes"]


def test_backends_subcommand(capsys):
    assert main(["backends"]) == 0
    out = capsys.readouterr().out
    assert "python" in out
