"""Command-line interface: single runs, ablation matrices, grid search, and
report generation from stored run outputs.

Exit codes: 0 success, 1 data error, 2 configuration error, 3 every run of an
ablation failed.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor

from .backend import available_backends, default_backend
from .data import open_stream
from .errors import ConfigError, DataError
from .evaluation import (
    RECORD_FIELDS,
    aggregate_ranking,
    efficiency_scores,
    friedman_nemenyi,
    load_summary,
    make_csv_sink,
    prequential_run,
)
from .tree import HoeffdingParams

FLAG_LETTERS = "GTE"

# The named algorithm grid: the plain baseline and the strict-constraint
# learner, each with its published subset of the adaptive-flag combinations.
_VFDT_FLAGSETS = ("", "G", "T", "E", "GT")
_DFDT_FLAGSETS = ("", "G", "T", "E", "GT", "GE", "TE", "GTE")


def canonical_name(base: str, flags: str) -> str:
    suffix = "".join(letter for letter in FLAG_LETTERS if letter in flags)
    return base.upper() + (f"_{suffix}" if suffix else "")


ALGORITHM_NAMES = tuple(
    [canonical_name("vfdt", f) for f in _VFDT_FLAGSETS]
    + [canonical_name("dfdt", f) for f in _DFDT_FLAGSETS]
)


def parse_flags(flags: str) -> str:
    seen = []
    for letter in (flags or "").upper():
        if letter not in FLAG_LETTERS:
            raise ConfigError(
                f"unknown flag letter {letter!r}; valid letters: {FLAG_LETTERS}"
            )
        if letter not in seen:
            seen.append(letter)
    return "".join(letter for letter in FLAG_LETTERS if letter in seen)


def split_algorithm_name(name: str) -> tuple:
    """Map an algorithm name like DFDT_GTE back to (base, flags)."""
    base, _, suffix = name.partition("_")
    base = base.lower()
    if base not in ("vfdt", "dfdt"):
        raise ConfigError(f"unknown algorithm {name!r}")
    flags = parse_flags(suffix)
    if canonical_name(base, flags) != name.upper():
        raise ConfigError(f"malformed algorithm name {name!r}")
    return base, flags


def build_params(base: str, flags: str, args) -> HoeffdingParams:
    try:
        return HoeffdingParams(
            delta=args.delta,
            n_min_default=args.grace,
            tau_fixed=args.tau,
            adaptive_grace="G" in flags,
            adaptive_tie="T" in flags,
            expansion="E" in flags,
            strict=(base == "dfdt"),
            n_min_cap=args.cap,
            candidate_points=args.points,
            window=args.window,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


# -- output helpers -----------------------------------------------------------


def _atomic_write(path, payload: str) -> None:
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(out_dir, files) -> None:
    entries = {
        os.path.relpath(path, out_dir): _sha256(path) for path in sorted(files)
    }
    payload = json.dumps({"files": entries}, indent=2, sort_keys=True) + "\n"
    _atomic_write(os.path.join(out_dir, "manifest.json"), payload)


def _run_dir_name(dataset: str, algorithm: str, grid_tag: str = "") -> str:
    safe = lambda s: "".join(c if c.isalnum() or c in "-_." else "_" for c in s)
    name = f"{safe(dataset)}__{safe(algorithm)}"
    if grid_tag:
        name += f"__{grid_tag}"
    return name


def execute_run(spec: dict) -> dict:
    """Run one (dataset, algorithm) pair and write records + summary.

    `spec` is a plain picklable dict so ablations can farm runs out to worker
    processes. Returns the summary dict.
    """
    reader_options = {}
    if spec["format"] == "csv":
        reader_options = {
            "header": spec.get("header"),
            "label_column": spec.get("label_column"),
        }
    elif spec["format"] == "arff":
        reader_options = {"label_column": spec.get("label_column")}
    source = open_stream(spec["data"], spec["format"], seed=spec["seed"], **reader_options)
    params = HoeffdingParams(**spec["params"])
    run_dir = spec["run_dir"]
    os.makedirs(run_dir, exist_ok=True)
    records_path = os.path.join(run_dir, "records.csv")
    tmp_records = records_path + ".tmp"
    with open(tmp_records, "w", newline="", encoding="utf-8") as fh:
        sink = make_csv_sink(fh)
        result = prequential_run(
            source,
            params,
            algorithm=spec["algorithm"],
            backend=spec.get("backend"),
            sample_every=spec.get("sample_every", 100),
            record_sink=sink,
        )
    os.replace(tmp_records, records_path)
    summary_path = os.path.join(run_dir, "summary.json")
    payload = json.dumps(result.summary.to_dict(), indent=2, sort_keys=True) + "\n"
    _atomic_write(summary_path, payload)
    if spec.get("export_tree", False):
        _atomic_write(os.path.join(run_dir, "tree.txt"), result.tree.export_text())
    return result.summary.to_dict()


def _make_spec(args, base, flags, dataset, algorithm, run_dir, grid=None) -> dict:
    params = build_params(base, flags, args)
    spec = {
        "data": dataset,
        "format": args.format,
        "seed": args.seed,
        "header": getattr(args, "header", None),
        "label_column": getattr(args, "label_column", None),
        "algorithm": algorithm,
        "backend": args.backend,
        "sample_every": args.sample_every,
        "run_dir": run_dir,
        "export_tree": getattr(args, "export_tree", False),
        "params": {
            "delta": params.delta,
            "n_min_default": params.n_min_default,
            "tau_fixed": params.tau_fixed,
            "adaptive_grace": params.adaptive_grace,
            "adaptive_tie": params.adaptive_tie,
            "expansion": params.expansion,
            "strict": params.strict,
            "n_min_cap": params.n_min_cap,
            "candidate_points": params.candidate_points,
            "window": params.window,
        },
    }
    if grid:
        spec["params"]["n_min_default"] = grid[0]
        spec["params"]["tau_fixed"] = grid[1]
    return spec


def _dataset_name(args, data: str) -> str:
    if args.format == "synthetic":
        from .data import generate_random_tree_stream, parse_synthetic_spec

        kwargs = parse_synthetic_spec(data)
        return generate_random_tree_stream(args.seed, **kwargs).name
    return os.path.splitext(os.path.basename(data))[0]


# -- subcommands ---------------------------------------------------------------


def cmd_run(args) -> int:
    base, flags = args.algo.lower(), parse_flags(args.flags)
    if base not in ("vfdt", "dfdt"):
        raise ConfigError(f"unknown algorithm {args.algo!r}; expected vfdt or dfdt")
    algorithm = canonical_name(base, flags)
    dataset = _dataset_name(args, args.data)
    run_dir = os.path.join(args.out, _run_dir_name(dataset, algorithm))
    spec = _make_spec(args, base, flags, args.data, algorithm, run_dir)
    summary = execute_run(spec)
    files = [os.path.join(run_dir, "records.csv"), os.path.join(run_dir, "summary.json")]
    if spec["export_tree"]:
        files.append(os.path.join(run_dir, "tree.txt"))
    write_manifest(args.out, files)
    print(
        f"{algorithm} on {dataset}: accuracy={summary['final_accuracy']:.4f} "
        f"memory={summary['memory_bytes']}B splits={summary['n_splits']}"
    )
    return 0


def cmd_ablate(args) -> int:
    datasets = list(args.data)
    if not datasets:
        raise ConfigError("no datasets given")
    if args.all or args.algos.strip().lower() == "all":
        names = list(ALGORITHM_NAMES)
    else:
        names = [n.strip().upper() for n in args.algos.split(",") if n.strip()]
    if not names:
        raise ConfigError("no algorithms given")

    specs = []
    for data in datasets:
        dataset = _dataset_name(args, data)
        for name in names:
            base, flags = split_algorithm_name(name)
            run_dir = os.path.join(args.out, _run_dir_name(dataset, name))
            specs.append(_make_spec(args, base, flags, data, name, run_dir))

    results = {}
    failures = []
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            for spec, outcome in zip(specs, pool.map(_worker, specs)):
                key = (spec["run_dir"], spec["algorithm"])
                if isinstance(outcome, dict):
                    results[key] = outcome
                else:
                    failures.append((key, outcome))
    else:
        for spec in specs:
            key = (spec["run_dir"], spec["algorithm"])
            try:
                results[key] = execute_run(spec)
            except (DataError, ConfigError) as exc:
                failures.append((key, str(exc)))

    for (run_dir, algorithm), message in failures:
        print(f"FAILED {algorithm} ({run_dir}): {message}", file=sys.stderr)
    if not results:
        return 3

    matrix_path = os.path.join(args.out, "matrix.csv")
    lines = ["dataset,algorithm,accuracy,memory_bytes,elapsed_ns"]
    for summary in sorted(results.values(), key=lambda s: (s["dataset"], s["algorithm"])):
        lines.append(
            f"{summary['dataset']},{summary['algorithm']},{summary['final_accuracy']!r},"
            f"{summary['memory_bytes']},{summary['elapsed_ns']}"
        )
    _atomic_write(matrix_path, "\n".join(lines) + "\n")

    files = [matrix_path]
    for summary in results.values():
        run_dir = os.path.join(
            args.out, _run_dir_name(summary["dataset"], summary["algorithm"])
        )
        files.append(os.path.join(run_dir, "records.csv"))
        files.append(os.path.join(run_dir, "summary.json"))
    write_manifest(args.out, files)
    print(f"{len(results)} runs completed, {len(failures)} failed; matrix at {matrix_path}")
    return 0


def _worker(spec):
    try:
        return execute_run(spec)
    except (DataError, ConfigError) as exc:
        return str(exc)


def cmd_grid(args) -> int:
    base, flags = args.algo.lower(), parse_flags(args.flags)
    if base not in ("vfdt", "dfdt"):
        raise ConfigError(f"unknown algorithm {args.algo!r}; expected vfdt or dfdt")
    algorithm = canonical_name(base, flags)
    dataset = _dataset_name(args, args.data)
    graces = [int(x) for x in args.grace_grid.split(",") if x]
    taus = [float(x) for x in args.tau_grid.split(",") if x]
    if not graces or not taus:
        raise ConfigError("grid axes must be non-empty")

    cells = []
    files = []
    for grace in graces:
        for tau in taus:
            tag = f"g{grace}_t{tau:g}".replace(".", "p")
            run_dir = os.path.join(args.out, _run_dir_name(dataset, algorithm, tag))
            spec = _make_spec(args, base, flags, args.data, algorithm, run_dir,
                              grid=(grace, tau))
            summary = execute_run(spec)
            cells.append((grace, tau, summary))
            files.append(os.path.join(run_dir, "records.csv"))
            files.append(os.path.join(run_dir, "summary.json"))

    # best cell: accuracy, then lower memory, then lower runtime
    best = max(
        cells,
        key=lambda c: (
            c[2]["final_accuracy"],
            -c[2]["memory_bytes"],
            -c[2]["elapsed_ns"],
        ),
    )
    grid_path = os.path.join(args.out, "grid.csv")
    lines = ["grace,tau,accuracy,memory_bytes,elapsed_ns"]
    for grace, tau, summary in cells:
        lines.append(
            f"{grace},{tau!r},{summary['final_accuracy']!r},"
            f"{summary['memory_bytes']},{summary['elapsed_ns']}"
        )
    _atomic_write(grid_path, "\n".join(lines) + "\n")
    accuracies = [summary["final_accuracy"] for _, _, summary in cells]
    mean_acc = sum(accuracies) / len(accuracies)
    std_acc = math.sqrt(sum((a - mean_acc) ** 2 for a in accuracies) / len(accuracies))
    best_path = os.path.join(args.out, "best.json")
    _atomic_write(
        best_path,
        json.dumps(
            {
                "algorithm": algorithm,
                "dataset": dataset,
                "grace": best[0],
                "tau": best[1],
                "accuracy": best[2]["final_accuracy"],
                "memory_bytes": best[2]["memory_bytes"],
                "elapsed_ns": best[2]["elapsed_ns"],
                "grid_accuracy_mean": mean_acc,
                "grid_accuracy_std": std_acc,
            },
            indent=2,
            sort_keys=True,
        )
        + "\n",
    )
    write_manifest(args.out, files + [grid_path, best_path])
    print(
        f"grid best for {algorithm} on {dataset}: grace={best[0]} tau={best[1]} "
        f"accuracy={best[2]['final_accuracy']:.4f}"
    )
    return 0


def cmd_report(args) -> int:
    runs_dir = args.runs
    if not os.path.isdir(runs_dir):
        raise DataError(f"no such run directory: {runs_dir}")
    summaries = []
    for entry in sorted(os.listdir(runs_dir)):
        summary_path = os.path.join(runs_dir, entry, "summary.json")
        if os.path.isfile(summary_path):
            summary = load_summary(summary_path)
            summary["_dir"] = os.path.join(runs_dir, entry)
            summaries.append(summary)
    if not summaries:
        raise DataError(f"{runs_dir}: no run summaries found")

    by_dataset: dict = {}
    for summary in summaries:
        by_dataset.setdefault(summary["dataset"], {})[summary["algorithm"]] = summary
    datasets = sorted(by_dataset)
    algorithms = sorted(by_dataset[datasets[0]])
    for ds in datasets:
        names = sorted(by_dataset[ds])
        if names != algorithms:
            gap = sorted(set(algorithms).symmetric_difference(names))
            raise ConfigError(
                f"algorithm sets differ across datasets: dataset {ds!r} "
                f"mismatches on {gap}"
            )
    if len(algorithms) < 2:
        raise ConfigError("reporting needs at least 2 algorithms per dataset")

    os.makedirs(args.out, exist_ok=True)
    files = []

    reports = {}
    for ds in datasets:
        raw = {
            a: (
                by_dataset[ds][a]["final_accuracy"],
                float(by_dataset[ds][a]["memory_bytes"]),
                float(by_dataset[ds][a]["elapsed_ns"]),
            )
            for a in algorithms
        }
        reports[ds] = efficiency_scores(raw)

    eff_path = os.path.join(args.out, "efficiency_per_dataset.csv")
    lines = ["dataset," + ",".join(algorithms) + ",best"]
    for ds in datasets:
        rows = reports[ds].rows
        best = max(algorithms, key=lambda a: (rows[a].efficiency, a))
        lines.append(
            f"{ds}," + ",".join(repr(rows[a].efficiency) for a in algorithms) + f",{best}"
        )
    _atomic_write(eff_path, "\n".join(lines) + "\n")
    files.append(eff_path)

    agg_path = os.path.join(args.out, "aggregate_ranking.csv")
    lines = ["algorithm,efficiency,accuracy,memory,runtime"]
    for row in aggregate_ranking(reports):
        lines.append(
            f"{row.algorithm},{row.efficiency!r},{row.accuracy!r},"
            f"{row.memory!r},{row.runtime!r}"
        )
    _atomic_write(agg_path, "\n".join(lines) + "\n")
    files.append(agg_path)

    if len(datasets) >= 2:
        acc_matrix = [
            [by_dataset[ds][a]["final_accuracy"] for a in algorithms] for ds in datasets
        ]
        mem_matrix = [
            [float(by_dataset[ds][a]["memory_bytes"]) for a in algorithms]
            for ds in datasets
        ]
        rank_summary = {
            "accuracy": friedman_nemenyi(
                acc_matrix, algorithms, alpha=args.alpha, higher_is_better=True
            ).to_dict(),
            "memory": friedman_nemenyi(
                mem_matrix, algorithms, alpha=args.alpha, higher_is_better=False
            ).to_dict(),
        }
        rank_path = os.path.join(args.out, "rank_summary.json")
        _atomic_write(rank_path, json.dumps(rank_summary, indent=2, sort_keys=True) + "\n")
        files.append(rank_path)

    for summary in summaries:
        records_path = os.path.join(summary["_dir"], "records.csv")
        if not os.path.isfile(records_path):
            continue
        ts_name = f"timeseries_{_run_dir_name(summary['dataset'], summary['algorithm'])}.csv"
        ts_path = os.path.join(args.out, ts_name)
        lines = ["index,window_acc,memory_bytes"]
        with open(records_path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or tuple(header) != RECORD_FIELDS:
                raise DataError(f"{records_path}: not a records CSV")
            last = None
            final = None
            for row in reader:
                if int(row[0]) % args.sample_every == 0:
                    lines.append(f"{row[0]},{row[3]},{row[4]}")
                    last = row[0]
                final = row
            if final is not None and final[0] != last:
                lines.append(f"{final[0]},{final[3]},{final[4]}")
        _atomic_write(ts_path, "\n".join(lines) + "\n")
        files.append(ts_path)

    write_manifest(args.out, files)
    print(f"report written to {args.out} ({len(datasets)} datasets, {len(algorithms)} algorithms)")
    return 0


# -- argument parsing ----------------------------------------------------------


def _add_learner_options(parser):
    parser.add_argument("--delta", type=float, default=1e-7,
                        help="split confidence (default 1e-7)")
    parser.add_argument("--grace", type=int, default=200,
                        help="default grace period n_min (default 200)")
    parser.add_argument("--tau", type=float, default=0.05,
                        help="fixed tie threshold (default 0.05)")
    parser.add_argument("--window", type=int, default=1000,
                        help="trailing accuracy window (default 1000)")
    parser.add_argument("--cap", type=int, default=None,
                        help="grace period cap (default 20x grace)")
    parser.add_argument("--points", type=int, default=10,
                        help="numeric candidate thresholds per attribute (default 10)")
    parser.add_argument("--sample-every", type=int, default=100,
                        help="memory sampling stride in instances (default 100)")
    parser.add_argument("--backend", default=None,
                        help="kernel backend: auto, cython, or python")


def _add_data_options(parser, multi=False):
    if multi:
        parser.add_argument("--data", required=True, action="append",
                            help="dataset path or synthetic spec; repeat the "
                                 "flag for multiple datasets")
    else:
        parser.add_argument("--data", required=True,
                            help="dataset path, or a synthetic spec like "
                                 "attrs=5,classes=2,depth=3,n=10000,noise=0.1")
    parser.add_argument("--format", choices=("csv", "arff", "synthetic"), default="csv")
    parser.add_argument("--seed", type=int, default=0,
                        help="seed for synthetic sources (default 0)")
    parser.add_argument("--label-column", default=None,
                        help="label column name or index (default: last)")
    header = parser.add_mutually_exclusive_group()
    header.add_argument("--header", dest="header", action="store_true", default=None,
                        help="first CSV row is a header")
    header.add_argument("--no-header", dest="header", action="store_false",
                        help="CSV has no header row")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="streamtree",
        description="Incremental decision-tree stream mining with a prequential "
                    "evaluation harness.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="single prequential run")
    _add_data_options(run)
    _add_learner_options(run)
    run.add_argument("--algo", default="vfdt", help="vfdt or dfdt")
    run.add_argument("--flags", default="", help="adaptive flags, subset of GTE")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--export-tree", action="store_true",
                     help="also write the serialized tree")
    run.set_defaults(func=cmd_run)

    ablate = sub.add_parser("ablate", help="run a dataset x algorithm matrix")
    _add_data_options(ablate, multi=True)
    _add_learner_options(ablate)
    ablate.add_argument("--algos", default="all",
                        help="comma-separated algorithm names, or 'all'")
    ablate.add_argument("--all", action="store_true",
                        help="run all named algorithm variants")
    ablate.add_argument("--jobs", type=int, default=1,
                        help="parallel worker processes (default 1)")
    ablate.add_argument("--out", required=True)
    ablate.set_defaults(func=cmd_ablate)

    grid = sub.add_parser("grid", help="grace/tie grid search for one algorithm")
    _add_data_options(grid)
    _add_learner_options(grid)
    grid.add_argument("--algo", default="vfdt")
    grid.add_argument("--flags", default="")
    grid.add_argument("--grace-grid", default="100,400,1000")
    grid.add_argument("--tau-grid", default="0.01,0.05,0.1")
    grid.add_argument("--out", required=True)
    grid.set_defaults(func=cmd_grid)

    report = sub.add_parser("report", help="efficiency tables and rank statistics "
                                           "from stored run outputs")
    report.add_argument("--runs", required=True, help="directory containing run outputs")
    report.add_argument("--out", required=True)
    report.add_argument("--alpha", type=float, default=0.05)
    report.add_argument("--sample-every", type=int, default=100)
    report.set_defaults(func=cmd_report)

    info = sub.add_parser("backends", help="show available kernel backends")
    info.set_defaults(func=lambda args: print(
        f"default: {default_backend()}; available: {', '.join(available_backends())}"
    ) or 0)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        result = args.func(args)
        return 0 if result is None else result
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
