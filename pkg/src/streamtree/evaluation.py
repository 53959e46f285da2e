"""Prequential (test-then-train) evaluation, the efficiency metric, aggregate
ranking, and Friedman/Nemenyi average-rank statistics.

Runs emit per-instance record streams (CSV) and summaries (JSON); the scoring
functions consume those artifacts, so analyses can be re-run without
re-touching the learners.
"""

from __future__ import annotations

import csv
import json
import math
import time
from collections import deque
from dataclasses import dataclass, replace

from .errors import DataError
from .tree import HoeffdingParams, HoeffdingTree

RECORD_FIELDS = ("index", "correct", "cum_acc", "window_acc", "memory_bytes", "elapsed_ns")


@dataclass(frozen=True)
class PrequentialRecord:
    """Per-instance trace row. `memory_bytes` carries the most recent sample;
    `elapsed_ns` is the cumulative learn/predict wall clock."""

    index: int
    correct: bool
    cum_accuracy: float
    window_accuracy: float
    memory_bytes: int
    elapsed_ns: int


@dataclass
class RunSummary:
    dataset: str
    algorithm: str
    n_instances: int
    final_accuracy: float
    final_window_accuracy: float
    memory_bytes: int
    elapsed_ns: int
    n_split_nodes: int
    n_leaves: int
    n_inactive_leaves: int
    n_splits: int
    n_attempts: int
    n_aborted_attempts: int
    attempts_by_path: dict
    splits: list
    config: dict

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "algorithm": self.algorithm,
            "n_instances": self.n_instances,
            "final_accuracy": self.final_accuracy,
            "final_window_accuracy": self.final_window_accuracy,
            "memory_bytes": self.memory_bytes,
            "elapsed_ns": self.elapsed_ns,
            "n_split_nodes": self.n_split_nodes,
            "n_leaves": self.n_leaves,
            "n_inactive_leaves": self.n_inactive_leaves,
            "n_splits": self.n_splits,
            "n_attempts": self.n_attempts,
            "n_aborted_attempts": self.n_aborted_attempts,
            "attempts_by_path": self.attempts_by_path,
            "splits": self.splits,
            "config": self.config,
        }


@dataclass
class RunResult:
    records: list | None
    summary: RunSummary
    tree: HoeffdingTree


def prequential_run(
    source,
    params: HoeffdingParams | None = None,
    algorithm: str = "",
    backend=None,
    sample_every: int = 100,
    record_sink=None,
):
    """Evaluate test-then-train over `source`: every instance is scored on the
    pre-update prediction, then learned.

    Records are produced for every instance; model memory is re-measured every
    `sample_every` instances and once more at the end (the final record always
    carries a fresh sample). `record_sink`, when given, receives each record
    instead of them being collected in memory.
    """
    if params is None:
        params = HoeffdingParams()
    if sample_every < 1:
        raise ValueError("sample_every must be >= 1")
    tree = HoeffdingTree(source.schema, params, backend)
    window = params.window
    recent = deque()
    recent_correct = 0
    records = [] if record_sink is None else None
    pending = None  # one-record emission lag so the last row gets a fresh memory sample
    n_correct = 0
    elapsed_ns = 0
    index = 0
    last_memory = tree.measure_memory()

    def emit(record):
        if records is not None:
            records.append(record)
        else:
            record_sink(record)

    for instance in source:
        index += 1
        t0 = time.perf_counter_ns()
        try:
            prediction = tree.learn_one(instance)
        except DataError as exc:
            raise DataError(f"{source.name}: instance {index}: {exc}") from exc
        elapsed_ns += time.perf_counter_ns() - t0

        correct = prediction == instance.label
        if correct:
            n_correct += 1
        if len(recent) == window:
            recent_correct -= recent.popleft()
        recent.append(1 if correct else 0)
        if correct:
            recent_correct += 1
        if index % sample_every == 0:
            last_memory = tree.measure_memory()
        record = PrequentialRecord(
            index,
            correct,
            n_correct / index,
            recent_correct / len(recent),
            last_memory,
            elapsed_ns,
        )
        if pending is not None:
            emit(pending)
        pending = record

    final_memory = tree.measure_memory()
    if pending is not None:
        if pending.index % sample_every != 0:
            pending = replace(pending, memory_bytes=final_memory)
        emit(pending)

    counts = tree.node_counts()
    summary = RunSummary(
        dataset=source.name,
        algorithm=algorithm or f"tree[{tree.params.flag_string() or 'plain'}]",
        n_instances=index,
        final_accuracy=n_correct / index if index else 0.0,
        final_window_accuracy=recent_correct / len(recent) if recent else 0.0,
        memory_bytes=final_memory,
        elapsed_ns=elapsed_ns,
        n_split_nodes=counts["split_nodes"],
        n_leaves=counts["leaves"],
        n_inactive_leaves=counts["inactive_leaves"],
        n_splits=len(tree.splits),
        n_attempts=tree.attempts,
        n_aborted_attempts=tree.aborted_attempts,
        attempts_by_path={p.value: c for p, c in tree.attempts_by_path.items()},
        splits=[
            {
                "n": s.n,
                "attribute": s.attribute,
                "kind": s.kind,
                "threshold": s.threshold,
                "branch_values": list(s.branch_values) if s.branch_values else None,
                "path": s.path.value,
            }
            for s in tree.splits
        ],
        config={
            "delta": params.delta,
            "n_min_default": params.n_min_default,
            "tau_fixed": params.tau_fixed,
            "adaptive_grace": params.adaptive_grace,
            "adaptive_tie": params.adaptive_tie,
            "expansion": params.expansion,
            "strict": params.strict,
            "n_min_cap": params.effective_cap,
            "candidate_points": params.candidate_points,
            "window": params.window,
            "sample_every": sample_every,
            "backend": tree.backend,
        },
    )
    return RunResult(records, summary, tree)


# -- record / summary serialization -----------------------------------------


def record_to_row(record: PrequentialRecord):
    return (
        str(record.index),
        str(int(record.correct)),
        repr(record.cum_accuracy),
        repr(record.window_accuracy),
        str(record.memory_bytes),
        str(record.elapsed_ns),
    )


def write_records_csv(path, records) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(RECORD_FIELDS)
        for record in records:
            writer.writerow(record_to_row(record))


def make_csv_sink(fh):
    """A record sink writing rows to an open file handle."""
    writer = csv.writer(fh)
    writer.writerow(RECORD_FIELDS)

    def sink(record):
        writer.writerow(record_to_row(record))

    return sink


def write_summary_json(path, summary: RunSummary) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(summary.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_summary(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def load_records_csv(path):
    """Rows of the records CSV as typed tuples (cheap re-analysis input)."""
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != RECORD_FIELDS:
            raise DataError(f"{path}: not a records CSV")
        for row in reader:
            out.append(
                PrequentialRecord(
                    int(row[0]), bool(int(row[1])), float(row[2]),
                    float(row[3]), int(row[4]), int(row[5]),
                )
            )
    return out


# -- efficiency scoring -------------------------------------------------------


@dataclass(frozen=True)
class EfficiencyRow:
    accuracy: float
    memory: float
    runtime: float
    accuracy_n: float
    memory_n: float
    runtime_n: float
    efficiency: float


@dataclass(frozen=True)
class EfficiencyReport:
    """Per-algorithm normalized scores on one dataset."""

    rows: dict


def _min_max_normalize(values: dict) -> dict:
    lo = min(values.values())
    hi = max(values.values())
    if hi == lo:
        # a metric that cannot discriminate is scored neutrally
        return {k: 0.5 for k in values}
    span = hi - lo
    return {k: (v - lo) / span for k, v in values.items()}


def efficiency_scores(raw: dict) -> EfficiencyReport:
    """Min-max normalize (accuracy, memory, runtime) across >= 2 algorithms
    on one dataset; efficiency averages accuracy with inverted memory and
    runtime so that 1.0 is uniformly best."""
    if len(raw) < 2:
        raise ValueError("efficiency normalization needs at least 2 algorithms")
    acc_n = _min_max_normalize({k: v[0] for k, v in raw.items()})
    mem_n = _min_max_normalize({k: v[1] for k, v in raw.items()})
    time_n = _min_max_normalize({k: v[2] for k, v in raw.items()})
    rows = {}
    for name, (acc, mem, runtime) in raw.items():
        efficiency = (acc_n[name] + (1.0 - mem_n[name]) + (1.0 - time_n[name])) / 3.0
        rows[name] = EfficiencyRow(
            accuracy=acc,
            memory=mem,
            runtime=runtime,
            accuracy_n=acc_n[name],
            memory_n=mem_n[name],
            runtime_n=time_n[name],
            efficiency=efficiency,
        )
    return EfficiencyReport(rows)


@dataclass(frozen=True)
class AggregateRow:
    algorithm: str
    efficiency: float
    accuracy: float
    memory: float
    runtime: float


def aggregate_ranking(reports: dict) -> list:
    """Mean per-dataset normalized scores per algorithm, memory and runtime
    reported inverted (larger = better), sorted by efficiency descending."""
    datasets = list(reports)
    if not datasets:
        raise ValueError("no datasets to aggregate")
    algorithms = set(reports[datasets[0]].rows)
    for ds in datasets[1:]:
        if set(reports[ds].rows) != algorithms:
            missing = sorted(algorithms.symmetric_difference(reports[ds].rows))
            raise ValueError(
                f"algorithm sets differ across datasets (dataset {ds!r}, "
                f"mismatched: {missing})"
            )
    n = len(datasets)
    rows = []
    for algo in sorted(algorithms):
        eff = sum(reports[ds].rows[algo].efficiency for ds in datasets) / n
        acc = sum(reports[ds].rows[algo].accuracy_n for ds in datasets) / n
        mem = sum(1.0 - reports[ds].rows[algo].memory_n for ds in datasets) / n
        run = sum(1.0 - reports[ds].rows[algo].runtime_n for ds in datasets) / n
        rows.append(AggregateRow(algo, eff, acc, mem, run))
    rows.sort(key=lambda r: (-r.efficiency, r.algorithm))
    return rows


# -- Friedman / Nemenyi --------------------------------------------------------

# Critical values q_alpha for the Nemenyi test (infinite degrees of freedom,
# studentized range / sqrt(2)), indexed by the number of algorithms k = 2..20.
NEMENYI_Q = {
    0.01: (
        2.575829, 2.913494, 3.113250, 3.254686, 3.363740, 3.452213, 3.526471,
        3.590339, 3.646292, 3.696021, 3.740733, 3.781318, 3.818451, 3.852654,
        3.884343, 3.913850, 3.941446, 3.967357, 3.991770,
    ),
    0.05: (
        1.959964, 2.343701, 2.569032, 2.727774, 2.849705, 2.948320, 3.030878,
        3.101730, 3.163684, 3.218654, 3.268004, 3.312739, 3.353618, 3.391230,
        3.426041, 3.458425, 3.488685, 3.517073, 3.543799,
    ),
    0.10: (
        1.644854, 2.052293, 2.291341, 2.459516, 2.588521, 2.692732, 2.779884,
        2.854606, 2.919889, 2.977768, 3.029694, 3.076733, 3.119693, 3.159199,
        3.195743, 3.229723, 3.261461, 3.291224, 3.319233,
    ),
}


@dataclass(frozen=True)
class RankSummary:
    algorithms: tuple
    average_ranks: dict
    critical_difference: float
    alpha: float
    significant: tuple  # pairwise |rank_i - rank_j| >= CD
    friedman_chi2: float
    dof: int

    def to_dict(self) -> dict:
        return {
            "algorithms": list(self.algorithms),
            "average_ranks": self.average_ranks,
            "critical_difference": self.critical_difference,
            "alpha": self.alpha,
            "significant": [list(row) for row in self.significant],
            "friedman_chi2": self.friedman_chi2,
            "dof": self.dof,
        }


def average_ranks(values, higher_is_better=True):
    """Ranks with 1 = best and average positions on exact ties."""
    k = len(values)
    order = sorted(range(k), key=lambda i: -values[i] if higher_is_better else values[i])
    ranks = [0.0] * k
    pos = 0
    while pos < k:
        end = pos
        while end + 1 < k and values[order[end + 1]] == values[order[pos]]:
            end += 1
        mean_rank = (pos + 1 + end + 1) / 2.0
        for idx in order[pos : end + 1]:
            ranks[idx] = mean_rank
        pos = end + 1
    return ranks


def friedman_nemenyi(matrix, algorithms, alpha=0.05, higher_is_better=True) -> RankSummary:
    """Average ranks over a datasets x algorithms metric matrix, with the
    Nemenyi critical difference q_alpha * sqrt(k (k+1) / (6 N))."""
    algorithms = tuple(algorithms)
    k = len(algorithms)
    n = len(matrix)
    if k < 2:
        raise ValueError("need at least 2 algorithms")
    if n < 2:
        raise ValueError("need at least 2 datasets")
    if alpha not in NEMENYI_Q:
        supported = ", ".join(str(a) for a in sorted(NEMENYI_Q))
        raise ValueError(f"unsupported alpha {alpha}; supported levels: {supported}")
    if k - 2 >= len(NEMENYI_Q[alpha]):
        raise ValueError(f"critical values available only for k <= {len(NEMENYI_Q[alpha]) + 1}")

    totals = [0.0] * k
    for row in matrix:
        if len(row) != k:
            raise ValueError("matrix row length does not match the algorithm count")
        for i, r in enumerate(average_ranks(row, higher_is_better)):
            totals[i] += r
    avg = [t / n for t in totals]
    q = NEMENYI_Q[alpha][k - 2]
    cd = q * math.sqrt(k * (k + 1) / (6.0 * n))
    significant = tuple(
        tuple(abs(avg[i] - avg[j]) >= cd for j in range(k)) for i in range(k)
    )
    chi2 = (12.0 * n / (k * (k + 1))) * (
        sum(r * r for r in avg) - k * (k + 1) ** 2 / 4.0
    )
    return RankSummary(
        algorithms=algorithms,
        average_ranks={a: r for a, r in zip(algorithms, avg)},
        critical_difference=cd,
        alpha=alpha,
        significant=significant,
        friedman_chi2=chi2,
        dof=k - 1,
    )
