"""Numeric kernel: entropy, information gain, the Hoeffding bound, online
mean/std accumulators, and per-attribute sufficient statistics with split
candidate enumeration.

Everything here is deterministic plain-float arithmetic; the per-leaf hot-path
aggregation of these statistics lives in the selectable kernel backend
(``streamtree.backend``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

_INV_SQRT2 = 1.0 / math.sqrt(2.0)


def entropy(counts) -> float:
    """Shannon entropy in bits of a class-count vector.

    Zero counts contribute nothing; an all-zero vector is a domain error.
    Accepts integer or float (weighted) counts.
    """
    total = 0.0
    for c in counts:
        if c < 0:
            raise ValueError(f"negative class count: {c!r}")
        total += c
    if total <= 0.0:
        raise ValueError("entropy of an all-zero count vector is undefined")
    h = 0.0
    for c in counts:
        if c > 0:
            p = c / total
            # p can underflow to 0 for subnormal weights; their contribution
            # is below any representable magnitude
            if p > 0.0:
                h -= p * math.log2(p)
    return h


def info_gain(parent_counts, children_counts) -> float:
    """Information gain of partitioning `parent_counts` into `children_counts`.

    The children must partition the parent element-wise (each class total in
    the children equals the parent's count for that class); a mismatch is a
    contract violation. Empty children carry zero weight.
    """
    parent = list(parent_counts)
    children = [list(ch) for ch in children_counts]
    for i, p in enumerate(parent):
        s = 0.0
        for ch in children:
            if len(ch) != len(parent):
                raise ValueError("child count vector length differs from parent")
            s += ch[i]
        if abs(s - p) > 1e-9 * max(1.0, abs(p)):
            raise ValueError(
                f"children do not partition parent at class {i}: {s!r} != {p!r}"
            )
    total = sum(parent)
    gain = entropy(parent)
    for ch in children:
        w = sum(ch)
        if w > 0:
            gain -= (w / total) * entropy(ch)
    return gain


def hoeffding_bound(r: float, delta: float, n: int) -> float:
    """Confidence radius sqrt(r^2 * ln(1/delta) / (2n)) after n observations.

    Strictly decreasing in n; zero when delta == 1.
    """
    if n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    if r <= 0:
        raise ValueError(f"range r must be positive, got {r}")
    if not 0.0 < delta <= 1.0:
        raise ValueError(f"delta must be in (0, 1], got {delta}")
    return math.sqrt(r * r * -math.log(delta) / (2.0 * n))


@dataclass
class StatTracker:
    """Single-pass mean / population-std accumulator (Welford update)."""

    count: int = 0
    mean: float = 0.0
    m2: float = 0.0

    def update(self, x: float) -> None:
        self.count += 1
        delta = x - self.mean
        self.mean += delta / self.count
        self.m2 += delta * (x - self.mean)

    def query(self) -> tuple[float, float]:
        """(mean, population std); (0.0, 0.0) on an empty tracker."""
        if self.count == 0:
            return (0.0, 0.0)
        var = self.m2 / self.count
        if var < 0.0:
            var = 0.0
        return (self.mean, math.sqrt(var))

    @property
    def std(self) -> float:
        return self.query()[1]


class GaussianAttributeEstimator:
    """Per-class Gaussian sufficient statistics for one numeric attribute.

    Each class row holds [count, mean, m2, min_seen, max_seen]; rows update
    with the same Welford step as :class:`StatTracker` so split-time queries
    are exact batch statistics.
    """

    __slots__ = ("rows",)

    def __init__(self, n_classes: int):
        self.rows = [
            [0, 0.0, 0.0, math.inf, -math.inf] for _ in range(n_classes)
        ]

    def update(self, x: float, cls: int) -> None:
        row = self.rows[cls]
        row[0] += 1
        delta = x - row[1]
        row[1] += delta / row[0]
        row[2] += delta * (x - row[1])
        if x < row[3]:
            row[3] = x
        if x > row[4]:
            row[4] = x

    def by_class(self):
        """Per-class (count, mean, m2, min_seen, max_seen) tuples."""
        return [tuple(row) for row in self.rows]


class CategoricalAttributeEstimator:
    """(attribute value, class) count table for one categorical attribute."""

    __slots__ = ("n_classes", "table")

    def __init__(self, n_classes: int):
        self.n_classes = n_classes
        self.table: dict = {}

    def update(self, value, cls: int) -> None:
        counts = self.table.get(value)
        if counts is None:
            counts = [0] * self.n_classes
            self.table[value] = counts
        counts[cls] += 1

    def by_value(self):
        return {v: list(c) for v, c in self.table.items()}


@dataclass(frozen=True)
class SplitCandidate:
    """One evaluated split test on one attribute.

    Numeric candidates are binary (value <= threshold goes left); categorical
    candidates are multiway with one branch per observed value, ordered by
    `branch_values`. `child_dists` holds the estimated per-branch class
    distributions backing `merit`.
    """

    attribute: int
    kind: str  # "numeric" | "categorical"
    merit: float
    threshold: float | None = None
    branch_values: tuple | None = None
    child_dists: tuple = ()


def _normal_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z * _INV_SQRT2)


def gaussian_mass_below(count, mean: float, m2: float, threshold: float) -> float:
    """Estimated number of the `count` observations at or below `threshold`
    under the fitted Gaussian.

    A zero-variance class sits entirely on the side its mean falls (mean <=
    threshold routes it left, matching numeric split routing).
    """
    if count <= 0:
        return 0.0
    var = m2 / count
    if var <= 0.0:
        return float(count) if mean <= threshold else 0.0
    return count * _normal_cdf((threshold - mean) / math.sqrt(var))


def numeric_split_candidates(by_class, attribute: int, n_points: int = 10):
    """Candidate thresholds for one numeric attribute.

    `by_class` is the per-class (count, mean, m2, min, max) view of a
    Gaussian estimator. Yields `n_points` thresholds uniformly spaced strictly
    between the observed global min and max, each carrying Gaussian-mass
    estimated left/right class distributions and their information gain.
    Returns [] when fewer than two classes were observed or the observed
    range is empty.
    """
    observed = 0
    lo = math.inf
    hi = -math.inf
    for cnt, _mean, _m2, mn, mx in by_class:
        if cnt > 0:
            observed += 1
            if mn < lo:
                lo = mn
            if mx > hi:
                hi = mx
    if observed < 2 or not hi > lo:
        return []
    parent = [float(cnt) for cnt, *_ in by_class]
    span = hi - lo
    denom = n_points + 1
    out = []
    prev = None
    for i in range(1, n_points + 1):
        t = lo + span * (i / denom)
        if not lo < t < hi or t == prev:
            continue
        prev = t
        left = []
        right = []
        for cnt, mean, m2, _mn, _mx in by_class:
            below = gaussian_mass_below(cnt, mean, m2, t)
            left.append(below)
            right.append(cnt - below)
        merit = info_gain(parent, (left, right))
        out.append(
            SplitCandidate(
                attribute=attribute,
                kind="numeric",
                merit=merit,
                threshold=t,
                child_dists=(tuple(left), tuple(right)),
            )
        )
    return out


def categorical_split_candidate(table, attribute: int, n_classes: int):
    """Single multiway candidate over the observed values of one categorical
    attribute (branch per value, ascending value order), or None when fewer
    than two values were observed."""
    values = sorted(table)
    if len(values) < 2:
        return None
    children = []
    parent = [0.0] * n_classes
    for v in values:
        counts = table[v]
        children.append(tuple(float(c) for c in counts))
        for i, c in enumerate(counts):
            parent[i] += c
    merit = info_gain(parent, children)
    return SplitCandidate(
        attribute=attribute,
        kind="categorical",
        merit=merit,
        branch_values=tuple(values),
        child_dists=tuple(children),
    )
