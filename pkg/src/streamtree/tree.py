"""Incremental decision tree: node structures, instance routing, leaf
learning, split ranking and execution, and the deterministic memory model.

The learner is single-threaded per tree instance and fully deterministic:
the same stream and configuration always produce a bit-identical tree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from . import backend as _backend
from .control import (
    ActivityClass,
    AttemptPath,
    SharedTrackers,
    activity_fraction,
    adaptive_tie_threshold,
    can_split,
    classify_activity,
    recalc_grace_period,
)
from .errors import DataError
from .stats import (
    categorical_split_candidate,
    entropy,
    hoeffding_bound,
    numeric_split_candidates,
)

NUMERIC = "numeric"
CATEGORICAL = "categorical"

# Deterministic memory model. The constants are fixed so that measured model
# memory is platform-independent and exactly reproducible.
SPLIT_NODE_BYTES = 32
BRANCH_BYTES = 8
LEAF_BYTES = 48
CLASS_BYTES = 8
GAUSSIAN_PAIR_BYTES = 40
CATEGORICAL_CELL_BYTES = 16


@dataclass(frozen=True)
class Attribute:
    name: str
    kind: str  # NUMERIC | CATEGORICAL
    arity: int | None = None  # categorical only

    def __post_init__(self):
        if self.kind not in (NUMERIC, CATEGORICAL):
            raise ValueError(f"unknown attribute kind {self.kind!r}")
        if self.kind == CATEGORICAL:
            if self.arity is None or self.arity < 2:
                raise ValueError(
                    f"categorical attribute {self.name!r} needs arity >= 2"
                )
        elif self.arity is not None:
            raise ValueError(f"numeric attribute {self.name!r} takes no arity")


@dataclass(frozen=True)
class Schema:
    """Ordered attribute declarations plus the ordered class labels."""

    attributes: tuple
    classes: tuple

    def __post_init__(self):
        object.__setattr__(self, "attributes", tuple(self.attributes))
        object.__setattr__(self, "classes", tuple(self.classes))
        names = [a.name for a in self.attributes]
        if len(set(names)) != len(names):
            raise ValueError("attribute names must be unique")
        if len(self.classes) < 2:
            raise ValueError("a schema needs at least 2 classes")
        if len(set(self.classes)) != len(self.classes):
            raise ValueError("class labels must be unique")

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    def numeric_positions(self) -> tuple:
        return tuple(
            i for i, a in enumerate(self.attributes) if a.kind == NUMERIC
        )

    def categorical_positions(self) -> tuple:
        return tuple(
            i for i, a in enumerate(self.attributes) if a.kind == CATEGORICAL
        )


class Instance(NamedTuple):
    """One labeled example: attribute values aligned with the schema (floats
    for numeric attributes, value indices for categorical), plus the class
    index."""

    values: list
    label: int


class LeafNode:
    """Learning leaf. Inactive leaves keep updating class counts (so
    predictions stay current) but hold no estimators and never attempt
    splits."""

    __slots__ = (
        "leaf_id",
        "class_counts",
        "stats",
        "n_l",
        "n_leaf",
        "n_tree",
        "n_check",
        "n_min",
        "active",
        "grow_fast",
        "nonzero_classes",
        "parent",
        "parent_index",
    )

    def __init__(self, leaf_id, class_counts, stats, n_tree, n_min):
        self.leaf_id = leaf_id
        self.class_counts = class_counts
        self.stats = stats
        total = sum(class_counts)
        self.n_l = total
        self.n_leaf = total
        self.n_check = total
        self.n_tree = n_tree
        self.n_min = n_min
        self.active = True
        self.grow_fast = False
        self.nonzero_classes = sum(1 for c in class_counts if c > 0)
        self.parent = None
        self.parent_index = -1

    def majority(self) -> int:
        """Majority class; ties break to the lowest index, an empty leaf
        predicts class 0."""
        counts = self.class_counts
        best = 0
        best_count = counts[0]
        for i in range(1, len(counts)):
            if counts[i] > best_count:
                best_count = counts[i]
                best = i
        return best


class SplitNode:
    """Internal test node. Numeric tests send value <= threshold to branch 0;
    categorical tests map each observed value to its branch, with unseen
    values routed to branch 0."""

    __slots__ = (
        "attribute",
        "kind",
        "threshold",
        "branch_values",
        "branch_map",
        "children",
        "parent",
        "parent_index",
    )

    def __init__(self, attribute, kind, threshold=None, branch_values=None, children=()):
        self.attribute = attribute
        self.kind = kind
        self.threshold = threshold
        self.branch_values = branch_values
        self.branch_map = (
            {v: i for i, v in enumerate(branch_values)} if branch_values else None
        )
        self.children = list(children)
        self.parent = None
        self.parent_index = -1
        for i, child in enumerate(self.children):
            child.parent = self
            child.parent_index = i

    def route_index(self, values) -> int:
        if self.kind == NUMERIC:
            return 0 if values[self.attribute] <= self.threshold else 1
        return self.branch_map.get(values[self.attribute], 0)


@dataclass(frozen=True)
class HoeffdingParams:
    """Learner configuration.

    Flags (all off reproduces the plain Hoeffding-bound learner):
      adaptive_grace  recompute a failed leaf's grace period from the merit gap
      adaptive_tie    tie threshold = running mean of recorded radii
      expansion       per-leaf activity tracking (deactivation / fast growth)
      strict          historical-constraint battery on gate-passing attempts
    """

    delta: float = 1e-7
    n_min_default: int = 200
    tau_fixed: float = 0.05
    adaptive_grace: bool = False
    adaptive_tie: bool = False
    expansion: bool = False
    strict: bool = False
    n_min_cap: int | None = None
    candidate_points: int = 10
    window: int = 1000

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must be in (0, 1), got {self.delta}")
        if self.n_min_default < 1:
            raise ValueError("n_min_default must be >= 1")
        if not 0.0 <= self.tau_fixed <= 1.0:
            raise ValueError(f"tau_fixed must be in [0, 1], got {self.tau_fixed}")
        if self.candidate_points < 1:
            raise ValueError("candidate_points must be >= 1")
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if self.n_min_cap is not None and self.n_min_cap < self.n_min_default:
            raise ValueError("n_min_cap must be >= n_min_default")

    @property
    def effective_cap(self) -> int:
        if self.n_min_cap is not None:
            return self.n_min_cap
        return 20 * self.n_min_default

    def flag_string(self) -> str:
        return "".join(
            letter
            for letter, on in (
                ("G", self.adaptive_grace),
                ("T", self.adaptive_tie),
                ("E", self.expansion),
            )
            if on
        )


@dataclass(frozen=True)
class SplitEvent:
    """One executed split: total instances seen when it happened, the test,
    and the attempt path that accepted it."""

    n: int
    attribute: int
    kind: str
    threshold: float | None
    branch_values: tuple | None
    path: AttemptPath

    def test_key(self):
        if self.kind == NUMERIC:
            return (self.n, self.attribute, NUMERIC, self.threshold)
        return (self.n, self.attribute, CATEGORICAL, self.branch_values)


class HoeffdingTree:
    """Streaming decision tree with optional adaptive growth control."""

    def __init__(self, schema: Schema, params: HoeffdingParams | None = None, backend=None):
        self.schema = schema
        self.params = params if params is not None else HoeffdingParams()
        self.backend, self._stats_cls = _backend.resolve(backend)
        self._numeric_pos = schema.numeric_positions()
        self._categorical_pos = schema.categorical_positions()
        self._n_attributes = len(schema.attributes)
        self.n_classes = schema.n_classes
        self.merit_range = math.log2(self.n_classes)
        self.trackers = SharedTrackers.fresh()
        self.n = 0
        self._next_leaf_id = 0
        self.leaves: dict = {}
        self.root = self._new_leaf(None)
        self.splits: list = []
        self.attempts = 0
        self.aborted_attempts = 0
        self.attempts_by_path = {path: 0 for path in AttemptPath}

    # -- construction helpers ------------------------------------------------

    def _new_leaf(self, counts) -> LeafNode:
        if counts is None:
            counts = [0] * self.n_classes
        leaf = LeafNode(
            self._next_leaf_id,
            counts,
            self._stats_cls(self.n_classes, self._numeric_pos, self._categorical_pos),
            self.n,
            self.params.n_min_default,
        )
        self._next_leaf_id += 1
        self.leaves[leaf.leaf_id] = leaf
        return leaf

    # -- inference -----------------------------------------------------------

    def route(self, values) -> LeafNode:
        node = self.root
        while isinstance(node, SplitNode):
            node = node.children[node.route_index(values)]
        return node

    def predict(self, values) -> int:
        return self.route(values).majority()

    # -- learning ------------------------------------------------------------

    def learn_one(self, instance) -> int:
        """Route, predict, then learn one instance; returns the prediction
        made before the update."""
        values, label = instance
        if len(values) != self._n_attributes:
            raise DataError(
                f"instance has {len(values)} values, schema expects {self._n_attributes}"
            )
        if not 0 <= label < self.n_classes:
            raise DataError(f"label index {label} outside the {self.n_classes} classes")

        leaf = self.route(values)
        prediction = leaf.majority()

        counts = leaf.class_counts
        if counts[label] == 0:
            leaf.nonzero_classes += 1
        counts[label] += 1
        if leaf.stats is not None:
            leaf.stats.update(values, label)
        self.n += 1
        leaf.n_l += 1

        params = self.params
        if params.expansion and leaf.active:
            fraction = activity_fraction(
                leaf.n_l, leaf.n_leaf, len(self.leaves), self.n, leaf.n_tree
            )
            if fraction is None:
                leaf.grow_fast = False
            else:
                activity = classify_activity(
                    fraction, leaf.n_l - leaf.n_leaf >= params.n_min_default
                )
                if activity is ActivityClass.DEACTIVATE:
                    self.deactivate(leaf)
                leaf.grow_fast = activity is ActivityClass.GROW_FAST

        if (
            leaf.active
            and leaf.nonzero_classes >= 2
            and leaf.n_l - leaf.n_check > leaf.n_min
        ):
            self._attempt_split(leaf)
        return prediction

    def deactivate(self, leaf: LeafNode) -> None:
        """Permanently retire a leaf from splitting and release its
        estimators; its class counts keep learning."""
        leaf.active = False
        leaf.grow_fast = False
        leaf.stats = None

    # -- splitting -----------------------------------------------------------

    def rank_splits(self, leaf: LeafNode):
        """Best candidate per attribute, ordered by descending merit (ties by
        attribute index). Numeric per-attribute ties resolve to the lowest
        threshold."""
        stats = leaf.stats
        if stats is None:
            return []
        points = self.params.candidate_points
        ranked = []
        for pos in self._numeric_pos:
            best = None
            for cand in numeric_split_candidates(
                stats.gaussian_by_class(pos), pos, points
            ):
                if best is None or cand.merit > best.merit:
                    best = cand
            if best is not None:
                ranked.append(best)
        for pos in self._categorical_pos:
            cand = categorical_split_candidate(
                stats.categorical_table(pos), pos, self.n_classes
            )
            if cand is not None:
                ranked.append(cand)
        ranked.sort(key=lambda c: (-c.merit, c.attribute))
        return ranked

    def _attempt_split(self, leaf: LeafNode) -> None:
        params = self.params
        epsilon = hoeffding_bound(self.merit_range, params.delta, leaf.n_l)
        self.trackers.hb.update(epsilon)

        ranked = self.rank_splits(leaf)
        if not ranked:
            # nothing to test on (constant attributes); wait for more data
            self.aborted_attempts += 1
            leaf.n_check = leaf.n_l
            return

        self.attempts += 1
        h_l = entropy(leaf.class_counts)
        outcome = can_split(
            leaf.grow_fast,
            [c.merit for c in ranked],
            h_l,
            leaf.n_l,
            epsilon,
            self.trackers,
            strict=params.strict,
            adaptive_tie=params.adaptive_tie,
            expansion=params.expansion,
            tau_fixed=params.tau_fixed,
        )
        self.attempts_by_path[outcome.path] += 1
        if outcome.decision:
            self.execute_split(leaf, ranked[0], outcome.path)
        else:
            leaf.n_check = leaf.n_l
            if params.adaptive_grace:
                tau = (
                    adaptive_tie_threshold(self.trackers.hb)
                    if params.adaptive_tie
                    else params.tau_fixed
                )
                leaf.n_min = recalc_grace_period(
                    outcome.delta_g,
                    epsilon,
                    tau,
                    self.merit_range,
                    params.delta,
                    leaf.n_min,
                    params.n_min_default,
                    params.effective_cap,
                )

    def execute_split(self, leaf: LeafNode, candidate, path=AttemptPath.PLAIN_ACCEPTED):
        """Replace `leaf` with a split node; children inherit the candidate's
        estimated distributions rounded to integer counts."""
        children = []
        for dist in candidate.child_dists:
            counts = [max(0, round(x)) for x in dist]
            children.append(self._new_leaf(counts))
        node = SplitNode(
            candidate.attribute,
            candidate.kind,
            threshold=candidate.threshold,
            branch_values=candidate.branch_values,
            children=children,
        )
        del self.leaves[leaf.leaf_id]
        self._replace_node(leaf, node)
        self.splits.append(
            SplitEvent(
                self.n,
                candidate.attribute,
                candidate.kind,
                candidate.threshold,
                candidate.branch_values,
                path,
            )
        )
        return node

    def _replace_node(self, old, new) -> None:
        parent = old.parent
        if parent is None:
            if self.root is not old:
                raise RuntimeError("node to replace not found in tree")
            self.root = new
            return
        parent.children[old.parent_index] = new
        new.parent = parent
        new.parent_index = old.parent_index

    # -- accounting ----------------------------------------------------------

    def iter_nodes(self):
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            if isinstance(node, SplitNode):
                stack.extend(reversed(node.children))

    def measure_memory(self) -> int:
        """Model-accounted bytes under the fixed memory model; inactive
        leaves contribute no estimator bytes."""
        total = 0
        for node in self.iter_nodes():
            if isinstance(node, SplitNode):
                total += SPLIT_NODE_BYTES + BRANCH_BYTES * len(node.children)
            else:
                total += LEAF_BYTES + CLASS_BYTES * self.n_classes
                stats = node.stats
                if stats is not None:
                    total += (
                        GAUSSIAN_PAIR_BYTES * stats.numeric_pairs
                        + CATEGORICAL_CELL_BYTES * stats.categorical_cells
                    )
        return total

    def node_counts(self) -> dict:
        splits = leaves = inactive = 0
        for node in self.iter_nodes():
            if isinstance(node, SplitNode):
                splits += 1
            else:
                leaves += 1
                if not node.active:
                    inactive += 1
        return {
            "split_nodes": splits,
            "leaves": leaves,
            "inactive_leaves": inactive,
            "total": splits + leaves,
        }

    def export_text(self) -> str:
        """Deterministic pre-order serialization, one node per line."""
        lines = []

        def walk(node, depth):
            pad = "  " * depth
            if isinstance(node, SplitNode):
                if node.kind == NUMERIC:
                    test = f"threshold={node.threshold!r}"
                else:
                    test = f"values={list(node.branch_values)!r}"
                lines.append(f"{pad}split attr={node.attribute} kind={node.kind} {test}")
                for child in node.children:
                    walk(child, depth + 1)
            else:
                lines.append(
                    f"{pad}leaf counts={node.class_counts!r} active={int(node.active)}"
                )

        walk(self.root, 0)
        return "\n".join(lines) + "\n"
