"""Independently coded plain Hoeffding-bound learner (flags-off oracle).

Shares only the numeric kernel (`streamtree.stats`); routing, leaf
bookkeeping, the attempt gate, and split execution are written from scratch
here so the engine's flags-off behavior can be checked against a second
implementation. Conventions mirrored on purpose:

- attempt gate: leaf impure and n_l - n_check > n_min; confidence radius at
  n_l with r = log2(n_classes)
- per-attribute best candidates; runner-up merit floored at 0 (implicit
  zero-merit "no split" entry)
- split when gap >= radius or radius < fixed tie threshold
- children inherit the candidate's estimated distributions rounded with
  round() and clamped at 0; their counters start at the inherited sum
- unseen categorical values route to branch 0
"""

import math

from streamtree.stats import (
    CategoricalAttributeEstimator,
    GaussianAttributeEstimator,
    categorical_split_candidate,
    hoeffding_bound,
    numeric_split_candidates,
)
from streamtree.tree import NUMERIC


class _RefNode:
    def __init__(self, counts, numeric_pos, categorical_pos, n_classes):
        self.counts = counts
        self.gauss = {p: GaussianAttributeEstimator(n_classes) for p in numeric_pos}
        self.cats = {p: CategoricalAttributeEstimator(n_classes) for p in categorical_pos}
        self.n = sum(counts)
        self.n_check = self.n
        # split-node fields, populated on expansion
        self.attr = None
        self.kind = None
        self.threshold = None
        self.branch_values = None
        self.branch_index = None
        self.kids = None

    @property
    def is_leaf(self):
        return self.kids is None


class ReferenceVFDT:
    """Plain learner; records its split sequence as (n, attr, kind, test)."""

    def __init__(self, schema, delta=1e-7, n_min=200, tau=0.05, points=10):
        self.schema = schema
        self.delta = delta
        self.n_min = n_min
        self.tau = tau
        self.points = points
        self.n_classes = schema.n_classes
        self.r = math.log2(self.n_classes)
        self.numeric_pos = schema.numeric_positions()
        self.categorical_pos = schema.categorical_positions()
        self.root = self._leaf([0] * self.n_classes)
        self.n = 0
        self.split_log = []

    def _leaf(self, counts):
        return _RefNode(counts, self.numeric_pos, self.categorical_pos, self.n_classes)

    def learn(self, values, label):
        node = self.root
        while not node.is_leaf:
            if node.kind == NUMERIC:
                node = node.kids[0] if values[node.attr] <= node.threshold else node.kids[1]
            else:
                node = node.kids[node.branch_index.get(values[node.attr], 0)]
        node.counts[label] += 1
        for pos, est in node.gauss.items():
            est.update(values[pos], label)
        for pos, est in node.cats.items():
            est.update(values[pos], label)
        self.n += 1
        node.n += 1
        impure = sum(1 for c in node.counts if c > 0) >= 2
        if impure and node.n - node.n_check > self.n_min:
            self._attempt(node)

    def _attempt(self, node):
        best = None
        second_merit = 0.0
        for pos in self.numeric_pos:
            attr_best = None
            for cand in numeric_split_candidates(
                node.gauss[pos].by_class(), pos, self.points
            ):
                if attr_best is None or cand.merit > attr_best.merit:
                    attr_best = cand
            if attr_best is None:
                continue
            best, second_merit = self._fold(best, second_merit, attr_best)
        for pos in self.categorical_pos:
            cand = categorical_split_candidate(
                node.cats[pos].by_value(), pos, self.n_classes
            )
            if cand is None:
                continue
            best, second_merit = self._fold(best, second_merit, cand)
        if best is None:
            node.n_check = node.n
            return
        epsilon = hoeffding_bound(self.r, self.delta, node.n)
        gap = best.merit - second_merit
        if gap >= epsilon or epsilon < self.tau:
            self._split(node, best)
        else:
            node.n_check = node.n

    @staticmethod
    def _fold(best, second_merit, cand):
        if best is None:
            return cand, 0.0
        if cand.merit > best.merit or (
            cand.merit == best.merit and cand.attribute < best.attribute
        ):
            return cand, max(best.merit, 0.0)
        return best, max(second_merit, cand.merit, 0.0)

    def _split(self, node, cand):
        kids = []
        for dist in cand.child_dists:
            kids.append(self._leaf([max(0, round(x)) for x in dist]))
        node.attr = cand.attribute
        node.kind = cand.kind
        node.threshold = cand.threshold
        node.branch_values = cand.branch_values
        node.branch_index = (
            {v: i for i, v in enumerate(cand.branch_values)}
            if cand.branch_values
            else None
        )
        node.kids = kids
        node.gauss = {}
        node.cats = {}
        if cand.kind == NUMERIC:
            test = cand.threshold
        else:
            test = cand.branch_values
        self.split_log.append((self.n, cand.attribute, cand.kind, test))
