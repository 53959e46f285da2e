"""Adaptive growth control for the streaming tree.

Covers the per-leaf activity classification (deactivation / fast growth), the
adaptive tie threshold, the split-attempt constraint battery with its skip
path, and grace-period recalculation after failed attempts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .stats import StatTracker

# Activity thresholds: leaves receiving less than DEACTIVATE_BELOW of the
# per-leaf average traffic are retired; above GROW_FAST_ABOVE they may take
# the relaxed splitting path.
DEACTIVATE_BELOW = 0.2
GROW_FAST_ABOVE = 2.0


class ActivityClass(Enum):
    DEACTIVATE = "deactivate"
    NORMAL = "normal"
    GROW_FAST = "grow_fast"


class AttemptPath(Enum):
    """How a split attempt was resolved."""

    HB_FAILED = "hb_failed"
    SKIP_ACCEPTED = "skip_accepted"
    STRICT_ACCEPTED = "strict_accepted"
    STRICT_REJECTED = "strict_rejected"
    PLAIN_ACCEPTED = "plain_accepted"


ACCEPTED_PATHS = frozenset(
    (AttemptPath.SKIP_ACCEPTED, AttemptPath.STRICT_ACCEPTED, AttemptPath.PLAIN_ACCEPTED)
)


@dataclass(frozen=True)
class SplitAttemptOutcome:
    decision: bool
    delta_g: float
    epsilon: float
    path: AttemptPath


@dataclass
class SharedTrackers:
    """The five streamwide accumulators shared by every leaf of one tree.

    hb    recorded confidence radii (one per attempt)
    h     leaf entropies at gate-passing attempts
    g     best merits at gate-passing attempts
    n     leaf instance counts at gate-passing attempts
    h_lh  leaf entropies at every attempt, across the whole tree
    """

    hb: StatTracker
    h: StatTracker
    g: StatTracker
    n: StatTracker
    h_lh: StatTracker

    @classmethod
    def fresh(cls) -> "SharedTrackers":
        return cls(StatTracker(), StatTracker(), StatTracker(), StatTracker(), StatTracker())


def activity_fraction(n_l, n_leaf_l, lh_size, n, n_tree_l):
    """Leaf traffic since creation relative to the per-leaf average over the
    same period: (n_l - n_leaf_l) * lh_size / (n - n_tree_l).

    Returns None (not evaluable) when the tree has seen no instance since the
    leaf was created; callers treat that as normal activity.
    """
    denom = n - n_tree_l
    if denom <= 0:
        return None
    return (n_l - n_leaf_l) * lh_size / denom


def classify_activity(fraction: float, warmup_met: bool) -> ActivityClass:
    """Classify a leaf's activity fraction.

    Deactivation additionally requires `warmup_met` so that newborn leaves,
    whose fraction starts near zero by construction, are not retired before
    accumulating evidence.
    """
    if fraction < DEACTIVATE_BELOW:
        return ActivityClass.DEACTIVATE if warmup_met else ActivityClass.NORMAL
    if fraction > GROW_FAST_ABOVE:
        return ActivityClass.GROW_FAST
    return ActivityClass.NORMAL


def adaptive_tie_threshold(hb_stat: StatTracker):
    """Mean of all recorded confidence radii, or None while none are recorded
    (the tie condition then evaluates false)."""
    if hb_stat.count == 0:
        return None
    return hb_stat.mean


def can_split(
    grow_fast: bool,
    merits,
    h_l: float,
    n_l,
    epsilon: float,
    trackers: SharedTrackers,
    *,
    strict: bool,
    adaptive_tie: bool,
    expansion: bool,
    tau_fixed: float,
) -> SplitAttemptOutcome:
    """Decide one split attempt given the ranked merits (descending).

    Gate: merit gap >= epsilon, or the tie condition (epsilon below the
    adaptive or fixed tie threshold). Without `strict` a passed gate accepts
    outright. With `strict`, a fast-growing leaf may skip the conservative
    battery when its entropy and best merit sit a full standard deviation
    above their historical means; otherwise the four conservative constraints
    apply against history recorded one standard deviation below the mean
    (entropy vs. all-leaf history, entropy and merit vs. gate-passing history)
    plus the average-instance-count floor. The h/g/n trackers record this
    attempt only on the conservative path, after its constraints were read;
    h_lh records every attempt.
    """
    g_best = merits[0]
    # the ranking implicitly contains a zero-merit "no split" entry, so the
    # runner-up merit is floored at 0 and the gap is always defined
    g_second = merits[1] if len(merits) > 1 else 0.0
    if g_second < 0.0:
        g_second = 0.0
    delta_g = g_best - g_second

    if adaptive_tie:
        tau = adaptive_tie_threshold(trackers.hb)
        tie = tau is not None and epsilon < tau
    else:
        tie = epsilon < tau_fixed

    if not (delta_g >= epsilon or tie):
        trackers.h_lh.update(h_l)
        return SplitAttemptOutcome(False, delta_g, epsilon, AttemptPath.HB_FAILED)

    if not strict:
        trackers.h_lh.update(h_l)
        return SplitAttemptOutcome(True, delta_g, epsilon, AttemptPath.PLAIN_ACCEPTED)

    if grow_fast and expansion:
        h_mean, h_std = trackers.h.query()
        g_mean, g_std = trackers.g.query()
        if h_l >= h_mean + h_std and g_best >= g_mean + g_std:
            trackers.h_lh.update(h_l)
            return SplitAttemptOutcome(True, delta_g, epsilon, AttemptPath.SKIP_ACCEPTED)

    lh_mean, lh_std = trackers.h_lh.query()
    h_mean, h_std = trackers.h.query()
    g_mean, g_std = trackers.g.query()
    n_mean, _ = trackers.n.query()
    accepted = (
        h_l >= lh_mean - lh_std
        and h_l >= h_mean - h_std
        and g_best >= g_mean - g_std
        and n_l >= n_mean
    )
    trackers.h.update(h_l)
    trackers.g.update(g_best)
    trackers.n.update(n_l)
    trackers.h_lh.update(h_l)
    path = AttemptPath.STRICT_ACCEPTED if accepted else AttemptPath.STRICT_REJECTED
    return SplitAttemptOutcome(accepted, delta_g, epsilon, path)


def grace_period_for_gap(gap: float, r: float, delta: float) -> int:
    """Instances needed before the confidence radius shrinks to `gap`."""
    if gap <= 0.0:
        raise ValueError(f"gap must be positive, got {gap}")
    return math.ceil(r * r * -math.log(delta) / (2.0 * gap * gap))


def recalc_grace_period(
    delta_g: float,
    epsilon: float,
    tau,
    r: float,
    delta: float,
    current_n_min: int,
    n_min_floor: int,
    n_min_cap: int,
) -> int:
    """New per-leaf grace period after a failed split attempt.

    Two scenarios adjust the wait; anything else keeps it:
      - gap below the radius but above the tie threshold: wait until the
        radius shrinks under the observed gap;
      - gap below the tie threshold while the radius is still above it: wait
        until the radius shrinks under the tie threshold.
    The result is clamped to [n_min_floor, n_min_cap]. A missing tie
    threshold (None) leaves the grace period untouched.
    """
    if tau is None:
        return current_n_min
    if delta_g < epsilon and delta_g > tau:
        n = grace_period_for_gap(delta_g, r, delta)
    elif delta_g < tau and epsilon > tau:
        if tau <= 0.0:
            return n_min_cap
        n = grace_period_for_gap(tau, r, delta)
    else:
        n = current_n_min
    return min(max(n, n_min_floor), n_min_cap)
