"""Incremental decision-tree stream mining with adaptive growth control and a
prequential evaluation harness."""

from .backend import available_backends, default_backend
from .control import (
    ActivityClass,
    AttemptPath,
    SharedTrackers,
    SplitAttemptOutcome,
    activity_fraction,
    adaptive_tie_threshold,
    can_split,
    classify_activity,
    recalc_grace_period,
)
from .data import (
    StreamSource,
    generate_random_tree_stream,
    read_arff_stream,
    read_csv_stream,
)
from .errors import ConfigError, DataError, StreamTreeError
from .evaluation import (
    EfficiencyReport,
    PrequentialRecord,
    RankSummary,
    RunSummary,
    aggregate_ranking,
    efficiency_scores,
    friedman_nemenyi,
    prequential_run,
)
from .stats import (
    CategoricalAttributeEstimator,
    GaussianAttributeEstimator,
    SplitCandidate,
    StatTracker,
    categorical_split_candidate,
    entropy,
    hoeffding_bound,
    info_gain,
    numeric_split_candidates,
)
from .tree import (
    Attribute,
    HoeffdingParams,
    HoeffdingTree,
    Instance,
    LeafNode,
    Schema,
    SplitNode,
)

__version__ = "0.1.0"
