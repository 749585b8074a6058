"""Event-based cross-stream time alignment.

The pipeline: detect a shared physical event (a hand gesture) in every
stream, match detections across streams within a coarse tolerance,
refine each matched start with a filter + sliding-entropy onset search,
then shift streams so the refined starts coincide.
"""

from .series import TimeSeries
from .dtw import DbaResult, DtwResult, GestureTemplate, dba, dba_template, dtw_cost, dtw_distance
from .features import FeatureVector, GroupFeatures, extract_imu_features, shannon_entropy, sliding_entropy
from .filters import butterworth_lowpass, design_lowpass
from .hmm import HmmModel, HmmTrainResult, ViterbiResult, train_hmm, viterbi_decode
from .detect import (
    EventDetection,
    detect_gesture_video,
    normalized_dtw_score,
    read_events_ndjson,
    suppress_overlaps,
    write_events_ndjson,
)
from .align import (
    FineTuneConfig,
    MatchedPair,
    RefinedStart,
    apply_sync,
    coarse_align,
    fine_tune_event,
)
from .metrics import SyncScores, eval_detection, eval_sync

__all__ = [
    "TimeSeries",
    "DbaResult",
    "DtwResult",
    "GestureTemplate",
    "dba",
    "dba_template",
    "dtw_cost",
    "dtw_distance",
    "FeatureVector",
    "GroupFeatures",
    "extract_imu_features",
    "shannon_entropy",
    "sliding_entropy",
    "butterworth_lowpass",
    "design_lowpass",
    "HmmModel",
    "HmmTrainResult",
    "ViterbiResult",
    "train_hmm",
    "viterbi_decode",
    "EventDetection",
    "detect_gesture_video",
    "normalized_dtw_score",
    "read_events_ndjson",
    "suppress_overlaps",
    "write_events_ndjson",
    "FineTuneConfig",
    "MatchedPair",
    "RefinedStart",
    "apply_sync",
    "coarse_align",
    "fine_tune_event",
    "SyncScores",
    "eval_detection",
    "eval_sync",
]
