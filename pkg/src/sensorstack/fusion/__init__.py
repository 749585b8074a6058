"""Multi-camera detection fusion in a shared top-down frame.

Per-camera detections are mapped into one coordinate system through a
fitted perspective transform (a DLT homography, a RANSAC-robust
variant, or a small trained regressor), merged across cameras by a
distance threshold with confidence weighting, and scored against
ground truth positions.
"""

from .dedup import deduplicate
from .geometry import (
    PerspectiveTransform,
    ProjectionResult,
    RansacResult,
    fit_homography_dlt,
    project,
    ransac_fit,
    reprojection_errors,
)
from .io import (
    read_detections_ndjson,
    read_fused_ndjson,
    read_pairs_ndjson,
    read_sweep_csv,
    read_transform_json,
    write_detections_ndjson,
    write_fused_ndjson,
    write_pairs_ndjson,
    write_sweep_csv,
    write_transform_json,
)
from .metrics import (
    DEFAULT_MATCH_RADIUS,
    SweepRow,
    default_sweep_thresholds,
    evaluate_detections,
    threshold_sweep,
)
from .transform_net import (
    TrainingConfig,
    TransformNet,
    TransformNetResult,
    fit_transform_net,
    init_params,
    mlp_apply,
    mlp_loss,
    mlp_loss_grad,
    param_count,
    point_rmse,
)
from .types import CATEGORIES, Detection, FusedDetection, ObjectTruth, PointPair

__all__ = [
    "CATEGORIES",
    "DEFAULT_MATCH_RADIUS",
    "Detection",
    "FusedDetection",
    "ObjectTruth",
    "PerspectiveTransform",
    "PointPair",
    "ProjectionResult",
    "RansacResult",
    "SweepRow",
    "TrainingConfig",
    "TransformNet",
    "TransformNetResult",
    "deduplicate",
    "default_sweep_thresholds",
    "evaluate_detections",
    "fit_homography_dlt",
    "fit_transform_net",
    "init_params",
    "mlp_apply",
    "mlp_loss",
    "mlp_loss_grad",
    "param_count",
    "point_rmse",
    "project",
    "ransac_fit",
    "read_detections_ndjson",
    "read_fused_ndjson",
    "read_pairs_ndjson",
    "read_sweep_csv",
    "read_transform_json",
    "reprojection_errors",
    "threshold_sweep",
    "write_detections_ndjson",
    "write_fused_ndjson",
    "write_pairs_ndjson",
    "write_sweep_csv",
    "write_transform_json",
]
