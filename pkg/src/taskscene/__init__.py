"""Task-driven clustering of embedded 3D primitives into objects and regions.

A scene arrives as task-agnostic primitives (unit embedding + axis-aligned
box).  Given a task list as embeddings, primitives are scored against the
tasks, pre-pruned through a null task, and greedily merged along a
geometric adjacency graph while the fractional task-information loss of
each merge stays under a budget.  The same clustering runs incrementally
over a primitive stream with exact batch equivalence, and the package
ships the matching open-set evaluation metrics.
"""

from .core import (
    Aabb3,
    Cluster,
    Primitive,
    PrimitiveGraph,
    TaskSet,
    bbox_hull,
    bbox_iou,
    bbox_overlaps,
    cosine_similarity,
    merge_embedding,
    unit_vector,
)
from .errors import (
    DegenerateVector,
    DimensionMismatch,
    DuplicateId,
    MissingVisibility,
    NoPositiveRelevance,
    OverlappingMembers,
    SchemaError,
    TaskSceneError,
)
from .ib import (
    ClusteringResult,
    MergeRecord,
    agglomerative_ib,
    component_delta,
    merge_clusters,
    merge_delta,
    merge_weight,
    mutual_information,
)
from .incremental import IncrementalState, finalize, insert_primitives
from .io import RunConfig
from .metrics import (
    GroundTruthObject,
    MetricsReport,
    detection_mode,
    evaluate,
    mean_iou,
    open_set_precision,
    open_set_recall,
)
from .pipeline import batch_cluster, stream_cluster
from .relevance import conditional_distribution, relevance_matrix, score_vector
from .scenegraph import (
    ImageFeature,
    PlaceNode,
    SceneGraph,
    assemble,
    assign_place_features,
    cluster_regions,
    query,
)
from .tracker import SegmentObservation, SegmentTracker, Track

__version__ = "0.1.0"

__all__ = [
    "Aabb3",
    "Cluster",
    "ClusteringResult",
    "DegenerateVector",
    "DimensionMismatch",
    "DuplicateId",
    "GroundTruthObject",
    "ImageFeature",
    "IncrementalState",
    "MergeRecord",
    "MetricsReport",
    "MissingVisibility",
    "NoPositiveRelevance",
    "OverlappingMembers",
    "PlaceNode",
    "Primitive",
    "PrimitiveGraph",
    "RunConfig",
    "SceneGraph",
    "SchemaError",
    "SegmentObservation",
    "SegmentTracker",
    "TaskSceneError",
    "TaskSet",
    "Track",
    "agglomerative_ib",
    "assemble",
    "assign_place_features",
    "batch_cluster",
    "bbox_hull",
    "bbox_iou",
    "bbox_overlaps",
    "cluster_regions",
    "component_delta",
    "conditional_distribution",
    "cosine_similarity",
    "detection_mode",
    "evaluate",
    "finalize",
    "insert_primitives",
    "mean_iou",
    "merge_clusters",
    "merge_delta",
    "merge_embedding",
    "merge_weight",
    "mutual_information",
    "open_set_precision",
    "open_set_recall",
    "query",
    "relevance_matrix",
    "score_vector",
    "stream_cluster",
    "unit_vector",
]
