"""File schemas, configuration, and exact-round-trip serialization.

Record streams (primitives, observations, places, images, ground truth)
are UTF-8 JSON Lines, one object per line; tasks, configs and outputs are
single JSON documents.  Floats are written with Python's shortest
round-tripping representation, so write-then-read reproduces bit-identical
values.  Loaders are strict about required fields and types but ignore
unknown keys; every diagnostic carries the file path and, for record
files, the line number.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .core import Aabb3, Cluster, Primitive, TaskSet
from .errors import SchemaError
from .metrics import GroundTruthObject, MetricsReport
from .scenegraph import ImageFeature, PlaceNode, SceneGraph, argmax_task_label
from .tracker import SegmentObservation

SCHEMA_VERSION = "1"


@dataclass(frozen=True)
class RunConfig:
    """All pipeline knobs; serialized into every output's provenance block.

    ``alpha_objects``, ``alpha_regions`` and ``k`` default to None, meaning:
    take alpha/k for objects from the tasks file, and use alpha 0 for
    regions (so no place is assigned to the null task).  Explicit values,
    from a config file or flags, override the tasks file.
    """

    delta_bar_objects: float = 0.1
    delta_bar_regions: float = 0.1
    alpha_objects: float | None = None
    alpha_regions: float | None = None
    k: int | None = None
    theta_track: float = 0.9
    gamma_iou: float = 0.6
    tau_seconds: float = 2.0
    place_feature_strategy: str = "average"
    seed: int = 0

    def __post_init__(self):
        for name in ("delta_bar_objects", "delta_bar_regions"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise SchemaError(f"{name} must lie in [0, 1], got {value}")
        for name in ("alpha_objects", "alpha_regions"):
            value = getattr(self, name)
            if value is not None and not -1.0 <= value <= 1.0:
                raise SchemaError(f"{name} must lie in [-1, 1], got {value}")
        if self.k is not None and self.k < 1:
            raise SchemaError(f"k must be >= 1, got {self.k}")
        if not -1.0 <= self.theta_track <= 1.0 + 1e-9:
            raise SchemaError(f"theta_track must lie in [-1, 1], got {self.theta_track}")
        if not 0.0 <= self.gamma_iou <= 1.0:
            raise SchemaError(f"gamma_iou must lie in [0, 1], got {self.gamma_iou}")
        if self.tau_seconds <= 0.0:
            raise SchemaError(f"tau_seconds must be positive, got {self.tau_seconds}")
        if self.place_feature_strategy not in ("average", "closest"):
            raise SchemaError(
                f"place_feature_strategy must be 'average' or 'closest', "
                f"got {self.place_feature_strategy!r}"
            )

    def object_task_set(self, tasks: TaskSet) -> TaskSet:
        """Tasks with the object-mode alpha/k overrides applied."""
        return tasks.with_overrides(alpha=self.alpha_objects, k=self.k)

    def region_task_set(self, tasks: TaskSet) -> TaskSet:
        """Tasks for region mode: alpha defaults to 0 unless overridden."""
        alpha = 0.0 if self.alpha_regions is None else self.alpha_regions
        return tasks.with_overrides(alpha=alpha, k=self.k)

    def provenance(self, effective: dict | None = None) -> dict:
        block = {"schema_version": SCHEMA_VERSION, "config": dataclasses.asdict(self)}
        if effective:
            block["effective"] = effective
        return block


def load_config_file(path) -> dict:
    doc = _load_document(path)
    known = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = set(doc) - known
    if unknown:
        raise SchemaError(f"unknown config keys: {sorted(unknown)}", path=path)
    return doc


# ---------------------------------------------------------------------------
# low-level helpers


def _load_document(path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise SchemaError(f"cannot read file: {exc}", path=path) from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}", path=path, line=exc.lineno) from exc
    if not isinstance(doc, dict):
        raise SchemaError("expected a JSON object at top level", path=path)
    return doc


def _iter_records(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise SchemaError(f"cannot read file: {exc}", path=path) from exc
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON record: {exc.msg}", path=path, line=lineno) from exc
        if not isinstance(record, dict):
            raise SchemaError("record must be a JSON object", path=path, line=lineno)
        yield lineno, record


def _field(record: dict, key: str, kind, path, line):
    if key not in record:
        raise SchemaError(f"missing field {key!r}", path=path, line=line)
    value = record[key]
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise SchemaError(f"field {key!r} must be a number", path=path, line=line)
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise SchemaError(f"field {key!r} must be an integer", path=path, line=line)
        return value
    if not isinstance(value, kind):
        raise SchemaError(
            f"field {key!r} must be of type {kind.__name__}", path=path, line=line
        )
    return value


def _vector(values, path, line, key: str, dim: int | None = None) -> np.ndarray:
    if not isinstance(values, list) or not all(
        isinstance(x, (int, float)) and not isinstance(x, bool) for x in values
    ):
        raise SchemaError(f"field {key!r} must be a list of numbers", path=path, line=line)
    v = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(v)):
        raise SchemaError(f"field {key!r} has non-finite entries", path=path, line=line)
    if dim is not None and v.shape != (dim,):
        raise SchemaError(
            f"field {key!r} has dimension {v.shape[0] if v.ndim == 1 else v.shape}, expected {dim}",
            path=path,
            line=line,
        )
    return v


def _bbox(record: dict, path, line) -> Aabb3:
    raw = _field(record, "bbox", dict, path, line)
    mins = _vector(raw.get("min"), path, line, "bbox.min", dim=3)
    maxs = _vector(raw.get("max"), path, line, "bbox.max", dim=3)
    if np.any(mins > maxs):
        raise SchemaError("bbox min exceeds max", path=path, line=line)
    return Aabb3(mins, maxs)


def _bbox_json(box: Aabb3) -> dict:
    return {"min": box.mins.tolist(), "max": box.maxs.tolist()}


def _write_json(path, doc: dict) -> None:
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def _write_records(path, records: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record) + "\n")


# ---------------------------------------------------------------------------
# tasks


def load_tasks(path) -> TaskSet:
    doc = _load_document(path)
    labels = _field(doc, "labels", list, path, None)
    if not labels or not all(isinstance(s, str) for s in labels):
        raise SchemaError("'labels' must be a non-empty list of strings", path=path)
    raw = _field(doc, "embeddings", list, path, None)
    if len(raw) != len(labels):
        raise SchemaError(
            f"{len(labels)} labels but {len(raw)} embeddings", path=path
        )
    rows = [_vector(r, path, None, f"embeddings[{i}]") for i, r in enumerate(raw)]
    dims = {r.shape[0] for r in rows}
    if len(dims) != 1:
        raise SchemaError(f"embeddings have mixed dimensions {sorted(dims)}", path=path)
    alpha = _field(doc, "alpha", float, path, None)
    k = _field(doc, "k", int, path, None)
    if not -1.0 <= alpha <= 1.0:
        raise SchemaError(f"alpha must lie in [-1, 1], got {alpha}", path=path)
    if not 1 <= k <= len(labels) + 1:
        raise SchemaError(f"k must lie in [1, m+1], got {k}", path=path)
    return TaskSet(tuple(labels), np.stack(rows), alpha, k)


def write_tasks(path, tasks: TaskSet) -> None:
    _write_json(
        path,
        {
            "labels": list(tasks.labels),
            "embeddings": [row.tolist() for row in tasks.embeddings],
            "alpha": tasks.alpha,
            "k": tasks.k,
        },
    )


# ---------------------------------------------------------------------------
# record streams


def load_primitives(path, dim: int | None = None) -> list[Primitive]:
    out = []
    seen = set()
    for line, record in _iter_records(path):
        pid = _field(record, "id", int, path, line)
        if pid in seen:
            raise SchemaError(f"duplicate primitive id {pid}", path=path, line=line)
        seen.add(pid)
        emb = _vector(record.get("embedding"), path, line, "embedding", dim=dim)
        bbox = _bbox(record, path, line)
        stamp = None
        if "stamp" in record:
            stamp = _field(record, "stamp", float, path, line)
        out.append(Primitive(id=pid, embedding=emb, bbox=bbox, stamp=stamp))
    return out


def write_primitives(path, primitives: Sequence[Primitive]) -> None:
    _write_records(
        path,
        (
            {
                "id": p.id,
                "embedding": p.embedding.tolist(),
                "bbox": _bbox_json(p.bbox),
                **({"stamp": p.stamp} if p.stamp is not None else {}),
            }
            for p in primitives
        ),
    )


def load_observations(path, dim: int | None = None) -> list[SegmentObservation]:
    out = []
    for line, record in _iter_records(path):
        out.append(
            SegmentObservation(
                frame=_field(record, "frame", int, path, line),
                stamp=_field(record, "stamp", float, path, line),
                embedding=_vector(record.get("embedding"), path, line, "embedding", dim=dim),
                bbox=_bbox(record, path, line),
            )
        )
    return out


def write_observations(path, observations: Sequence[SegmentObservation]) -> None:
    _write_records(
        path,
        (
            {
                "frame": o.frame,
                "stamp": o.stamp,
                "embedding": o.embedding.tolist(),
                "bbox": _bbox_json(o.bbox),
            }
            for o in observations
        ),
    )


def load_places(path) -> list[PlaceNode]:
    out = []
    seen = set()
    for line, record in _iter_records(path):
        pid = _field(record, "id", int, path, line)
        if pid in seen:
            raise SchemaError(f"duplicate place id {pid}", path=path, line=line)
        seen.add(pid)
        pos = _vector(record.get("pos"), path, line, "pos", dim=3)
        neighbors = _field(record, "neighbors", list, path, line)
        visible = _field(record, "visible", list, path, line)
        for key, values in (("neighbors", neighbors), ("visible", visible)):
            if not all(isinstance(x, int) and not isinstance(x, bool) for x in values):
                raise SchemaError(f"field {key!r} must be a list of ids", path=path, line=line)
        out.append(PlaceNode(id=pid, position=pos, neighbors=tuple(neighbors), visible=tuple(visible)))
    index = {p.id: set(p.neighbors) for p in out}
    for p in out:
        for nb in p.neighbors:
            if nb not in index:
                raise SchemaError(f"place {p.id} lists unknown neighbor {nb}", path=path)
            if p.id not in index[nb]:
                raise SchemaError(
                    f"asymmetric neighbors: {p.id} lists {nb} but not vice versa", path=path
                )
    return out


def write_places(path, places: Sequence[PlaceNode]) -> None:
    _write_records(
        path,
        (
            {
                "id": p.id,
                "pos": p.position.tolist(),
                "neighbors": list(p.neighbors),
                "visible": list(p.visible),
            }
            for p in places
        ),
    )


def load_images(path, dim: int | None = None) -> list[ImageFeature]:
    out = []
    seen = set()
    for line, record in _iter_records(path):
        iid = _field(record, "id", int, path, line)
        if iid in seen:
            raise SchemaError(f"duplicate image id {iid}", path=path, line=line)
        seen.add(iid)
        out.append(
            ImageFeature(
                id=iid,
                stamp=_field(record, "stamp", float, path, line),
                position=_vector(record.get("pos"), path, line, "pos", dim=3),
                embedding=_vector(record.get("embedding"), path, line, "embedding", dim=dim),
            )
        )
    return out


def write_images(path, images: Sequence[ImageFeature]) -> None:
    _write_records(
        path,
        (
            {
                "id": img.id,
                "stamp": img.stamp,
                "pos": img.position.tolist(),
                "embedding": img.embedding.tolist(),
            }
            for img in images
        ),
    )


def load_ground_truth(path) -> list[GroundTruthObject]:
    out = []
    seen = set()
    for line, record in _iter_records(path):
        gid = _field(record, "id", int, path, line)
        if gid in seen:
            raise SchemaError(f"duplicate ground-truth id {gid}", path=path, line=line)
        seen.add(gid)
        tasks = _field(record, "tasks", list, path, line)
        if not tasks or not all(isinstance(x, int) and not isinstance(x, bool) for x in tasks):
            raise SchemaError("field 'tasks' must be a non-empty list of task indices", path=path, line=line)
        out.append(
            GroundTruthObject(id=gid, bbox=_bbox(record, path, line), task_indices=tuple(tasks))
        )
    return out


def write_ground_truth(path, gts: Sequence[GroundTruthObject]) -> None:
    _write_records(
        path,
        (
            {"id": g.id, "bbox": _bbox_json(g.bbox), "tasks": list(g.task_indices)}
            for g in gts
        ),
    )


# ---------------------------------------------------------------------------
# scene graph


def _cluster_json(index: int, cluster: Cluster, tasks: TaskSet) -> dict:
    return {
        "id": index,
        "members": sorted(cluster.members),
        "embedding": cluster.embedding.tolist(),
        "bbox": _bbox_json(cluster.bbox),
        "dist": cluster.dist.tolist(),
        "label": argmax_task_label(cluster.dist, tasks),
    }


def _cluster_from_json(record: dict, path, line, total_members: int) -> Cluster:
    members = record.get("members")
    if not isinstance(members, list) or not members:
        raise SchemaError("field 'members' must be a non-empty list", path=path, line=line)
    emb = _vector(record.get("embedding"), path, line, "embedding")
    dist = _vector(record.get("dist"), path, line, "dist")
    if np.any(dist < 0) or abs(float(dist.sum()) - 1.0) > 1e-9:
        raise SchemaError("field 'dist' is not a probability vector", path=path, line=line)
    return Cluster(
        members=frozenset(int(i) for i in members),
        mass=len(members) / max(total_members, 1),
        dist=dist,
        embedding=emb,
        bbox=_bbox(record, path, line),
        embedding_sum=emb * len(members),
    )


def write_scene_graph(path, scene: SceneGraph, tasks: TaskSet, config: RunConfig, effective: dict | None = None) -> None:
    doc = {
        "version": SCHEMA_VERSION,
        "config": config.provenance(effective),
        "objects": [_cluster_json(i, c, tasks) for i, c in enumerate(scene.objects)],
        "places": [
            {
                "id": p.id,
                "pos": p.position.tolist(),
                "neighbors": list(p.neighbors),
                "visible": list(p.visible),
                **(
                    {"embedding": scene.place_features[p.id].tolist()}
                    if p.id in scene.place_features
                    else {}
                ),
            }
            for p in scene.places
        ],
        "regions": [_cluster_json(i, c, tasks) for i, c in enumerate(scene.regions)],
    }
    _write_json(path, doc)


def load_scene_graph(path) -> SceneGraph:
    doc = _load_document(path)
    if "version" not in doc or "objects" not in doc:
        raise SchemaError("scene graph needs 'version' and 'objects'", path=path)
    objects_raw = _field(doc, "objects", list, path, None)
    total = sum(len(o.get("members", ())) for o in objects_raw if isinstance(o, dict))
    objects = []
    for record in objects_raw:
        if not isinstance(record, dict):
            raise SchemaError("object entries must be JSON objects", path=path)
        objects.append(_cluster_from_json(record, path, None, total))
    places = []
    features = {}
    for record in doc.get("places", []):
        pid = _field(record, "id", int, path, None)
        places.append(
            PlaceNode(
                id=pid,
                position=_vector(record.get("pos"), path, None, "pos", dim=3),
                neighbors=tuple(record.get("neighbors", ())),
                visible=tuple(record.get("visible", ())),
            )
        )
        if "embedding" in record:
            features[pid] = _vector(record["embedding"], path, None, "embedding")
    regions_raw = doc.get("regions", [])
    region_total = sum(len(r.get("members", ())) for r in regions_raw if isinstance(r, dict))
    regions = [_cluster_from_json(r, path, None, region_total) for r in regions_raw]
    return SceneGraph(
        objects=tuple(objects),
        places=tuple(places),
        place_features=features,
        regions=tuple(regions),
        provenance=doc.get("config", {}),
    )


def write_regions(path, regions: Sequence[Cluster], tasks: TaskSet, config: RunConfig, effective: dict | None = None) -> None:
    _write_json(
        path,
        {
            "version": SCHEMA_VERSION,
            "config": config.provenance(effective),
            "regions": [_cluster_json(i, c, tasks) for i, c in enumerate(regions)],
        },
    )


# ---------------------------------------------------------------------------
# reports


def metrics_json(report: MetricsReport) -> dict:
    def mode_block(block):
        return {
            "osr": block.recall,
            "osp": block.precision,
            "f1": block.f1,
            "per_task": [
                {
                    "task": tm.task_index,
                    "gt_count": tm.gt_count,
                    "recall_correct": tm.recall_correct,
                    "precision_correct": tm.precision_correct,
                    "precision_denominator": tm.precision_denominator,
                    "osr": tm.recall,
                    "osp": tm.precision,
                    "f1": tm.f1,
                }
                for tm in block.per_task
            ],
        }

    return {
        "strict": mode_block(report.strict),
        "relaxed": mode_block(report.relaxed),
        "mean_iou": report.mean_iou,
        "object_count": report.object_count,
        "warnings": list(report.warnings),
        "precision_denominator_readings": report.precision_denominator_readings,
    }


def write_metrics(path, report: MetricsReport, provenance: dict) -> None:
    doc = {"version": SCHEMA_VERSION, "config": provenance}
    doc.update(metrics_json(report))
    _write_json(path, doc)


def write_query_results(path, results, provenance: dict) -> None:
    _write_json(
        path,
        {
            "version": SCHEMA_VERSION,
            "config": provenance,
            "results": results,
        },
    )


def load_query(path, dim: int | None = None) -> np.ndarray:
    doc = _load_document(path)
    return _vector(doc.get("embedding"), path, None, "embedding", dim=dim)


def write_query(path, embedding: np.ndarray) -> None:
    _write_json(path, {"embedding": np.asarray(embedding, dtype=np.float64).tolist()})


def write_latency_log(path, rows: Sequence[dict]) -> None:
    _write_records(path, rows)
