"""Layered scene assembly: task-relevant objects, places, and regions."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .core import Aabb3, Cluster, Primitive, PrimitiveGraph, TaskSet, cosine_similarity, merge_embedding, unit_vector
from .errors import MissingVisibility, TaskSceneError
from .ib import ClusteringResult, agglomerative_ib
from .relevance import relevance_matrix


@dataclass(eq=False)
class PlaceNode:
    """Obstacle-free location node of the place graph."""

    id: int
    position: np.ndarray
    neighbors: tuple[int, ...]
    visible: tuple[int, ...]

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=np.float64)
        self.neighbors = tuple(int(i) for i in self.neighbors)
        self.visible = tuple(int(i) for i in self.visible)


@dataclass(eq=False)
class ImageFeature:
    """Whole-image embedding with the camera position it was taken from."""

    id: int
    stamp: float
    position: np.ndarray
    embedding: np.ndarray

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=np.float64)
        self.embedding = unit_vector(self.embedding)


@dataclass(eq=False)
class SceneGraph:
    """Immutable snapshot of the layered output."""

    objects: tuple[Cluster, ...]
    places: tuple[PlaceNode, ...] = ()
    place_features: dict[int, np.ndarray] = field(default_factory=dict)
    regions: tuple[Cluster, ...] = ()
    provenance: dict = field(default_factory=dict)


def assign_place_features(
    places: Sequence[PlaceNode],
    images: Sequence[ImageFeature],
    strategy: str = "average",
) -> dict[int, np.ndarray]:
    """Feature per place: mean of its visible images, or the closest one.

    ``average`` re-normalizes the mean of all visible image embeddings;
    ``closest`` picks the embedding of the visible image whose camera
    position is nearest the place (ties toward the lower image id).
    """
    if strategy not in ("average", "closest"):
        raise TaskSceneError(f"unknown place feature strategy: {strategy!r}")
    by_id = {img.id: img for img in images}
    blind = [p.id for p in places if not p.visible]
    if blind:
        raise MissingVisibility(blind)
    features: dict[int, np.ndarray] = {}
    for place in places:
        missing = [i for i in place.visible if i not in by_id]
        if missing:
            raise TaskSceneError(
                f"place {place.id} references unknown images {missing}"
            )
        visible = [by_id[i] for i in place.visible]
        if strategy == "average":
            features[place.id] = merge_embedding([(img.embedding, 1.0) for img in visible])
        else:
            best = min(
                visible,
                key=lambda img: (float(np.linalg.norm(img.position - place.position)), img.id),
            )
            features[place.id] = best.embedding
    return features


def cluster_regions(
    places: Sequence[PlaceNode],
    features: Mapping[int, np.ndarray],
    tasks: TaskSet,
    delta_bar: float,
) -> tuple[Cluster, ...]:
    """Cluster places into regions along the place-graph edges.

    Each place becomes a degenerate point-box primitive carrying its
    assigned feature; every place-graph edge is a putative merge.  The
    caller's task set supplies alpha (region runs conventionally use 0, so
    nothing is assigned to the null task); all resulting clusters are
    returned.
    """
    if not places:
        return ()
    missing = [p.id for p in places if p.id not in features]
    if missing:
        raise TaskSceneError(f"features missing for places {missing[:5]}")
    primitives = [
        Primitive(id=p.id, embedding=features[p.id], bbox=Aabb3.point(p.position))
        for p in places
    ]
    known = {p.id for p in places}
    edges = []
    for p in places:
        for nb in p.neighbors:
            if nb not in known:
                raise TaskSceneError(f"place {p.id} lists unknown neighbor {nb}")
            if nb != p.id:
                edges.append((min(p.id, nb), max(p.id, nb)))
    dists, pruned = relevance_matrix(primitives, tasks)
    kept = [p for p in primitives if p.id not in pruned]
    if not kept:
        return ()
    graph = PrimitiveGraph.from_primitives(
        kept, edges=[(a, b) for a, b in edges if a not in pruned and b not in pruned]
    )
    result = agglomerative_ib(graph, dists, delta_bar)
    return result.clusters


def assemble(
    objects: ClusteringResult | Sequence[Cluster],
    tasks: TaskSet,
    alpha: float | None = None,
    places: Sequence[PlaceNode] = (),
    place_features: Mapping[int, np.ndarray] | None = None,
    regions: Sequence[Cluster] = (),
    provenance: dict | None = None,
) -> SceneGraph:
    """Build the scene graph, keeping only task-relevant object clusters.

    A cluster stays in the object layer iff its fused embedding reaches
    cosine similarity >= alpha for at least one task (alpha defaults to the
    task set's null score).
    """
    clusters = objects.clusters if isinstance(objects, ClusteringResult) else tuple(objects)
    threshold = tasks.alpha if alpha is None else float(alpha)
    kept = tuple(
        c for c in clusters
        if float(np.max(tasks.embeddings @ c.embedding)) >= threshold
    )
    return SceneGraph(
        objects=kept,
        places=tuple(places),
        place_features=dict(place_features or {}),
        regions=tuple(regions),
        provenance=dict(provenance or {}),
    )


def query(
    scene: SceneGraph, query_embedding: np.ndarray, n: int
) -> list[tuple[Cluster, float]]:
    """The n objects most similar to the query, best first, with scores.

    Ties break toward the lower object index, so the ranking is a stable
    total order.
    """
    if n < 1:
        raise TaskSceneError(f"n must be >= 1, got {n}")
    scored = [
        (cosine_similarity(c.embedding, query_embedding), idx)
        for idx, c in enumerate(scene.objects)
    ]
    scored.sort(key=lambda t: (-t[0], t[1]))
    return [(scene.objects[idx], score) for score, idx in scored[:n]]


def argmax_task_label(dist: np.ndarray, tasks: TaskSet) -> str:
    """Display label of a cluster distribution: its best real task, or null."""
    if float(dist[0]) == 1.0:
        return "<null>"
    return tasks.labels[int(np.argmax(dist[1:]))]
