"""Shared value types and the small vector/geometry kernel.

Embedding vectors are L2-normalized once at ingestion, so cosine similarity
reduces to a plain dot product everywhere downstream.  All types here are
immutable value objects; the operations are pure functions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from ._union import UnionFind
from .errors import DegenerateVector, DimensionMismatch, TaskSceneError

_ZERO_NORM = 1e-12


def unit_vector(values) -> np.ndarray:
    """Return ``values`` as a read-only unit-norm float64 vector.

    Rejects non-finite input and vectors with norm below 1e-12.  Vectors
    that are already unit within 1e-9 are passed through bit-unchanged so
    normalization is idempotent and file round trips stay exact.
    """
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise DegenerateVector(f"expected a non-empty 1-d vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise DegenerateVector("vector has non-finite entries")
    norm = float(np.linalg.norm(v))
    if norm < _ZERO_NORM:
        raise DegenerateVector("zero vector cannot be normalized")
    if abs(norm - 1.0) > 1e-9:
        v = v / norm
    else:
        v = v.copy()
    v.setflags(write=False)
    return v


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Dot product of two unit vectors, clipped to [-1, 1]."""
    if a.shape != b.shape:
        raise DimensionMismatch(f"vector dimensions differ: {a.shape} vs {b.shape}")
    return float(np.clip(np.dot(a, b), -1.0, 1.0))


def merge_embedding(members: Sequence[tuple[np.ndarray, float]]) -> np.ndarray:
    """Weight-proportional mean of unit vectors, re-normalized to unit norm.

    Invariant to uniform scaling of the weights.  Raises when the mean
    cancels to (near-)zero norm.
    """
    if not members:
        raise TaskSceneError("merge_embedding needs at least one vector")
    total = 0.0
    acc = None
    for vec, weight in members:
        w = float(weight)
        if w <= 0.0:
            raise TaskSceneError(f"non-positive weight {w} in merge_embedding")
        acc = w * vec if acc is None else acc + w * vec
        total += w
    mean = acc / total
    if float(np.linalg.norm(mean)) < _ZERO_NORM:
        raise DegenerateVector("merged embedding cancelled to zero norm")
    return unit_vector(mean)


def _as_point3(values, name: str) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64)
    if v.shape != (3,):
        raise TaskSceneError(f"{name} must be a 3-vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise TaskSceneError(f"{name} has non-finite entries")
    v.setflags(write=False)
    return v


@dataclass(frozen=True, eq=False)
class Aabb3:
    """Axis-aligned box in meters; ``mins <= maxs`` componentwise."""

    mins: np.ndarray
    maxs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mins", _as_point3(self.mins, "bbox min corner"))
        object.__setattr__(self, "maxs", _as_point3(self.maxs, "bbox max corner"))
        if np.any(self.mins > self.maxs):
            raise TaskSceneError(
                f"invalid box: min corner {self.mins.tolist()} exceeds max {self.maxs.tolist()}"
            )

    @property
    def volume(self) -> float:
        return float(np.prod(self.maxs - self.mins))

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.mins + self.maxs)

    @property
    def diagonal(self) -> float:
        return float(np.linalg.norm(self.maxs - self.mins))

    def contains_point(self, point) -> bool:
        p = np.asarray(point, dtype=np.float64)
        return bool(np.all(self.mins <= p) and np.all(p <= self.maxs))

    @classmethod
    def point(cls, position) -> "Aabb3":
        """Degenerate zero-volume box around a point (used for place nodes)."""
        return cls(position, position)


def _intersection_volume(a: Aabb3, b: Aabb3) -> float:
    dims = np.minimum(a.maxs, b.maxs) - np.maximum(a.mins, b.mins)
    if np.any(dims <= 0.0):
        return 0.0
    return float(np.prod(dims))


def bbox_iou(a: Aabb3, b: Aabb3) -> float:
    """Intersection volume over union volume; 0 for disjoint or degenerate."""
    inter = _intersection_volume(a, b)
    if inter <= 0.0:
        return 0.0
    union = a.volume + b.volume - inter
    if union <= 0.0:
        return 0.0
    return inter / union


def bbox_overlaps(a: Aabb3, b: Aabb3) -> bool:
    """True iff the boxes share positive volume (touching faces do not count)."""
    return _intersection_volume(a, b) > 0.0


def bbox_hull(boxes: Iterable[Aabb3]) -> Aabb3:
    """Componentwise min/max hull of one or more boxes."""
    boxes = list(boxes)
    if not boxes:
        raise TaskSceneError("hull of zero boxes is undefined")
    mins = np.min([b.mins for b in boxes], axis=0)
    maxs = np.max([b.maxs for b in boxes], axis=0)
    return Aabb3(mins, maxs)


@dataclass(frozen=True, eq=False)
class Primitive:
    """One task-agnostic 3D segment: unit embedding plus an axis-aligned box."""

    id: int
    embedding: np.ndarray
    bbox: Aabb3
    stamp: float | None = None
    support: int = 1

    def __post_init__(self):
        object.__setattr__(self, "embedding", unit_vector(self.embedding))


@dataclass(frozen=True, eq=False)
class TaskSet:
    """The task list: labels, unit embeddings, null score and ranking depth.

    ``alpha`` is the fixed similarity score of the synthetic null task;
    ``k`` is how many top-ranked entries survive into the conditional
    distribution.
    """

    labels: tuple[str, ...]
    embeddings: np.ndarray
    alpha: float
    k: int

    def __post_init__(self):
        labels = tuple(str(s) for s in self.labels)
        if len(labels) < 1:
            raise TaskSceneError("a task set needs at least one task")
        rows = [unit_vector(row) for row in np.atleast_2d(np.asarray(self.embeddings, dtype=np.float64))]
        if len(rows) != len(labels):
            raise TaskSceneError(
                f"{len(labels)} labels but {len(rows)} embeddings"
            )
        matrix = np.stack(rows)
        matrix.setflags(write=False)
        if not -1.0 <= float(self.alpha) <= 1.0:
            raise TaskSceneError(f"alpha must lie in [-1, 1], got {self.alpha}")
        k = int(self.k)
        if not 1 <= k <= len(labels) + 1:
            raise TaskSceneError(f"k must lie in [1, m+1]={[1, len(labels) + 1]}, got {k}")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "embeddings", matrix)
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "k", k)

    @property
    def m(self) -> int:
        return len(self.labels)

    @property
    def dim(self) -> int:
        return int(self.embeddings.shape[1])

    def with_overrides(self, alpha: float | None = None, k: int | None = None) -> "TaskSet":
        return TaskSet(
            self.labels,
            self.embeddings,
            self.alpha if alpha is None else alpha,
            self.k if k is None else k,
        )


def _as_distribution(values) -> np.ndarray:
    d = np.asarray(values, dtype=np.float64)
    d.setflags(write=False)
    return d


@dataclass(frozen=True, eq=False)
class Cluster:
    """A group of primitives with mass, fused distribution, embedding and box.

    ``embedding_sum`` carries the running unnormalized sum of the member
    embeddings (weight 1 per original primitive) so that merging stays
    associative; ``embedding`` is that sum normalized.
    """

    members: frozenset[int]
    mass: float
    dist: np.ndarray
    embedding: np.ndarray
    bbox: Aabb3
    embedding_sum: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if not self.members:
            raise TaskSceneError("a cluster needs at least one member")
        object.__setattr__(self, "members", frozenset(int(i) for i in self.members))
        object.__setattr__(self, "dist", _as_distribution(self.dist))
        if self.embedding_sum is None:
            object.__setattr__(
                self, "embedding_sum", np.asarray(self.embedding, dtype=np.float64) * len(self.members)
            )
        object.__setattr__(self, "embedding", unit_vector(self.embedding))

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def min_member(self) -> int:
        return min(self.members)

    @classmethod
    def from_primitive(cls, primitive: Primitive, mass: float, dist) -> "Cluster":
        return cls(
            members=frozenset({primitive.id}),
            mass=float(mass),
            dist=dist,
            embedding=primitive.embedding,
            bbox=primitive.bbox,
            embedding_sum=np.array(primitive.embedding, dtype=np.float64),
        )


class PrimitiveGraph:
    """Primitives plus putative-merge edges and their connected components.

    Edges are undirected id pairs; components are recomputed from scratch at
    construction so the partition always matches (nodes, edges) exactly.
    """

    def __init__(self, nodes: Mapping[int, Primitive], edges: Iterable[tuple[int, int]] = ()):
        self.nodes: dict[int, Primitive] = {int(i): p for i, p in nodes.items()}
        pairs = set()
        for a, b in edges:
            a, b = int(a), int(b)
            if a == b:
                raise TaskSceneError(f"self edge on primitive {a}")
            if a not in self.nodes or b not in self.nodes:
                raise TaskSceneError(f"edge ({a}, {b}) references a missing primitive")
            pairs.add((min(a, b), max(a, b)))
        self.edges: frozenset[tuple[int, int]] = frozenset(pairs)

        adjacency: dict[int, set[int]] = {i: set() for i in self.nodes}
        uf = UnionFind()
        for i in self.nodes:
            uf.add(i)
        for a, b in self.edges:
            adjacency[a].add(b)
            adjacency[b].add(a)
            uf.union(a, b)
        self.adjacency: dict[int, frozenset[int]] = {
            i: frozenset(neighbors) for i, neighbors in adjacency.items()
        }
        comps = [frozenset(members) for members in uf.groups().values()]
        self.components: tuple[frozenset[int], ...] = tuple(
            sorted(comps, key=min)
        )

    def __len__(self) -> int:
        return len(self.nodes)

    @classmethod
    def from_primitives(
        cls,
        primitives: Sequence[Primitive],
        edges: Iterable[tuple[int, int]] | None = None,
    ) -> "PrimitiveGraph":
        """Build a graph; with ``edges=None`` they come from bbox overlap."""
        nodes = {}
        for p in primitives:
            if p.id in nodes:
                raise TaskSceneError(f"duplicate primitive id {p.id}")
            nodes[p.id] = p
        if edges is None:
            from ._spatial import overlap_edges

            edges = overlap_edges(list(nodes.values()))
        return cls(nodes, edges)

    def subgraph(self, ids: Iterable[int]) -> "PrimitiveGraph":
        keep = set(int(i) for i in ids)
        nodes = {i: self.nodes[i] for i in keep}
        edges = [(a, b) for a, b in self.edges if a in keep and b in keep]
        return PrimitiveGraph(nodes, edges)
