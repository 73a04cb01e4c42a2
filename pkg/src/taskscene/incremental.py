"""Online clustering over a growing primitive graph.

Primitives stream in; connected components are tracked with union-find and
every component keeps its own clustering, computed with masses uniform
within the component but stopped against the *global* information scale
(see ``component_delta``).  A component is re-clustered from its raw
primitives whenever it gains primitives, merges with another component, or
the shifting global normalization would change which of its merges are
admissible.  Because components evolve independently and the stopping
statistic matches the batch one exactly, the final partition always equals
a batch run over the same graph.

The admissibility re-check compares, with the current global scale, the
most expensive committed merge (must stay below the budget) and the
cheapest refused merge (must stay at or above it).  Since the product
N * I(X;Y) can only grow as primitives arrive, committed merges never
become inadmissible under a fixed delta_bar; the check is still two-sided
so that changing delta_bar between inserts stays correct.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from ._spatial import BoxGrid
from ._union import UnionFind
from .core import Cluster, Primitive, PrimitiveGraph
from .errors import DuplicateId, TaskSceneError
from .ib import (
    ClusteringResult,
    MergeRecord,
    agglomerative_ib,
    component_delta,
    mutual_information,
)


@dataclass(eq=False)
class ComponentEntry:
    """Cached clustering of one connected component (local-mass convention)."""

    result: ClusteringResult
    members: frozenset[int]
    max_committed: float  # -inf when the component has no merges
    pending_min: float    # +inf when no candidate was refused

    @property
    def size(self) -> int:
        return len(self.members)


class IncrementalState:
    """All primitives seen so far plus per-component clustering caches."""

    def __init__(self):
        self.primitives: dict[int, Primitive] = {}
        self.relevance: dict[int, np.ndarray] = {}
        self.adjacency: dict[int, set[int]] = {}
        self.entries: dict[int, ComponentEntry] = {}  # keyed by min member id
        self.info_xy_global: float = 0.0
        self._uf = UnionFind()
        self._grid: BoxGrid | None = None
        self._diagonals: list[float] = []
        self.stats = {"inserts": 0, "component_runs": 0, "recheck_reruns": 0}

    @property
    def total_primitives(self) -> int:
        return len(self.primitives)

    def component_of(self, pid: int) -> int:
        """Canonical id (min member) of the component holding ``pid``."""
        root = self._uf.find(pid)
        for canonical, members in self._component_groups().items():
            if self._uf.find(members[0]) == root:
                return canonical
        raise KeyError(pid)

    def _component_groups(self) -> dict[int, list[int]]:
        """Map canonical root (min member id) to sorted member list."""
        out = {}
        for members in self._uf.groups().values():
            members.sort()
            out[members[0]] = members
        return out


def _entry_is_valid(entry: ComponentEntry, total: int, info: float, delta_bar: float) -> bool:
    # Same predicate the clustering loop applies, so a kept cache is exactly
    # what a fresh run would produce under the current global scale.
    committed_ok = (
        entry.max_committed == -math.inf
        or component_delta(entry.max_committed, entry.size, total, info) < delta_bar
    )
    pending_ok = (
        entry.pending_min == math.inf
        or not component_delta(entry.pending_min, entry.size, total, info) < delta_bar
    )
    return committed_ok and pending_ok


def insert_primitives(
    state: IncrementalState,
    batch: Sequence[Primitive],
    relevance: Mapping[int, np.ndarray],
    delta_bar: float,
    edges: Iterable[tuple[int, int]] | None = None,
) -> set[int]:
    """Add a batch of primitives and re-cluster every affected component.

    With ``edges=None`` adjacency is discovered from bbox overlap against
    all primitives seen so far; place-style graphs pass explicit pairs.
    Returns the canonical ids (min member id) of re-clustered components.
    """
    for p in batch:
        if p.id in state.primitives:
            raise DuplicateId(f"primitive id {p.id} already inserted")
    ids = [p.id for p in batch]
    if len(set(ids)) != len(ids):
        raise DuplicateId("duplicate ids within one batch")
    missing = [i for i in ids if i not in relevance]
    if missing:
        raise TaskSceneError(f"relevance missing for batch primitives {missing[:5]}")

    old_groups = state._component_groups()

    for p in batch:
        state.primitives[p.id] = p
        state.relevance[p.id] = relevance[p.id]
        state.adjacency.setdefault(p.id, set())
        state._uf.add(p.id)

    if edges is None:
        new_edges = _discover_overlap_edges(state, batch)
    else:
        new_edges = []
        for a, b in edges:
            a, b = int(a), int(b)
            if a == b or a not in state.primitives or b not in state.primitives:
                raise TaskSceneError(f"bad edge ({a}, {b})")
            new_edges.append((min(a, b), max(a, b)))
    # explicit place-mode edges may land inside an existing component,
    # adding a merge candidate its cached clustering never saw
    touched = set(ids)
    for a, b in new_edges:
        if b not in state.adjacency[a] and not state._uf.union(a, b):
            touched.add(a)
        state.adjacency[a].add(b)
        state.adjacency[b].add(a)

    total = len(state.primitives)
    all_ids = sorted(state.primitives)
    dists = np.stack([state.relevance[i] for i in all_ids])
    state.info_xy_global = mutual_information(np.full(total, 1.0 / total), dists)

    new_groups = state._component_groups()
    changed: set[int] = set()
    entries: dict[int, ComponentEntry] = {}
    for root, members in new_groups.items():
        kept = state.entries.get(root)
        if kept is not None and len(kept.members) == len(members) and not (touched & kept.members):
            # Untouched component; keep unless the global scale moved its
            # stopping point.
            if _entry_is_valid(kept, total, state.info_xy_global, delta_bar):
                entries[root] = kept
                continue
            state.stats["recheck_reruns"] += 1
        entries[root] = _recluster(state, members, delta_bar, total)
        changed.add(root)
    state.entries = entries
    state.stats["inserts"] += 1
    return changed


def _discover_overlap_edges(
    state: IncrementalState, batch: Sequence[Primitive]
) -> list[tuple[int, int]]:
    # The grid is an exact broad phase at any cell size, so it persists
    # across inserts and is rebuilt only when the median box diagonal has
    # drifted far from the current cell size.
    state._diagonals.extend(p.bbox.diagonal for p in batch)
    median = float(np.median(state._diagonals)) if state._diagonals else 1.0
    median = median if median > 0.0 else 1.0
    if state._grid is None or not 0.5 <= median / state._grid.cell_size <= 2.0:
        state._grid = BoxGrid(median)
        for pid in sorted(state.primitives):
            state._grid.insert(pid, state.primitives[pid].bbox)
    else:
        for p in sorted(batch, key=lambda q: q.id):
            state._grid.insert(p.id, p.bbox)
    pairs: set[tuple[int, int]] = set()
    for p in sorted(batch, key=lambda q: q.id):
        for other in state._grid.overlapping(p.bbox, exclude=p.id):
            pairs.add((min(p.id, other), max(p.id, other)))
    return sorted(pairs)


def _recluster(
    state: IncrementalState, members: list[int], delta_bar: float, total: int
) -> ComponentEntry:
    member_set = set(members)
    nodes = {i: state.primitives[i] for i in members}
    edges = [
        (a, b)
        for a in members
        for b in state.adjacency[a]
        if a < b and b in member_set
    ]
    graph = PrimitiveGraph(nodes, edges)
    result = agglomerative_ib(
        graph,
        state.relevance,
        delta_bar,
        total_info=state.info_xy_global,
        total_count=total,
    )
    state.stats["component_runs"] += 1
    return ComponentEntry(
        result=result,
        members=frozenset(members),
        max_committed=max((m.weight for m in result.merges_applied), default=-math.inf),
        pending_min=result.pending_min_weight,
    )


def finalize(state: IncrementalState) -> ClusteringResult:
    """Concatenate the per-component results into one global clustering.

    Cluster masses are re-expressed against the global primitive count and
    logged merge weights are rescaled the same way, so the output matches
    what a batch run over the full graph reports.
    """
    total = state.total_primitives
    if total == 0:
        return ClusteringResult((), {}, (), 0.0, 0.0, math.inf)
    clusters: list[Cluster] = []
    merges: list[MergeRecord] = []
    pending_min = math.inf
    for root in sorted(state.entries):
        entry = state.entries[root]
        scale = entry.size / total
        for c in entry.result.clusters:
            clusters.append(
                Cluster(
                    members=c.members,
                    mass=len(c.members) / total,
                    dist=c.dist,
                    embedding=c.embedding,
                    bbox=c.bbox,
                    embedding_sum=c.embedding_sum,
                )
            )
        # per-component logs carry the delta seen when the component was
        # last clustered; re-express against the final global scale
        merges.extend(
            MergeRecord(
                m.i,
                m.j,
                m.weight * scale,
                component_delta(m.weight, entry.size, total, state.info_xy_global),
            )
            for m in entry.result.merges_applied
        )
        if entry.pending_min != math.inf:
            pending_min = min(pending_min, entry.pending_min * scale)
    clusters.sort(key=lambda c: c.min_member)
    assignment = {pid: idx for idx, c in enumerate(clusters) for pid in c.members}
    info_final = mutual_information(
        np.array([c.mass for c in clusters]), np.stack([c.dist for c in clusters])
    )
    return ClusteringResult(
        clusters=tuple(clusters),
        assignment=assignment,
        merges_applied=tuple(merges),
        info_initial=state.info_xy_global,
        info_final=info_final,
        pending_min_weight=pending_min,
    )
