"""Greedy agglomerative clustering driven by task-information loss.

Clusters start as singletons with uniform mass 1/N.  Each graph edge is a
putative merge whose weight

    d_ij = (mass_i + mass_j) * JS(dist_i, dist_j)

uses the Jensen-Shannon divergence with mass-proportional priors, which
makes d_ij equal the exact mutual-information loss of committing the merge.
The cheapest candidate is peeked each round and committed only while its
fractional loss d / I(X;Y) stays strictly below ``delta_bar``; the first
candidate at or above the budget stops the loop, so delta_bar = 0 keeps all
primitives and delta_bar = 1 collapses each connected component (unless a
single merge would cost the entire information).

Ties on weight break toward the lexicographically smallest pair of
min-member ids, which makes merge logs bit-reproducible.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Mapping, NamedTuple

import numpy as np
from scipy.special import rel_entr

from .core import Aabb3, Cluster, PrimitiveGraph, bbox_hull, unit_vector
from .errors import OverlappingMembers, TaskSceneError

_INFO_FLOOR = 1e-12


def mutual_information(masses, dists, marginal=None) -> float:
    """I = sum_i m_i * KL(dist_i || p_y) in nats.

    ``marginal`` defaults to the mixture sum_i m_i * dist_i; passing an
    explicit reference marginal yields the information contribution of a
    subset relative to that marginal (used by the per-component identity).
    """
    m = np.asarray(masses, dtype=np.float64)
    if m.size == 0:
        return 0.0
    d = np.asarray(dists, dtype=np.float64)
    p_y = m @ d if marginal is None else np.asarray(marginal, dtype=np.float64)
    return float(np.sum(m * rel_entr(d, p_y[None, :]).sum(axis=1)))


def merge_weight(mass_i: float, dist_i, mass_j: float, dist_j) -> float:
    """(mass_i + mass_j) times the mass-weighted Jensen-Shannon divergence.

    Bit-identical distributions cost exactly 0.0 (the mixture arithmetic
    would otherwise leave ~1-ulp dust whose ordering depends on the mass
    scale, breaking deterministic tie-breaking).
    """
    if np.array_equal(dist_i, dist_j):
        return 0.0
    total = mass_i + mass_j
    # both priors divided the same way keeps the result bitwise symmetric in
    # the argument order, so exact ties stay exact at every mass scale
    pi = mass_i / total
    pj = mass_j / total
    mix = pi * dist_i + pj * dist_j
    js = pi * float(rel_entr(dist_i, mix).sum()) + pj * float(rel_entr(dist_j, mix).sum())
    return total * js


def merge_delta(weight: float, total_info: float) -> float:
    """Fractional information loss of a merge; 0 when the total is ~zero."""
    if total_info < _INFO_FLOOR:
        return 0.0
    return weight / total_info


def component_delta(weight: float, comp_size: int, total_size: int, total_info: float) -> float:
    """Fractional loss of a within-component merge on the global scale.

    ``weight`` must come from masses uniform within the component; scaling
    by comp_size/total_size recovers exactly the loss the same merge has
    when the whole graph is clustered at once.
    """
    if total_info < _INFO_FLOOR:
        return 0.0
    return (comp_size / total_size) * weight / total_info


def _mix_dists(mass_i: float, dist_i, mass_j: float, dist_j, total: float):
    if np.array_equal(dist_i, dist_j):
        return dist_i  # keep mixtures of equal distributions bit-exact
    return (mass_i * dist_i + mass_j * dist_j) / total


def merge_clusters(a: Cluster, b: Cluster) -> Cluster:
    """Combine two disjoint clusters: masses add, distributions mix by mass."""
    if a.members & b.members:
        raise OverlappingMembers(
            f"clusters share members: {sorted(a.members & b.members)}"
        )
    mass = a.mass + b.mass
    emb_sum = a.embedding_sum + b.embedding_sum
    return Cluster(
        members=a.members | b.members,
        mass=mass,
        dist=_mix_dists(a.mass, a.dist, b.mass, b.dist, mass),
        embedding=unit_vector(emb_sum),
        bbox=bbox_hull([a.bbox, b.bbox]),
        embedding_sum=emb_sum,
    )


class MergeRecord(NamedTuple):
    """One committed merge: the two min-member ids, weight, and loss fraction."""

    i: int
    j: int
    weight: float
    delta: float


@dataclass(eq=False)
class ClusteringResult:
    """Hard assignment of primitives to clusters plus the merge audit trail.

    ``pending_min_weight`` is the weight of the cheapest merge that was
    peeked but refused (inf when every candidate was committed); the
    incremental engine uses it to decide when a stopped component must be
    re-clustered.
    """

    clusters: tuple[Cluster, ...]
    assignment: dict[int, int]
    merges_applied: tuple[MergeRecord, ...]
    info_initial: float
    info_final: float
    pending_min_weight: float = math.inf

    @property
    def partition(self) -> frozenset[frozenset[int]]:
        return frozenset(c.members for c in self.clusters)


def _empty_result() -> ClusteringResult:
    return ClusteringResult((), {}, (), 0.0, 0.0, math.inf)


def agglomerative_ib(
    graph: PrimitiveGraph,
    relevance: Mapping[int, np.ndarray],
    delta_bar: float,
    total_info: float | None = None,
    total_count: int | None = None,
) -> ClusteringResult:
    """Cluster a primitive graph by greedy minimum-loss merging.

    When ``total_info``/``total_count`` are given the graph is treated as one
    connected component of a larger problem: the stopping statistic becomes
    (n/total_count) * d / total_info, which reproduces the decisions a run
    over the full graph would make.
    """
    if not 0.0 <= delta_bar <= 1.0:
        raise TaskSceneError(f"delta_bar must lie in [0, 1], got {delta_bar}")
    ids = sorted(graph.nodes)
    n = len(ids)
    if n == 0:
        return _empty_result()
    missing = [pid for pid in ids if pid not in relevance]
    if missing:
        raise TaskSceneError(f"relevance missing for primitives {missing[:5]}")

    mass0 = 1.0 / n
    dists = np.stack([relevance[pid] for pid in ids])
    info_initial = mutual_information(np.full(n, mass0), dists)
    if total_info is None:
        denom_info, denom_count = info_initial, n
    else:
        denom_info, denom_count = total_info, int(total_count)

    # Lightweight slot state (full Cluster objects are built only at the
    # end); merged clusters take fresh slots so a heap entry is stale
    # exactly when one of its endpoint slots is no longer alive.
    masses: list[float] = []
    dist_of: list[np.ndarray] = []
    members: list[list[int]] = []
    minm: list[int] = []
    emb_sums: list[np.ndarray] = []
    bb_min: list[tuple] = []
    bb_max: list[tuple] = []
    alive: list[bool] = []
    adj: list[set[int]] = []
    slot_of: dict[int, int] = {}
    for pid in ids:
        p = graph.nodes[pid]
        slot_of[pid] = len(masses)
        masses.append(mass0)
        dist_of.append(relevance[pid])
        members.append([pid])
        minm.append(pid)
        emb_sums.append(np.array(p.embedding, dtype=np.float64))
        bb_min.append(tuple(p.bbox.mins))
        bb_max.append(tuple(p.bbox.maxs))
        alive.append(True)
        adj.append(set())

    heap: list[tuple[float, int, int, int, int]] = []
    for a, b in sorted(graph.edges):
        sa, sb = slot_of[a], slot_of[b]
        adj[sa].add(sb)
        adj[sb].add(sa)
        w = merge_weight(masses[sa], dist_of[sa], masses[sb], dist_of[sb])
        heap.append((w, a, b, sa, sb))
    heapq.heapify(heap)

    merges: list[MergeRecord] = []
    pending_min = math.inf
    while heap:
        w, i, j, sa, sb = heapq.heappop(heap)
        if not (alive[sa] and alive[sb]):
            continue
        delta = component_delta(w, n, denom_count, denom_info)
        if not delta < delta_bar:
            pending_min = w
            break
        ns = len(masses)
        mass = masses[sa] + masses[sb]
        masses.append(mass)
        dist_of.append(_mix_dists(masses[sa], dist_of[sa], masses[sb], dist_of[sb], mass))
        members.append(members[sa] + members[sb])
        minm.append(min(minm[sa], minm[sb]))
        emb_sums.append(emb_sums[sa] + emb_sums[sb])
        bb_min.append(tuple(map(min, bb_min[sa], bb_min[sb])))
        bb_max.append(tuple(map(max, bb_max[sa], bb_max[sb])))
        alive.append(True)
        alive[sa] = alive[sb] = False
        neighbors = (adj[sa] | adj[sb]) - {sa, sb}
        adj.append(set())
        for x in neighbors:
            if not alive[x]:
                continue
            adj[x].discard(sa)
            adj[x].discard(sb)
            adj[x].add(ns)
            adj[ns].add(x)
            w2 = merge_weight(masses[ns], dist_of[ns], masses[x], dist_of[x])
            ii, jj = (minm[ns], minm[x]) if minm[ns] < minm[x] else (minm[x], minm[ns])
            heapq.heappush(heap, (w2, ii, jj, ns, x))
        merges.append(MergeRecord(i, j, w, delta))

    final_slots = sorted(
        (s for s in range(len(masses)) if alive[s]), key=lambda s: minm[s]
    )
    final = tuple(
        Cluster(
            members=frozenset(members[s]),
            mass=masses[s],
            dist=dist_of[s],
            embedding=unit_vector(emb_sums[s]),
            bbox=Aabb3(bb_min[s], bb_max[s]),
            embedding_sum=emb_sums[s],
        )
        for s in final_slots
    )
    assignment = {pid: idx for idx, c in enumerate(final) for pid in c.members}
    info_final = mutual_information(
        np.array([c.mass for c in final]), np.stack([c.dist for c in final])
    )
    return ClusteringResult(
        clusters=final,
        assignment=assignment,
        merges_applied=tuple(merges),
        info_initial=info_initial,
        info_final=info_final,
        pending_min_weight=pending_min,
    )
