"""End-to-end flows shared by the command line, tests, and demos."""

from __future__ import annotations

import time
from typing import Iterator, Sequence

from .core import Primitive, PrimitiveGraph, TaskSet
from .ib import ClusteringResult, agglomerative_ib
from .incremental import IncrementalState, insert_primitives
from .relevance import relevance_matrix
from .tracker import SegmentObservation, SegmentTracker


def batch_cluster(
    primitives: Sequence[Primitive], tasks: TaskSet, delta_bar: float
) -> tuple[ClusteringResult, set[int]]:
    """Relevance, pre-pruning, overlap-graph build, and one batch clustering."""
    dists, pruned = relevance_matrix(primitives, tasks)
    kept = [p for p in primitives if p.id not in pruned]
    graph = PrimitiveGraph.from_primitives(kept)
    return agglomerative_ib(graph, dists, delta_bar), pruned


def frame_groups(
    observations: Sequence[SegmentObservation],
) -> Iterator[tuple[int, float, list[SegmentObservation]]]:
    """Consecutive observations sharing a frame id, with the frame's max stamp."""
    group: list[SegmentObservation] = []
    for obs in observations:
        if group and obs.frame != group[0].frame:
            yield group[0].frame, max(o.stamp for o in group), group
            group = []
        group.append(obs)
    if group:
        yield group[0].frame, max(o.stamp for o in group), group


def stream_cluster(
    observations: Sequence[SegmentObservation],
    tasks: TaskSet,
    delta_bar: float,
    theta_track: float,
    gamma_iou: float,
    tau_seconds: float,
) -> tuple[IncrementalState, SegmentTracker, list[dict]]:
    """Track, finalize, prune and insert frame by frame; one log row per insert."""
    tracker = SegmentTracker(theta_track, gamma_iou, tau_seconds)
    state = IncrementalState()
    rows: list[dict] = []

    def ingest(frame: int, stamp: float, finished: list[Primitive], flush: bool) -> None:
        start = time.perf_counter()
        changed: set[int] = set()
        pruned: set[int] = set()
        if finished:
            dists, pruned = relevance_matrix(finished, tasks)
            batch = [p for p in finished if p.id not in pruned]
            if batch:
                changed = insert_primitives(state, batch, dists, delta_bar)
        rows.append(
            {
                "frame": frame,
                "stamp": stamp,
                "finished_tracks": len(finished),
                "pruned": len(pruned),
                "inserted": len(finished) - len(pruned),
                "reclustered_components": len(changed),
                "seconds": time.perf_counter() - start,
                "flush": flush,
            }
        )

    last_frame, last_stamp = -1, 0.0
    for frame, stamp, group in frame_groups(observations):
        finished = tracker.expire(stamp)
        for obs in group:
            tracker.observe(obs)
        ingest(frame, stamp, finished, flush=False)
        last_frame, last_stamp = frame, stamp
    ingest(last_frame, last_stamp, tracker.flush(), flush=True)
    return state, tracker, rows
