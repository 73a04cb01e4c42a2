"""Temporal association of per-frame segment observations into tracks.

A new observation joins the candidate track with the highest box IoU among
tracks passing both gates (embedding cosine >= theta_track and IoU >=
gamma); otherwise it starts a new track.  A track silent for more than tau
seconds is finalized into a primitive whose embedding is the re-normalized
mean of its observation embeddings and whose box is the hull.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Aabb3, Primitive, bbox_hull, bbox_iou, cosine_similarity, unit_vector


@dataclass(eq=False)
class SegmentObservation:
    frame: int
    stamp: float
    embedding: np.ndarray
    bbox: Aabb3

    def __post_init__(self):
        self.embedding = unit_vector(self.embedding)


@dataclass(eq=False)
class Track:
    id: int
    observations: list[SegmentObservation]
    last_stamp: float
    embedding_sum: np.ndarray
    bbox: Aabb3

    @property
    def mean_embedding(self) -> np.ndarray:
        """Running mean of the observation embeddings, re-normalized."""
        return unit_vector(self.embedding_sum)

    def add(self, obs: SegmentObservation) -> None:
        self.observations.append(obs)
        self.last_stamp = max(self.last_stamp, obs.stamp)
        self.embedding_sum = self.embedding_sum + obs.embedding
        self.bbox = bbox_hull([self.bbox, obs.bbox])


def match_track(
    tracks: list[Track], obs: SegmentObservation, theta_track: float, gamma: float
) -> int | None:
    """Id of the best candidate track, or None when no track passes the gates.

    Candidates need cosine(track mean, observation) >= theta_track and box
    IoU >= gamma; the highest IoU wins, ties going to the lowest track id.
    """
    best_id = None
    best_iou = -1.0
    for track in sorted(tracks, key=lambda t: t.id):
        if cosine_similarity(track.mean_embedding, obs.embedding) < theta_track:
            continue
        iou = bbox_iou(track.bbox, obs.bbox)
        if iou < gamma:
            continue
        if iou > best_iou:
            best_iou = iou
            best_id = track.id
    return best_id


def finalize_track(track: Track) -> Primitive:
    return Primitive(
        id=track.id,
        embedding=unit_vector(track.embedding_sum),
        bbox=track.bbox,
        stamp=track.last_stamp,
        support=len(track.observations),
    )


def expire_tracks(
    tracks: list[Track], now: float, tau: float
) -> tuple[list[Track], list[Primitive]]:
    """Split tracks into still-active ones and finished primitives.

    A track ends once now - last_stamp exceeds tau (strictly).
    """
    active: list[Track] = []
    finished: list[Primitive] = []
    for track in sorted(tracks, key=lambda t: t.id):
        if now - track.last_stamp > tau:
            finished.append(finalize_track(track))
        else:
            active.append(track)
    return active, finished


class SegmentTracker:
    """Stateful stream consumer wrapping the association and expiry rules."""

    def __init__(
        self,
        theta_track: float = 0.9,
        gamma_iou: float = 0.6,
        tau_seconds: float = 2.0,
        start_id: int = 0,
    ):
        self.theta_track = float(theta_track)
        self.gamma_iou = float(gamma_iou)
        self.tau_seconds = float(tau_seconds)
        self._next_id = int(start_id)
        self.tracks: list[Track] = []

    def observe(self, obs: SegmentObservation) -> int:
        """Associate one observation; returns the (possibly new) track id."""
        tid = match_track(self.tracks, obs, self.theta_track, self.gamma_iou)
        if tid is not None:
            next(t for t in self.tracks if t.id == tid).add(obs)
            return tid
        track = Track(
            id=self._next_id,
            observations=[obs],
            last_stamp=obs.stamp,
            embedding_sum=np.array(obs.embedding, dtype=np.float64),
            bbox=obs.bbox,
        )
        self._next_id += 1
        self.tracks.append(track)
        return track.id

    def expire(self, now: float) -> list[Primitive]:
        """Finalize tracks silent for more than tau seconds."""
        self.tracks, finished = expire_tracks(self.tracks, now, self.tau_seconds)
        return finished

    def flush(self) -> list[Primitive]:
        """Finalize every remaining track (end of stream)."""
        finished = [finalize_track(t) for t in sorted(self.tracks, key=lambda t: t.id)]
        self.tracks = []
        return finished
