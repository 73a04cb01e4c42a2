import numpy as np

from taskscene.core import Aabb3, bbox_iou, cosine_similarity
from taskscene.tracker import SegmentObservation, SegmentTracker, expire_tracks, match_track


def obs(frame, stamp, emb, lo, size=1.0):
    lo = np.asarray(lo, dtype=float)
    return SegmentObservation(frame, stamp, np.asarray(emb, float), Aabb3(lo, lo + size))


def tilted(angle):
    return [np.cos(angle), np.sin(angle)]


class TestAssociation:
    def test_passing_both_gates_associates(self):
        tracker = SegmentTracker(theta_track=0.9, gamma_iou=0.6)
        first = tracker.observe(obs(0, 0.0, [1, 0], [0, 0, 0]))
        # cosine ~0.95, IoU ~0.74
        second = tracker.observe(obs(1, 0.1, tilted(0.31), [0.1, 0, 0]))
        assert first == second
        assert cosine_similarity(
            tracker.tracks[0].mean_embedding, obs(1, 0.1, tilted(0.31), [0, 0, 0]).embedding
        ) >= 0.9

    def test_iou_gate_failure_creates_track(self):
        tracker = SegmentTracker(theta_track=0.9, gamma_iou=0.6)
        a = tracker.observe(obs(0, 0.0, [1, 0], [0, 0, 0]))
        # same embedding but IoU 1/3 < 0.6
        b = tracker.observe(obs(1, 0.1, [1, 0], [0.5, 0, 0]))
        assert a != b
        assert len(tracker.tracks) == 2

    def test_embedding_gate_failure_creates_track(self):
        tracker = SegmentTracker(theta_track=0.9, gamma_iou=0.6)
        a = tracker.observe(obs(0, 0.0, [1, 0], [0, 0, 0]))
        b = tracker.observe(obs(1, 0.1, [0, 1], [0, 0, 0]))
        assert a != b

    def test_greedy_highest_iou_wins(self):
        tracker = SegmentTracker(theta_track=0.5, gamma_iou=0.3)
        tracker.observe(obs(0, 0.0, [1, 0], [0, 0, 0]))
        tracker.observe(obs(0, 0.0, [1, 0], [0.6, 0, 0]))
        assert len(tracker.tracks) == 2
        probe = obs(1, 0.1, [1, 0], [0.5, 0, 0])
        ious = [bbox_iou(t.bbox, probe.bbox) for t in tracker.tracks]
        assert ious[1] > ious[0] > 0
        last = tracker.tracks[1].id
        assert tracker.observe(probe) == last

    def test_tie_breaks_to_lower_id(self):
        tracker = SegmentTracker(theta_track=0.5, gamma_iou=0.1)
        a = tracker.observe(obs(0, 0.0, [1, 0], [0, 0, 0]))
        b = tracker.observe(obs(0, 0.0, [1, 0], [0, 0, 1.5]))
        # probe overlaps both tracks with identical volume and IoU
        probe = obs(1, 0.1, [1, 0], [0, 0, 0.75])
        ious = [bbox_iou(t.bbox, probe.bbox) for t in tracker.tracks]
        assert ious[0] == ious[1] > 0.1
        tid = match_track(tracker.tracks, probe, 0.5, 0.1)
        assert tid == min(a, b)

    def test_candidate_enumeration_order_irrelevant(self):
        rng = np.random.default_rng(44)
        tracker = SegmentTracker(theta_track=0.5, gamma_iou=0.05)
        for i in range(6):
            tracker.observe(obs(0, 0.0, [1, 0], [0.35 * i, 0, 0]))
        probe = obs(1, 0.1, [1, 0], [0.9, 0, 0])
        expect = match_track(tracker.tracks, probe, 0.5, 0.05)
        for _ in range(5):
            shuffled = list(tracker.tracks)
            rng.shuffle(shuffled)
            assert match_track(shuffled, probe, 0.5, 0.05) == expect

    def test_unsatisfiable_threshold_isolates_everything(self):
        tracker = SegmentTracker(theta_track=1.0 + 1e-9, gamma_iou=0.0)
        for i in range(5):
            tracker.observe(obs(i, float(i) * 0.01, [1, 0], [0, 0, 0]))
        assert len(tracker.tracks) == 5

    def test_every_observation_lands_in_one_track(self):
        rng = np.random.default_rng(41)
        tracker = SegmentTracker(theta_track=0.8, gamma_iou=0.3)
        total = 0
        for i in range(60):
            emb = rng.normal(size=4)
            lo = rng.uniform(0, 6, size=3)
            tracker.observe(obs(i // 4, i * 0.05, emb, lo))
            total += 1
        assert sum(len(t.observations) for t in tracker.tracks) == total


class TestExpiry:
    def test_expires_after_tau(self):
        tracker = SegmentTracker(tau_seconds=1.0)
        tracker.observe(obs(0, 10.0, [1, 0], [0, 0, 0]))
        assert tracker.expire(10.5) == []
        finished = tracker.expire(11.0 + 1e-6)
        assert len(finished) == 1
        assert tracker.tracks == []

    def test_fresh_track_retained(self):
        tracker = SegmentTracker(tau_seconds=1.0)
        tracker.observe(obs(0, 10.0, [1, 0], [0, 0, 0]))
        assert tracker.expire(10.0) == []
        assert len(tracker.tracks) == 1

    def test_finalized_embedding_is_mean(self):
        tracker = SegmentTracker(theta_track=0.0, gamma_iou=0.0, tau_seconds=1.0)
        tracker.observe(obs(0, 0.0, [1, 0], [0, 0, 0]))
        tracker.observe(obs(1, 0.1, [0, 1], [0, 0, 0]))
        (p,) = tracker.flush()
        assert np.allclose(p.embedding, [1 / np.sqrt(2), 1 / np.sqrt(2)], atol=1e-12)
        assert p.support == 2
        assert p.stamp == 0.1

    def test_finalized_bbox_contains_observations(self):
        rng = np.random.default_rng(42)
        tracker = SegmentTracker(theta_track=-1.0, gamma_iou=0.0)
        boxes = []
        for i in range(8):
            lo = rng.uniform(0, 2, size=3)
            o = obs(i, i * 0.01, [1, 0], lo, size=float(rng.uniform(0.5, 2)))
            boxes.append(o.bbox)
            tracker.observe(o)
        (p,) = tracker.flush()
        for box in boxes:
            assert np.all(p.bbox.mins <= box.mins) and np.all(box.maxs <= p.bbox.maxs)

    def test_out_of_order_within_window(self):
        tracker = SegmentTracker(theta_track=0.5, gamma_iou=0.1, tau_seconds=2.0)
        a = tracker.observe(obs(0, 10.0, [1, 0], [0, 0, 0]))
        b = tracker.observe(obs(1, 9.5, [1, 0], [0.05, 0, 0]))  # late arrival
        assert a == b
        assert tracker.tracks[0].last_stamp == 10.0

    def test_expire_tracks_function(self):
        tracker = SegmentTracker(tau_seconds=0.5)
        tracker.observe(obs(0, 0.0, [1, 0], [0, 0, 0]))
        tracker.observe(obs(1, 2.0, [0, 1], [5, 5, 5]))
        active, finished = expire_tracks(tracker.tracks, now=2.0, tau=0.5)
        assert [t.id for t in active] == [1]
        assert [p.id for p in finished] == [0]
