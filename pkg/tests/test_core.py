import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from taskscene.core import (
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
from taskscene.errors import DegenerateVector, DimensionMismatch, TaskSceneError

UNIT = Aabb3([0, 0, 0], [1, 1, 1])


def vectors(dim=3):
    return st.lists(
        st.floats(-10, 10, allow_nan=False), min_size=dim, max_size=dim
    ).filter(lambda v: sum(x * x for x in v) > 1e-6)


class TestUnitVector:
    def test_normalizes(self):
        v = unit_vector([3.0, 4.0])
        assert np.allclose(v, [0.6, 0.8])
        assert abs(np.linalg.norm(v) - 1.0) < 1e-6

    def test_rejects_zero(self):
        with pytest.raises(DegenerateVector):
            unit_vector([0.0, 0.0, 0.0])

    def test_rejects_nan(self):
        with pytest.raises(DegenerateVector):
            unit_vector([np.nan, 1.0])

    def test_idempotent_bitwise(self):
        v = unit_vector([0.3, -0.2, 0.9])
        again = unit_vector(v)
        assert again.tobytes() == v.tobytes()

    def test_read_only(self):
        v = unit_vector([1.0, 0.0])
        with pytest.raises(ValueError):
            v[0] = 2.0


class TestCosine:
    def test_identity(self):
        a = unit_vector([0.2, 0.5, -0.1])
        assert cosine_similarity(a, a) == pytest.approx(1.0)

    def test_orthogonal(self):
        assert cosine_similarity(unit_vector([1, 0]), unit_vector([0, 1])) == 0.0

    def test_dot_product_value(self):
        a = unit_vector([0.6, 0.8])
        b = unit_vector([1.0, 0.0])
        assert cosine_similarity(a, b) == pytest.approx(0.6, abs=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            cosine_similarity(unit_vector([1, 0]), unit_vector([1, 0, 0]))

    @given(vectors(), vectors())
    @settings(deadline=None)
    def test_symmetric(self, a, b):
        u, w = unit_vector(a), unit_vector(b)
        assert cosine_similarity(u, w) == cosine_similarity(w, u)
        assert -1.0 <= cosine_similarity(u, w) <= 1.0


class TestBoxes:
    def test_invalid_box(self):
        with pytest.raises(TaskSceneError):
            Aabb3([1, 0, 0], [0, 1, 1])

    def test_iou_identity(self):
        assert bbox_iou(UNIT, UNIT) == 1.0

    def test_iou_disjoint(self):
        far = Aabb3([5, 5, 5], [6, 6, 6])
        assert bbox_iou(UNIT, far) == 0.0

    def test_iou_half_shift(self):
        shifted = Aabb3([0.5, 0, 0], [1.5, 1, 1])
        assert bbox_iou(UNIT, shifted) == pytest.approx(1.0 / 3.0, abs=1e-12)

    def test_iou_degenerate(self):
        flat = Aabb3([0, 0, 0], [1, 1, 0])
        assert bbox_iou(flat, flat) == 0.0

    def test_overlap_identity(self):
        assert bbox_overlaps(UNIT, UNIT)

    def test_overlap_shared_face_is_false(self):
        touching = Aabb3([1, 0, 0], [2, 1, 1])
        assert not bbox_overlaps(UNIT, touching)

    def test_overlap_positive_volume(self):
        shifted = Aabb3([0.5, 0.5, 0.5], [1.5, 1.5, 1.5])
        assert bbox_overlaps(UNIT, shifted)

    @given(st.lists(st.tuples(vectors(3), vectors(3)), min_size=1, max_size=6))
    @settings(deadline=None)
    def test_hull_property(self, corners):
        boxes = [
            Aabb3(np.minimum(a, b), np.maximum(a, b)) for a, b in corners
        ]
        hull = bbox_hull(boxes)
        for box in boxes:
            assert np.all(hull.mins <= box.mins) and np.all(box.maxs <= hull.maxs)
        # every hull face is supported by some member box
        assert np.all(np.min([b.mins for b in boxes], axis=0) == hull.mins)
        assert np.all(np.max([b.maxs for b in boxes], axis=0) == hull.maxs)

    @given(st.tuples(vectors(3), vectors(3)), st.tuples(vectors(3), vectors(3)))
    @settings(deadline=None)
    def test_iou_symmetric(self, ca, cb):
        a = Aabb3(np.minimum(*ca), np.maximum(*ca))
        b = Aabb3(np.minimum(*cb), np.maximum(*cb))
        assert bbox_iou(a, b) == bbox_iou(b, a)
        assert 0.0 <= bbox_iou(a, b) <= 1.0


class TestMergeEmbedding:
    def test_single_vector(self):
        v = unit_vector([0.6, 0.8])
        assert np.array_equal(merge_embedding([(v, 2.0)]), v)

    def test_equal_vectors_any_weights(self):
        v = unit_vector([0.6, 0.8])
        merged = merge_embedding([(v, 1.0), (v, 5.0)])
        assert np.allclose(merged, v, atol=1e-12)

    def test_orthogonal_pair(self):
        merged = merge_embedding([(unit_vector([1, 0]), 1.0), (unit_vector([0, 1]), 1.0)])
        assert np.allclose(merged, [1 / np.sqrt(2), 1 / np.sqrt(2)], atol=1e-12)

    def test_cancellation_raises(self):
        with pytest.raises(DegenerateVector):
            merge_embedding([(unit_vector([1, 0]), 1.0), (unit_vector([-1, 0]), 1.0)])

    @given(
        st.lists(st.tuples(vectors(4), st.floats(0.1, 10)), min_size=1, max_size=5),
        st.floats(0.5, 20),
    )
    @settings(deadline=None)
    def test_weight_scale_invariance(self, pairs, scale):
        members = [(unit_vector(v), w) for v, w in pairs]
        try:
            base = merge_embedding(members)
        except DegenerateVector:
            return
        scaled = merge_embedding([(v, w * scale) for v, w in members])
        assert np.allclose(base, scaled, atol=1e-9)


class TestTaskSet:
    def test_rejects_empty(self):
        with pytest.raises(TaskSceneError):
            TaskSet((), np.zeros((0, 3)), 0.0, 1)

    def test_rejects_bad_k(self):
        with pytest.raises(TaskSceneError):
            TaskSet(("a",), np.eye(2)[:1], 0.0, 3)

    def test_normalizes_rows(self):
        ts = TaskSet(("a", "b"), np.array([[2.0, 0.0], [0.0, 0.5]]), 0.1, 1)
        assert np.allclose(np.linalg.norm(ts.embeddings, axis=1), 1.0)


class TestCluster:
    def test_requires_members(self):
        with pytest.raises(TaskSceneError):
            Cluster(frozenset(), 1.0, [1.0], [1.0, 0.0], UNIT)

    def test_from_primitive(self):
        p = Primitive(7, [1.0, 0.0], UNIT)
        c = Cluster.from_primitive(p, 0.5, np.array([0.2, 0.8]))
        assert c.members == {7} and c.mass == 0.5 and c.min_member == 7

    def test_bbox_hull_invariant(self):
        rng = np.random.default_rng(3)
        prims = []
        for i in range(6):
            lo = rng.uniform(0, 5, 3)
            prims.append(Primitive(i, rng.normal(size=4), Aabb3(lo, lo + rng.uniform(0.1, 2, 3))))
        hull = bbox_hull([p.bbox for p in prims])
        for p in prims:
            assert np.all(hull.mins <= p.bbox.mins) and np.all(p.bbox.maxs <= hull.maxs)


class TestPrimitiveGraph:
    def _prims(self):
        return [
            Primitive(0, [1.0, 0.0], Aabb3([0, 0, 0], [1, 1, 1])),
            Primitive(1, [1.0, 0.0], Aabb3([0.5, 0, 0], [1.5, 1, 1])),
            Primitive(2, [0.0, 1.0], Aabb3([5, 5, 5], [6, 6, 6])),
        ]

    def test_overlap_edges(self):
        graph = PrimitiveGraph.from_primitives(self._prims())
        assert graph.edges == {(0, 1)}
        assert graph.components == (frozenset({0, 1}), frozenset({2}))

    def test_edges_must_reference_nodes(self):
        with pytest.raises(TaskSceneError):
            PrimitiveGraph({0: self._prims()[0]}, [(0, 9)])

    def test_explicit_edges(self):
        graph = PrimitiveGraph.from_primitives(self._prims(), edges=[(0, 2)])
        assert graph.components == (frozenset({0, 2}), frozenset({1}))

    def test_components_match_edges_random(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            n = int(rng.integers(2, 15))
            prims = [
                Primitive(i, rng.normal(size=3), Aabb3(c := rng.uniform(0, 6, 3), c + rng.uniform(0.2, 2, 3)))
                for i in range(n)
            ]
            graph = PrimitiveGraph.from_primitives(prims)
            # brute-force reachability check
            import networkx as nx

            g = nx.Graph()
            g.add_nodes_from(graph.nodes)
            g.add_edges_from(graph.edges)
            expect = {frozenset(c) for c in nx.connected_components(g)}
            assert set(graph.components) == expect
            # edge predicate is exact pairwise overlap
            for i in range(n):
                for j in range(i + 1, n):
                    assert ((i, j) in graph.edges) == bbox_overlaps(prims[i].bbox, prims[j].bbox)
