import math

import numpy as np
import pytest
from scipy.stats import entropy as scipy_entropy

from reference import naive_agglomerative, random_instance, replay_information_losses
from taskscene.core import Aabb3, Cluster, Primitive, PrimitiveGraph
from taskscene.errors import OverlappingMembers, TaskSceneError
from taskscene.ib import (
    agglomerative_ib,
    merge_clusters,
    merge_delta,
    merge_weight,
    mutual_information,
)
from taskscene.relevance import relevance_matrix

BOX = Aabb3([0, 0, 0], [1, 1, 1])
LN2 = math.log(2.0)


def chain_graph(dists, overlap=0.5):
    """Primitives along a line, consecutive boxes overlapping."""
    prims = []
    for i in range(len(dists)):
        lo = np.array([i * overlap, 0.0, 0.0])
        prims.append(Primitive(i, np.eye(2)[i % 2], Aabb3(lo, lo + 1.0)))
    graph = PrimitiveGraph.from_primitives(prims)
    relevance = {i: np.asarray(d, dtype=np.float64) for i, d in enumerate(dists)}
    return graph, relevance


class TestMutualInformation:
    def test_identical_distributions(self):
        d = np.array([[0.3, 0.7]] * 4)
        assert mutual_information(np.full(4, 0.25), d) == pytest.approx(0.0, abs=1e-15)

    def test_binary_symmetric(self):
        d = np.array([[1.0, 0.0], [0.0, 1.0]])
        assert mutual_information([0.5, 0.5], d) == pytest.approx(LN2, abs=1e-12)

    def test_single_cluster(self):
        assert mutual_information([1.0], [[0.2, 0.8]]) == pytest.approx(0.0, abs=1e-15)

    def test_matches_entropy_formulation(self):
        # independent route: I = H(p_y) - sum_i m_i H(d_i)
        rng = np.random.default_rng(5)
        for _ in range(50):
            n, m = int(rng.integers(2, 12)), int(rng.integers(2, 6))
            d = rng.dirichlet(np.ones(m), size=n)
            masses = rng.dirichlet(np.ones(n))
            expect = scipy_entropy(masses @ d) - float(
                np.sum(masses * np.array([scipy_entropy(row) for row in d]))
            )
            assert mutual_information(masses, d) == pytest.approx(expect, abs=1e-9)

    def test_explicit_marginal(self):
        d = np.array([[1.0, 0.0], [0.0, 1.0]])
        marginal = np.array([0.5, 0.5])
        assert mutual_information([0.5, 0.5], d, marginal=marginal) == pytest.approx(LN2)


class TestMergeWeight:
    def test_identical_distributions(self):
        d = np.array([0.4, 0.6])
        assert merge_weight(0.3, d, 0.2, d) == pytest.approx(0.0, abs=1e-15)

    def test_symmetric_orthogonal(self):
        a, b = np.array([1.0, 0.0]), np.array([0.0, 1.0])
        assert merge_weight(0.5, a, 0.5, b) == pytest.approx(LN2, abs=1e-12)

    def test_asymmetric_masses(self):
        a, b = np.array([1.0, 0.0]), np.array([0.0, 1.0])
        expect = 0.75 * ((1 / 3) * math.log(3.0) + (2 / 3) * math.log(1.5))
        assert merge_weight(0.25, a, 0.5, b) == pytest.approx(expect, abs=1e-12)

    def test_equals_information_loss(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            m = int(rng.integers(2, 7))
            da, db = rng.dirichlet(np.ones(m)), rng.dirichlet(np.ones(m))
            ma, mb = rng.uniform(0.05, 0.5), rng.uniform(0.05, 0.5)
            rest_mass = 1.0 - ma - mb
            dc = rng.dirichlet(np.ones(m))
            before = mutual_information([ma, mb, rest_mass], np.stack([da, db, dc]))
            mixed = (ma * da + mb * db) / (ma + mb)
            after = mutual_information([ma + mb, rest_mass], np.stack([mixed, dc]))
            assert merge_weight(ma, da, mb, db) == pytest.approx(before - after, abs=1e-9)


class TestMergeDelta:
    def test_zero_weight(self):
        assert merge_delta(0.0, 1.0) == 0.0

    def test_total_loss(self):
        assert merge_delta(LN2, LN2) == pytest.approx(1.0)

    def test_degenerate_info(self):
        assert merge_delta(0.5, 1e-13) == 0.0


class TestMergeClusters:
    def _cluster(self, members, mass, dist, emb=(1.0, 0.0)):
        return Cluster(frozenset(members), mass, np.asarray(dist, float), np.asarray(emb), BOX)

    def test_equal_distributions(self):
        a = self._cluster({0}, 0.25, [0.3, 0.7])
        b = self._cluster({1}, 0.25, [0.3, 0.7])
        merged = merge_clusters(a, b)
        assert np.allclose(merged.dist, [0.3, 0.7], atol=1e-15)

    def test_weighted_mixture(self):
        a = self._cluster({0}, 0.25, [1.0, 0.0])
        b = self._cluster({1}, 0.25, [0.0, 1.0])
        merged = merge_clusters(a, b)
        assert merged.mass == pytest.approx(0.5)
        assert np.allclose(merged.dist, [0.5, 0.5], atol=1e-15)

    def test_order_independent(self):
        a = self._cluster({0, 2}, 0.4, [0.9, 0.1], emb=(0.6, 0.8))
        b = self._cluster({1}, 0.2, [0.2, 0.8], emb=(0.0, 1.0))
        ab, ba = merge_clusters(a, b), merge_clusters(b, a)
        assert ab.members == ba.members
        assert ab.mass == ba.mass
        assert np.array_equal(ab.dist, ba.dist)
        assert np.array_equal(ab.embedding, ba.embedding)
        assert np.array_equal(ab.bbox.mins, ba.bbox.mins)

    def test_overlap_rejected(self):
        a = self._cluster({0, 1}, 0.5, [1.0, 0.0])
        b = self._cluster({1, 2}, 0.5, [0.0, 1.0])
        with pytest.raises(OverlappingMembers):
            merge_clusters(a, b)

    def test_embedding_merge_is_associative(self):
        rng = np.random.default_rng(14)
        prims = [
            Cluster.from_primitive(
                Primitive(i, rng.normal(size=5), BOX), 0.25, np.array([0.5, 0.5])
            )
            for i in range(3)
        ]
        left = merge_clusters(merge_clusters(prims[0], prims[1]), prims[2])
        right = merge_clusters(prims[0], merge_clusters(prims[1], prims[2]))
        assert np.allclose(left.embedding, right.embedding, atol=1e-12)


class TestAgglomerativeLoop:
    def test_delta_zero_keeps_primitives(self):
        graph, rel = chain_graph([[1, 0], [1, 0], [0, 1], [0, 1]])
        result = agglomerative_ib(graph, rel, 0.0)
        assert len(result.clusters) == 4 and not result.merges_applied

    def test_delta_one_collapses_components(self):
        graph, rel = chain_graph([[0.6, 0.4], [0.5, 0.5], [0.4, 0.6], [0.55, 0.45]])
        result = agglomerative_ib(graph, rel, 1.0)
        assert len(result.clusters) == 1

    def test_chain_splits_at_boundary(self):
        graph, rel = chain_graph([[1, 0], [1, 0], [0, 1], [0, 1]])
        result = agglomerative_ib(graph, rel, 0.1)
        assert result.partition == frozenset(
            {frozenset({0, 1}), frozenset({2, 3})}
        )

    def test_empty_graph(self):
        result = agglomerative_ib(PrimitiveGraph({}, []), {}, 0.5)
        assert result.clusters == () and result.info_initial == 0.0

    def test_zero_info_any_positive_budget_merges_all(self):
        graph, rel = chain_graph([[0.5, 0.5]] * 4)
        assert len(agglomerative_ib(graph, rel, 0.01).clusters) == 1
        assert len(agglomerative_ib(graph, rel, 0.0).clusters) == 4

    def test_missing_relevance(self):
        graph, rel = chain_graph([[1, 0], [0, 1]])
        del rel[1]
        with pytest.raises(TaskSceneError):
            agglomerative_ib(graph, rel, 0.5)

    def test_budget_out_of_range(self):
        graph, rel = chain_graph([[1, 0], [0, 1]])
        with pytest.raises(TaskSceneError):
            agglomerative_ib(graph, rel, -0.1)
        with pytest.raises(TaskSceneError):
            agglomerative_ib(graph, rel, 1.5)

    def test_assignment_consistent(self):
        graph, rel = chain_graph([[0.7, 0.3]] * 5)
        result = agglomerative_ib(graph, rel, 0.5)
        for idx, c in enumerate(result.clusters):
            for pid in c.members:
                assert result.assignment[pid] == idx
        assert set(result.assignment) == set(graph.nodes)

    def test_clusters_are_connected(self):
        import networkx as nx

        rng = np.random.default_rng(21)
        for _ in range(10):
            prims, tasks = random_instance(rng, n_max=25, m_max=4)
            dists, pruned = relevance_matrix(prims, tasks)
            kept = [p for p in prims if p.id not in pruned]
            graph = PrimitiveGraph.from_primitives(kept)
            result = agglomerative_ib(graph, dists, 0.5)
            g = nx.Graph()
            g.add_nodes_from(graph.nodes)
            g.add_edges_from(graph.edges)
            for c in result.clusters:
                assert nx.is_connected(g.subgraph(c.members))

    def test_deterministic(self):
        rng = np.random.default_rng(22)
        prims, tasks = random_instance(rng, n_max=30, m_max=5)
        dists, pruned = relevance_matrix(prims, tasks)
        kept = [p for p in prims if p.id not in pruned]
        graph = PrimitiveGraph.from_primitives(kept)
        a = agglomerative_ib(graph, dists, 0.3)
        b = agglomerative_ib(graph, dists, 0.3)
        assert a.merges_applied == b.merges_applied
        assert a.info_initial == b.info_initial

    def test_info_non_increasing_and_telescoping(self):
        rng = np.random.default_rng(23)
        for _ in range(15):
            prims, tasks = random_instance(rng, n_max=30, m_max=5)
            dists, pruned = relevance_matrix(prims, tasks)
            kept = [p for p in prims if p.id not in pruned]
            if not kept:
                continue
            graph = PrimitiveGraph.from_primitives(kept)
            result = agglomerative_ib(graph, dists, 0.4)
            assert result.info_final <= result.info_initial + 1e-9
            lost = sum(m.weight for m in result.merges_applied)
            assert abs(result.info_initial - result.info_final - lost) <= 1e-9 * (
                1 + len(result.merges_applied)
            )

    def test_merge_loss_identity(self):
        rng = np.random.default_rng(24)
        for _ in range(10):
            prims, tasks = random_instance(rng, n_max=20, m_max=4)
            dists, pruned = relevance_matrix(prims, tasks)
            kept = [p for p in prims if p.id not in pruned]
            if not kept:
                continue
            graph = PrimitiveGraph.from_primitives(kept)
            result = agglomerative_ib(graph, dists, 0.6)
            losses = replay_information_losses(result, dists)
            for record, loss in zip(result.merges_applied, losses):
                assert abs(record.weight - loss) <= 1e-9

    def test_matches_naive_reference_bitwise(self):
        rng = np.random.default_rng(25)
        for _ in range(25):
            prims, tasks = random_instance(rng, n_max=12, m_max=4)
            dists, pruned = relevance_matrix(prims, tasks)
            kept = [p for p in prims if p.id not in pruned]
            graph = PrimitiveGraph.from_primitives(kept)
            delta_bar = float(rng.choice([0.001, 0.01, 0.1, 0.5, 1.0]))
            fast = agglomerative_ib(graph, dists, delta_bar)
            slow = naive_agglomerative(graph, dists, delta_bar)
            assert fast.merges_applied == slow.merges_applied
            assert fast.partition == slow.partition
            assert fast.pending_min_weight == slow.pending_min_weight
