import numpy as np
import pytest

from hdse.coarsen import (Hierarchy, Partition, ProjectionMatrix,
                          build_coarse_graph, build_hierarchy,
                          composed_projection, edge_betweenness,
                          girvan_newman, heavy_edge_matching, hierarchy_from_json,
                          hierarchy_to_json, louvain, modularity)
from hdse.graph import GraphValidationError, make_graph


def two_cliques_bridge(k=4):
    edges = [(i, j) for i in range(k) for j in range(i + 1, k)]
    edges += [(k + i, k + j) for i in range(k) for j in range(i + 1, k)]
    edges.append((0, k))
    return make_graph(2 * k, edges)


def all_partitions(n):
    """Enumerate every set partition of range(n) as an assignment array."""
    def rec(i, assign, num):
        if i == n:
            yield np.array(assign), num
            return
        for c in range(num + 1):
            assign.append(c)
            yield from rec(i + 1, assign, max(num, c + 1))
            assign.pop()
    yield from rec(0, [], 0)


def best_modularity_partition(g):
    best_q, best_a = -np.inf, None
    for assign, num in all_partitions(g.num_nodes):
        q = modularity(g, Partition(assign, num))
        if q > best_q:
            best_q, best_a = q, assign.copy()
    return best_q, best_a


class TestLouvain:
    def test_two_cliques_recovered(self):
        g = two_cliques_bridge(4)
        p = louvain(g, seed=0)
        # oracle: exhaustive max-modularity over all partitions of 8 nodes
        best_q, best_a = best_modularity_partition(g)
        assert p.num_clusters == 2
        assert np.array_equal(p.assign, Partition.from_assignment(best_a).assign)
        assert modularity(g, p) == pytest.approx(best_q)

    def test_edgeless_graph_singletons(self):
        g = make_graph(5, [])
        p = louvain(g, seed=0)
        assert p.num_clusters == 5

    def test_six_cycle_nonnegative_modularity(self):
        g = make_graph(6, [(i, (i + 1) % 6) for i in range(6)])
        p = louvain(g, seed=0)
        best_q, _ = best_modularity_partition(g)
        q = modularity(g, p)
        assert q >= 0.0
        assert q <= best_q + 1e-12

    def test_beats_singleton_partition(self):
        g = two_cliques_bridge(4)
        singletons = Partition(np.arange(8), 8)
        assert modularity(g, louvain(g, seed=3)) >= modularity(g, singletons)

    def test_deterministic_per_seed(self):
        rng = np.random.default_rng(5)
        edges = [(i, j) for i in range(14) for j in range(i + 1, 14)
                 if rng.random() < 0.3]
        g = make_graph(14, edges)
        first = louvain(g, seed=42)
        for _ in range(10):
            again = louvain(g, seed=42)
            assert np.array_equal(first.assign, again.assign)

    def test_empty_graph_rejected(self):
        with pytest.raises(GraphValidationError):
            louvain(make_graph(0, []), seed=0)


class TestGirvanNewman:
    def test_barbell_bridge_removed_first(self):
        g = two_cliques_bridge(5)
        # oracle: the bridge has strictly maximal betweenness
        adj = [set(map(int, g.neighbors(v))) for v in range(g.num_nodes)]
        bet = edge_betweenness(g.num_nodes, adj)
        assert max(bet, key=bet.get) == (0, 5)
        p = girvan_newman(g, target=2)
        assert p.num_clusters == 2
        assert len(set(p.assign[:5])) == 1
        assert len(set(p.assign[5:])) == 1

    def test_triangle_target_one(self):
        g = make_graph(3, [(0, 1), (1, 2), (0, 2)])
        p = girvan_newman(g, target=1)
        assert p.num_clusters == 1

    def test_target_too_large(self):
        with pytest.raises(GraphValidationError):
            girvan_newman(make_graph(3, [(0, 1)]), target=4)

    def test_modularity_peak_beats_trivial(self):
        g = two_cliques_bridge(4)
        p = girvan_newman(g, target=None)
        trivial = Partition(np.zeros(8, dtype=np.int64), 1)
        assert modularity(g, p) >= modularity(g, trivial)

    def test_dodecahedron_peak_has_adjacent_clusters(self):
        from hdse.refine import dodecahedron_graph
        g = dodecahedron_graph()
        p = girvan_newman(g, target=None)
        # golden values from tracing the deterministic removal sequence
        assert p.num_clusters == 4
        assert sorted(np.bincount(p.assign).tolist()) == [5, 5, 5, 5]
        edges = g.edge_array()
        assert np.any(p.assign[edges[:, 0]] != p.assign[edges[:, 1]])

    def test_betweenness_star_center(self):
        # star: every 2-path crosses the center, betweenness of each spoke
        # is 1 (endpoint pair) + (k-1) halves-free shortest paths
        g = make_graph(5, [(0, i) for i in range(1, 5)])
        adj = [set(map(int, g.neighbors(v))) for v in range(5)]
        bet = edge_betweenness(5, adj)
        for e, b in bet.items():
            assert b == pytest.approx(4.0)  # 1 + 3 paths through the spoke


class TestHeavyEdgeMatching:
    def test_p4_half(self):
        g = make_graph(4, [(0, 1), (1, 2), (2, 3)])
        p = heavy_edge_matching(g, 0.5)
        assert p.num_clusters == 2
        assert np.array_equal(p.assign, [0, 0, 1, 1])

    def test_edgeless_stays_singletons(self):
        g = make_graph(4, [])
        p = heavy_edge_matching(g, 0.25)
        assert p.num_clusters == 4

    def test_eight_cycle(self):
        g = make_graph(8, [(i, (i + 1) % 8) for i in range(8)])
        p = heavy_edge_matching(g, 0.5)
        assert p.num_clusters == 4
        assert np.array_equal(p.assign, [0, 0, 1, 1, 2, 2, 3, 3])

    def test_bad_ratio(self):
        g = make_graph(2, [(0, 1)])
        for ratio in (0.0, 1.0, -0.5, 2.0):
            with pytest.raises(GraphValidationError):
                heavy_edge_matching(g, ratio)


class TestCoarseGraph:
    def test_p3_two_clusters(self):
        g = make_graph(3, [(0, 1), (1, 2)])
        cg = build_coarse_graph(g, Partition(np.array([0, 0, 1]), 2))
        assert cg.num_nodes == 2
        assert cg.num_edges == 1

    def test_triangle_collapses_to_point(self):
        g = make_graph(3, [(0, 1), (1, 2), (0, 2)])
        cg = build_coarse_graph(g, Partition(np.zeros(3, dtype=np.int64), 1))
        assert cg.num_nodes == 1
        assert cg.num_edges == 0

    def test_clique_means(self):
        g = two_cliques_bridge(4)
        feats = np.arange(8, dtype=float)[:, None]
        g = make_graph(8, g.edge_array(), features=feats)
        p = Partition(np.array([0, 0, 0, 0, 1, 1, 1, 1]), 2)
        cg = build_coarse_graph(g, p)
        assert cg.num_nodes == 2
        assert cg.num_edges == 1
        np.testing.assert_allclose(cg.features, [[1.5], [5.5]])


class TestHierarchy:
    def test_zero_levels(self):
        g = two_cliques_bridge(4)
        h = build_hierarchy(g, "louvain", 0)
        assert len(h.levels) == 1
        assert not h.maps

    def test_louvain_two_level(self):
        h = build_hierarchy(two_cliques_bridge(4), "louvain", 1, seed=0)
        assert h.levels[1].num_nodes == 2

    def test_collapse_repeats_trivial_level(self):
        g = make_graph(2, [(0, 1)])
        h = build_hierarchy(g, "hem", 2, ratio=0.5)
        assert [lvl.num_nodes for lvl in h.levels] == [2, 1, 1]

    def test_unknown_algo(self):
        with pytest.raises(GraphValidationError):
            build_hierarchy(make_graph(2, [(0, 1)]), "spectral", 1)

    def test_projection_columns_orthonormal(self):
        rng = np.random.default_rng(0)
        for seed in range(5):
            edges = [(i, j) for i in range(20) for j in range(i + 1, 20)
                     if rng.random() < 0.2]
            g = make_graph(20, edges)
            h = build_hierarchy(g, "louvain", 2, seed=seed)
            for proj in h.projections:
                gram = proj.normalized.T @ proj.normalized
                np.testing.assert_allclose(gram, np.eye(gram.shape[0]),
                                           atol=1e-12)

    def test_surjectivity_and_coarse_edge_soundness(self):
        rng = np.random.default_rng(1)
        for algo in ("louvain", "newman", "hem"):
            edges = [(i, j) for i in range(15) for j in range(i + 1, 15)
                     if rng.random() < 0.25]
            g = make_graph(15, edges)
            h = build_hierarchy(g, algo, 2, seed=3)
            for k, part in enumerate(h.maps):
                assert set(part.assign.tolist()) == set(range(part.num_clusters))
                fine = h.levels[k].edge_array()
                for a, b in h.levels[k + 1].edge_array():
                    crossing = [(u, v) for u, v in fine
                                if {part.assign[u], part.assign[v]} == {a, b}]
                    assert crossing, f"coarse edge ({a},{b}) has no witness"

    def test_projected_features_follow_normalized_chain(self):
        g = two_cliques_bridge(4)
        feats = np.arange(8, dtype=float)[:, None]
        g = make_graph(8, g.edge_array(), features=feats)
        h = build_hierarchy(g, "louvain", 1, seed=0)
        expected = h.projections[0].normalized.T @ feats
        np.testing.assert_allclose(h.projected_features[1], expected)
        # coarse Graph itself carries the plain mean
        np.testing.assert_allclose(
            h.levels[1].features * np.sqrt(h.projections[0].cluster_sizes)[:, None],
            expected)


class TestComposedProjection:
    def make_three_level(self):
        g = make_graph(8, [(i, i + 1) for i in range(7)])
        return build_hierarchy(g, "hem", 2, ratio=0.5)

    def test_level_one_is_first_projection(self):
        h = self.make_three_level()
        np.testing.assert_array_equal(composed_projection(h, 1).raw,
                                      h.projections[0].raw)

    def test_level_two_composes_assignments(self):
        h = self.make_three_level()
        proj = composed_projection(h, 2)
        composed = h.maps[1].assign[h.maps[0].assign]
        assert np.all(proj.raw.sum(axis=1) == 1)
        np.testing.assert_array_equal(np.argmax(proj.raw, axis=1), composed)

    def test_trivial_middle_level(self):
        g = make_graph(2, [(0, 1)])
        h = build_hierarchy(g, "hem", 2, ratio=0.5)
        proj = composed_projection(h, 2)
        assert np.all(np.argmax(proj.raw, axis=1) == 0)

    def test_out_of_range(self):
        h = self.make_three_level()
        for c in (0, 3):
            with pytest.raises(GraphValidationError):
                composed_projection(h, c)


def test_hierarchy_json_roundtrip():
    g = make_graph(8, [(i, (i + 1) % 8) for i in range(8)],
                   features=np.eye(8)[:, :3])
    h = build_hierarchy(g, "louvain", 2, seed=9)
    h2 = hierarchy_from_json(hierarchy_to_json(h))
    assert [lvl.num_nodes for lvl in h2.levels] == \
        [lvl.num_nodes for lvl in h.levels]
    for a, b in zip(h.maps, h2.maps):
        assert np.array_equal(a.assign, b.assign)
    assert h2.algo == h.algo and h2.seed == h.seed
