import itertools

import numpy as np
import pytest

from mpmrf import (
    Tree,
    WeightedGraph,
    binary_tree,
    build_tree,
    cayley_tree,
    kruskal_mst,
    path_between,
    path_tree,
    root_tree,
    star_tree,
)
from mpmrf.errors import (
    CycleOrDisconnectedError,
    DisconnectedError,
    DuplicateEdgeError,
    InvalidDegreeError,
    VertexOutOfRangeError,
)

# 7-vertex tree used throughout: 1-{2,3}, 3-{4,5}, 4-{6,7}
SEVEN = [(1, 2), (1, 3), (3, 4), (3, 5), (4, 6), (4, 7)]


class TestBuildTree:
    def test_path_on_three(self):
        t = build_tree(3, [(1, 2), (2, 3)])
        assert t.num_vertices == 3
        assert t.edges == ((1, 2), (2, 3))

    def test_single_edge(self):
        t = build_tree(2, [(1, 2)])
        assert t.edges == ((1, 2),)

    def test_cycle_rejected(self):
        with pytest.raises(CycleOrDisconnectedError):
            build_tree(3, [(1, 2), (2, 3), (1, 3)])

    def test_disconnected_rejected(self):
        with pytest.raises(CycleOrDisconnectedError):
            build_tree(4, [(1, 2), (2, 3), (1, 3)])

    def test_duplicate_edge(self):
        with pytest.raises(DuplicateEdgeError):
            build_tree(3, [(1, 2), (2, 1)])

    def test_self_loop(self):
        with pytest.raises(DuplicateEdgeError):
            build_tree(2, [(1, 1)])

    def test_vertex_out_of_range(self):
        with pytest.raises(VertexOutOfRangeError):
            build_tree(2, [(1, 5)])


class TestRootTree:
    def test_filial_relations(self):
        r = root_tree(build_tree(7, SEVEN), 1)
        assert r.parent[3] == 1
        assert set(r.children[3]) == {4, 5}
        assert r.descendants[3] == frozenset({4, 5, 6, 7})

    def test_path_rooted_in_middle(self):
        r = root_tree(build_tree(3, [(1, 2), (2, 3)]), 2)
        assert set(r.children[2]) == {1, 3}
        assert r.descendants[2] == frozenset({1, 3})

    def test_single_edge_rooted_at_two(self):
        r = root_tree(build_tree(2, [(1, 2)]), 2)
        assert r.parent[1] == 2

    def test_topo_order_parents_first(self):
        r = root_tree(build_tree(7, SEVEN), 4)
        pos = {v: i for i, v in enumerate(r.topo_order)}
        for v, p in r.parent.items():
            assert pos[p] < pos[v]

    def test_descendants_of_root_cover_tree(self):
        r = root_tree(build_tree(7, SEVEN), 5)
        assert r.descendants[5] | {5} == set(range(1, 8))

    def test_bad_root(self):
        with pytest.raises(VertexOutOfRangeError):
            root_tree(build_tree(2, [(1, 2)]), 3)

    def test_edge_set_invariant_under_rooting(self):
        t = build_tree(7, SEVEN)
        for r in range(1, 8):
            rooted = root_tree(t, r)
            recovered = {tuple(sorted((v, p))) for v, p in rooted.parent.items()}
            assert recovered == set(t.edges)


class TestPathBetween:
    def test_seven_vertex_path(self):
        t = build_tree(7, SEVEN)
        assert path_between(t, 2, 5) == [(2, 1), (1, 3), (3, 5)]

    def test_same_vertex(self):
        t = build_tree(3, [(1, 2), (2, 3)])
        assert path_between(t, 2, 2) == []

    def test_single_edge(self):
        t = build_tree(2, [(1, 2)])
        assert path_between(t, 1, 2) == [(1, 2)]

    def test_triangle_equality(self):
        t = build_tree(7, SEVEN)
        # 3 lies on the path from 2 to 6
        assert len(path_between(t, 2, 6)) == len(path_between(t, 2, 3)) + len(
            path_between(t, 3, 6)
        )


class TestKruskal:
    def test_two_largest_weights(self):
        w = np.zeros((3, 3))
        w[0, 1] = w[1, 0] = 0.6
        w[0, 2] = w[2, 0] = 0.5
        w[1, 2] = w[2, 1] = 0.4
        t = kruskal_mst(WeightedGraph(3, w))
        assert set(t.edges) == {(1, 2), (1, 3)}

    def test_equal_weights_deterministic(self):
        w = np.ones((4, 4))
        t1 = kruskal_mst(WeightedGraph(4, w))
        t2 = kruskal_mst(WeightedGraph(4, w.copy()))
        assert t1.edges == t2.edges == ((1, 2), (1, 3), (1, 4))

    def test_disconnected(self):
        w = np.full((3, 3), -np.inf)
        with pytest.raises(DisconnectedError):
            kruskal_mst(WeightedGraph(3, w))

    def test_maximality_exhaustive_small(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            d = 5
            w = rng.uniform(size=(d, d))
            w = (w + w.T) / 2
            best = kruskal_mst(WeightedGraph(d, w))

            def weight(edges):
                return sum(w[u - 1, v - 1] for u, v in edges)

            all_edges = list(itertools.combinations(range(1, d + 1), 2))
            for cand in itertools.combinations(all_edges, d - 1):
                try:
                    build_tree(d, cand)
                except Exception:
                    continue
                assert weight(best.edges) >= weight(cand) - 1e-12


class TestGenerators:
    def test_cayley_small(self):
        assert cayley_tree(3, 1).num_vertices == 4
        assert cayley_tree(3, 2).num_vertices == 10  # 1 + 3 + 6

    def test_cayley_degree_two_is_path(self):
        for k in range(4):
            assert cayley_tree(2, k).num_vertices == 2 * k + 1

    def test_cayley_vertex_count_formula(self):
        for chi in (3, 4):
            for depth in range(4):
                expected = 1 + chi * (((chi - 1) ** depth - 1) // (chi - 2))
                assert cayley_tree(chi, depth).num_vertices == expected

    def test_cayley_invalid(self):
        with pytest.raises(InvalidDegreeError):
            cayley_tree(1, 2)

    def test_star(self):
        s = star_tree(31)
        assert s.num_vertices == 31
        assert len(s.children[1]) == 30
        assert all(not s.children[v] for v in range(2, 32))

    def test_binary(self):
        assert binary_tree(4).num_vertices == 31
        assert binary_tree(0).num_vertices == 1

    def test_path_tree(self):
        t = path_tree(4)
        assert t.edges == ((1, 2), (2, 3), (3, 4))


class TestSerialization:
    def test_csv_round_trip(self, tmp_path):
        t = build_tree(7, SEVEN)
        path = tmp_path / "tree.csv"
        t.to_csv(path)
        assert path.read_text().splitlines()[0] == "u,v"
        assert Tree.from_csv(path) == t
