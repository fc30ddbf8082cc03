import io

import networkx as nx
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from specwalk.graph import (Graph, GraphFormatError, LabeledNodes, connected_component,
                            khop_vertices, load_edge_list, n_test_edges, read_labels,
                            read_node_split, read_split, split_edges, stratified_node_split,
                            write_edge_list, write_node_split, write_split)

from conftest import from_nx, random_graph


def load(text):
    return load_edge_list(io.StringIO(text))


class TestLoadEdgeList:
    def test_duplicates_and_loops_dropped(self):
        g = load("0 1\n1 0\n1 1\n")
        assert (g.n, g.m) == (2, 1)
        assert g.load_stats.duplicates == 1
        assert g.load_stats.self_loops == 1

    def test_comments_blank_lines_and_extra_columns(self):
        g = load("# header\n\n0 1 0.5\n% other\n1 2\n")
        assert (g.n, g.m) == (3, 2)

    def test_string_ids_in_order_of_appearance(self):
        g = load("b a\na c\n")
        assert g.ids == ("b", "a", "c")
        assert g.has_edge(0, 1) and g.has_edge(1, 2) and not g.has_edge(0, 2)

    def test_integer_ids_sorted_numerically(self):
        g = load("10 2\n2 7\n")
        assert g.ids == ("2", "7", "10")

    def test_malformed_line_reports_line_number(self):
        with pytest.raises(GraphFormatError, match="line 3"):
            load("0 1\n# ok\n5\n")

    def test_empty_graph_rejected(self):
        with pytest.raises(GraphFormatError):
            load("# nothing here\n")

    def test_bytes_source(self):
        assert load_edge_list(b"0 1\n1 2\n").m == 2

    def test_round_trip(self, tmp_path, karate):
        path = tmp_path / "k.txt"
        write_edge_list(karate, path)
        again = load_edge_list(path)
        assert again == karate
        np.testing.assert_array_equal(again.indices, karate.indices)


class TestGraph:
    @given(st.integers(2, 30), st.floats(0.05, 0.6), st.integers(0, 10_000))
    def test_invariants(self, n, p, seed):
        g = random_graph(n, p, seed)
        assert g.degrees.sum() == 2 * g.m
        for u in range(g.n):
            nb = g.neighbors(u)
            assert np.all(np.diff(nb) > 0)
            assert u not in nb
            for v in nb:
                assert u in g.neighbors(v)

    def test_from_edges_dedups(self):
        g = Graph.from_edges(3, [(0, 1), (1, 0), (2, 2), (1, 2)])
        assert g.m == 2

    def test_edges_are_canonical(self, karate):
        e = karate.edges()
        assert np.all(e[:, 0] < e[:, 1])
        assert len(e) == karate.m

    def test_digest_depends_on_edges(self, triangle, path3):
        assert triangle.digest() != path3.digest()
        assert triangle.digest() == Graph.from_edges(3, [(2, 0), (1, 0), (2, 1)]).digest()


class TestKhop:
    def test_path_full_reach(self, path3):
        assert khop_vertices(path3, 0, 2, 10) == [0, 1, 2]

    def test_star_cap(self):
        g = from_nx(nx.star_graph(5))
        assert khop_vertices(g, 0, 1, 4) == [0, 1, 2, 3]

    def test_cap_one(self, karate):
        assert all(khop_vertices(karate, v, 2, 1) == [v] for v in range(karate.n))

    def test_isolated(self):
        g = Graph.from_edges(3, [(0, 1)])
        assert khop_vertices(g, 2, 2, 30) == [2]

    def test_rings_sorted_by_id(self):
        # v=0, ring 1 = {5, 3}, ring 2 = {4, 1}
        g = Graph.from_edges(6, [(0, 5), (0, 3), (5, 4), (3, 1)])
        assert khop_vertices(g, 0, 2, 10) == [0, 3, 5, 1, 4]

    @given(st.integers(2, 25), st.floats(0.05, 0.4), st.integers(0, 10_000))
    def test_unbounded_is_component(self, n, p, seed):
        g = random_graph(n, p, seed)
        for v in range(0, g.n, 3):
            got = khop_vertices(g, v, g.n, 10 ** 9)
            assert set(got) == connected_component(g, v)
            assert got[0] == v


class TestSplit:
    def test_test_edge_count_rounding(self):
        # 0.1 * 2126 = 212.6
        assert n_test_edges(2126, 0.1) == 213
        assert n_test_edges(2148, 0.1) == 215
        assert n_test_edges(2126, 0.5) == 1063

    def test_triangle(self):
        # a bare triangle has no non-edges; three spare vertices supply them
        g = Graph.from_edges(6, [(0, 1), (1, 2), (0, 2)])
        s = split_edges(g, 0.33, seed=0)
        assert len(s.test_pos) == 1 and len(s.train_pos) == 2
        assert n_test_edges(3, 0.33) == 1

    def test_bare_triangle_is_too_dense(self, triangle):
        with pytest.raises(ValueError, match="too dense"):
            split_edges(triangle, 0.33, seed=0)

    def test_too_dense(self, k4):
        with pytest.raises(ValueError):
            split_edges(k4, 0.25, seed=0)

    @given(st.integers(12, 40), st.floats(0.1, 0.35), st.integers(0, 1000),
           st.sampled_from([0.1, 0.25, 0.5]))
    def test_invariants(self, n, p, seed, frac):
        g = random_graph(n, p, seed)
        if g.m < 4:
            return
        s = split_edges(g, frac, seed)
        keys = lambda a: {tuple(sorted(map(int, e))) for e in a}
        pos = keys(s.train_pos) | keys(s.test_pos)
        assert pos == keys(g.edges())
        assert not keys(s.train_pos) & keys(s.test_pos)
        assert len(s.test_pos) == n_test_edges(g.m, frac)
        neg_tr, neg_te = keys(s.train_neg), keys(s.test_neg)
        assert len(neg_tr) == len(s.train_neg) and len(neg_te) == len(s.test_neg)
        assert not neg_tr & neg_te
        assert not (neg_tr | neg_te) & pos
        assert all(u != v for u, v in neg_tr | neg_te)
        assert len(s.train_neg) == len(s.train_pos)
        assert len(s.test_neg) == len(s.test_pos)

    def test_deterministic(self, karate):
        assert split_edges(karate, 0.1, 7) == split_edges(karate, 0.1, 7)

    def test_seed_changes_test_set(self):
        g = random_graph(80, 0.1, 1)
        assert g.m >= 100
        a, b = split_edges(g, 0.1, 1), split_edges(g, 0.1, 2)
        assert not np.array_equal(a.test_pos, b.test_pos)

    def test_file_round_trip_is_byte_identical(self, tmp_path, karate):
        s = split_edges(karate, 0.2, 3)
        p1, p2 = tmp_path / "a.txt", tmp_path / "b.txt"
        write_split(s, p1)
        again = read_split(p1)
        assert again == s and again.seed == 3
        write_split(again, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_isolated_training_vertices_reported(self):
        g = Graph.from_edges(5, [(0, 1), (1, 2), (2, 3), (3, 4), (0, 2)])
        counts = {split_edges(g, 0.4, s).isolated_train_vertices for s in range(30)}
        assert max(counts) >= 1

    def test_pairs(self, karate):
        s = split_edges(karate, 0.1, 0)
        X, y = s.test_pairs()
        assert X.shape == (2 * len(s.test_pos), 2)
        assert y.sum() == len(s.test_pos)


class TestLabels:
    def test_read_labels_and_stratified_split(self, tmp_path):
        g = load("a b\nb c\nc d\nd e\ne f\n")
        (tmp_path / "l.tsv").write_text("a\tx\nb\tx\nc\tx\nd\ty\ne\ty\nf\ty\nzz\ty\n")
        labels = read_labels(tmp_path / "l.tsv", g)
        assert labels == {0: "x", 1: "x", 2: "x", 3: "y", 4: "y", 5: "y"}
        nodes = stratified_node_split(labels, per_class=2, seed=0)
        assert len(nodes.train_ids) == 4 and len(nodes.test_ids) == 2
        assert sorted(labels[v] for v in nodes.train_ids) == ["x", "x", "y", "y"]
        write_node_split(nodes, tmp_path / "s.txt", g)
        assert read_node_split(tmp_path / "s.txt", labels, g) == nodes

    def test_overlap_rejected(self):
        with pytest.raises(ValueError):
            LabeledNodes({0: "a", 1: "b"}, (0, 1), (1,))

    def test_unlabeled_rejected(self):
        with pytest.raises(ValueError):
            LabeledNodes({0: "a"}, (0,), (1,))
