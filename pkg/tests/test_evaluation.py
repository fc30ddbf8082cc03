import networkx as nx
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from specwalk.evaluation import (DiagnosticReport, auc, bootstrap_confidence, cover_time,
                                 distance_quantile, eval_link_prediction,
                                 eval_node_classification, hitting_rank, link_scores,
                                 mean_std, packing_density, sample_similar_pairs, sweep,
                                 write_sweep)
from specwalk.graph import EdgeSplit, Graph, LabeledNodes
from specwalk.spectral import build_spectra
from specwalk.walks import build_bias

from conftest import from_nx


def k3_cover_length():
    """Expected number of walk positions until a simple walk on K3 has seen all
    three vertices, from the absorbing chain on the count of visited vertices."""
    # states: 1 visited, 2 visited; from 1 the walk always finds a new vertex,
    # from 2 it does with probability 1/2
    Q = np.array([[0.0, 1.0], [0.0, 0.5]])
    steps = np.linalg.solve(np.eye(2) - Q, np.ones(2))[0]
    return 1.0 + steps


class TestAUC:
    def test_hand_enumerated(self):
        # positives 0.35, 0.8; negatives 0.1, 0.4: three of four pairs ordered
        assert auc([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1]) == 0.75

    def test_separated(self):
        assert auc([0.1, 0.2, 0.9, 0.95], [0, 0, 1, 1]) == 1.0
        assert auc([0.1, 0.2, 0.9, 0.95], [1, 1, 0, 0]) == 0.0

    def test_ties_count_half(self):
        assert auc([0.5, 0.5], [0, 1]) == 0.5
        assert auc([0.3, 0.5, 0.5], [0, 0, 1]) == 0.75

    def test_single_class(self):
        with pytest.raises(ValueError):
            auc([0.1, 0.2], [1, 1])

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            auc([0.1, 0.2], [1])

    def test_random_labels(self):
        rng = np.random.default_rng(0)
        assert abs(auc(rng.random(10_000), rng.integers(0, 2, 10_000)) - 0.5) < 0.02

    # scores on a 0.1 grid so float rounding in the transforms cannot create ties
    @given(st.lists(st.integers(-1000, 1000), min_size=2, max_size=40), st.integers(0, 999))
    def test_invariances(self, scores, seed):
        labels = np.random.default_rng(seed).integers(0, 2, len(scores))
        if labels.min() == labels.max():
            labels[0] = 1 - labels[0]
        s = np.array(scores) / 10.0
        a = auc(s, labels)
        assert a + auc(s, 1 - labels) == pytest.approx(1.0)
        assert auc(np.exp(s / 50) * 3 + 1, labels) == pytest.approx(a)
        assert auc(np.arctan(s), labels) == pytest.approx(a)

    def test_against_brute_force(self):
        rng = np.random.default_rng(1)
        s = rng.integers(0, 5, 60).astype(float)
        y = rng.integers(0, 2, 60)
        pos, neg = s[y == 1], s[y == 0]
        want = np.mean([(p > q) + 0.5 * (p == q) for p in pos for q in neg])
        assert auc(s, y) == pytest.approx(want, abs=1e-12)


class TestTaskEvaluation:
    def test_link_scores(self):
        X = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        s = link_scores(X, np.array([2.0, 2.0]), np.array([-1.0]), [[0, 1], [0, 2]])
        np.testing.assert_allclose(s, [1 / (1 + np.exp(-1)), 1 / (1 + np.exp(1))])

    def test_eval_link_prediction(self):
        X = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 1.0]])
        split = EdgeSplit(np.zeros((0, 2), int), np.zeros((0, 2), int),
                          np.array([[0, 1], [2, 3]]), np.array([[0, 2], [1, 3]]), 0)
        assert eval_link_prediction(X, np.ones(2), np.zeros(1), split) == 1.0

    def test_empty_test_set(self):
        empty = np.zeros((0, 2), int)
        with pytest.raises(ValueError):
            eval_link_prediction(np.eye(2), np.ones(2), np.zeros(1),
                                 EdgeSplit(empty, empty, empty, empty, 0))

    def test_node_classification(self):
        rng = np.random.default_rng(0)
        centers = np.array([[3.0, 0], [0, 3.0], [-3.0, -3.0]])
        y = np.repeat([0, 1, 2], 20)
        X = centers[y] + rng.normal(scale=0.3, size=(60, 2))
        labels = {i: int(c) for i, c in enumerate(y)}
        nodes = LabeledNodes(labels, tuple(range(0, 60, 3)),
                             tuple(i for i in range(60) if i % 3))
        assert eval_node_classification(X, nodes) == 1.0

    def test_class_missing_from_train_warns(self):
        X = np.array([[0.0], [0.1], [1.0], [1.1], [5.0]])
        labels = {0: "a", 1: "a", 2: "b", 3: "b", 4: "c"}
        nodes = LabeledNodes(labels, (0, 2), (1, 3, 4))
        with pytest.warns(UserWarning, match="only in the test"):
            acc = eval_node_classification(X, nodes)
        assert acc == pytest.approx(2 / 3)

    def test_mean_std(self):
        assert mean_std([1.0, 3.0]) == (2.0, pytest.approx(np.sqrt(2)))
        assert mean_std([4.0]) == (4.0, 0.0)


class TestDiagnostics:
    def test_path_neighbor_rank_one(self):
        g = from_nx(nx.path_graph(6))
        bias = build_bias(g, build_spectra(g))
        rep = hitting_rank(g, bias, [(0, 1), (5, 4)], T=20, runs=5)
        assert rep.spectral == [1.0] and rep.simple == [1.0]

    def test_absent_target_gets_t_plus_one(self):
        g = Graph.from_edges(4, [(0, 1), (2, 3)])
        bias = build_bias(g, build_spectra(g))
        rep = hitting_rank(g, bias, [(0, 3)], T=10, runs=2)
        assert rep.spectral == [11.0] and rep.simple == [11.0]

    def test_uniform_spectra_pack_fully(self):
        g = from_nx(nx.cycle_graph(12))
        cache = build_spectra(g)
        bias = build_bias(g, cache)
        # equal up to eigensolver rounding
        rep = packing_density(g, cache, bias, [0, 5], [4, 8], c=1e-9, runs=3)
        assert rep.spectral == [100.0, 100.0] and rep.simple == [100.0, 100.0]
        assert rep.grid == [4, 8]

    def test_singleton_ball_covers_at_once(self, karate):
        cache = build_spectra(karate)
        rep = cover_time(karate, cache, build_bias(karate, cache), [0], c=-0.0, max_T=50,
                         runs=3)
        assert len(set(np.flatnonzero(cache.pairwise()[0] <= 0.0))) == 1
        assert rep.spectral == [1.0] and rep.simple == [1.0]

    def test_k3_cover_time(self, triangle):
        want = k3_cover_length()
        assert want == pytest.approx(4.0)
        cache = build_spectra(triangle)
        rep = cover_time(triangle, cache, build_bias(triangle, cache), [0], c=np.inf,
                         max_T=200, runs=20_000, seed=1)
        # all spectra coincide, so both walkers are the simple walk
        se = 2.0 / np.sqrt(20_000)
        assert abs(rep.simple[0] - want) < 4 * se
        assert rep.spectral == rep.simple

    def test_cover_censored(self):
        g = Graph.from_edges(4, [(0, 1), (2, 3)])
        cache = build_spectra(g)
        rep = cover_time(g, cache, build_bias(g, cache), [0], c=np.inf, max_T=30, runs=2)
        assert rep.spectral == [30.0]

    def test_deterministic(self, plc):
        cache = build_spectra(plc)
        bias = build_bias(plc, cache)
        pairs, _ = sample_similar_pairs(plc, cache, 20, seed=2)
        a = hitting_rank(plc, bias, pairs, T=30, runs=3, seed=4)
        b = hitting_rank(plc, bias, pairs, T=30, runs=3, seed=4)
        assert a == b

    def test_similar_pairs(self, plc):
        cache = build_spectra(plc)
        pairs, thr = sample_similar_pairs(plc, cache, 200, percentile=5.0, seed=0)
        D = cache.pairwise()
        assert pairs.shape == (200, 2)
        assert np.all(pairs[:, 0] != pairs[:, 1])
        assert np.all(D[pairs[:, 0], pairs[:, 1]] <= thr)
        assert thr == pytest.approx(np.percentile(D[np.triu_indices(plc.n, 1)], 5))

    def test_distance_quantile(self, karate):
        cache = build_spectra(karate)
        q = distance_quantile(cache, 0.1)
        D = cache.pairwise()
        assert np.mean(D[np.triu_indices(karate.n, 1)] <= q) >= 0.1

    def test_report_validation_and_file(self, tmp_path):
        with pytest.raises(ValueError):
            DiagnosticReport("x", [1, 2], [1.0], [1.0, 2.0], 1)
        rep = DiagnosticReport("packing_density", [40, 80], [50.0, 40.0], [30.0, 20.0], 7,
                               {"radius": 0.1}, 0.99)
        rep.write(tmp_path / "r.tsv")
        lines = (tmp_path / "r.tsv").read_text().splitlines()
        assert "# radius=0.1" in lines and "# samples=7" in lines
        assert lines[-3:] == ["T\tspectral\tsimple", "40\t50\t30", "80\t40\t20"]


class TestBootstrap:
    def test_clear_winner(self):
        rng = np.random.default_rng(0)
        a = rng.normal(1.0, 0.1, 200)
        assert bootstrap_confidence(a, a + 0.5) == 1.0
        assert bootstrap_confidence(a + 0.5, a) == 0.0

    def test_no_difference(self):
        a = np.random.default_rng(0).normal(size=500)
        b = np.random.default_rng(1).normal(size=500)
        assert 0.0 < bootstrap_confidence(a, b) < 1.0


class TestSweep:
    def test_grid_order(self, tmp_path):
        rows = sweep(lambda window, walk_length: window * 100 + walk_length,
                     {"window": [5, 10], "walk_length": [50, 100]})
        assert [(r["window"], r["walk_length"]) for r in rows] == \
            [(5, 50), (5, 100), (10, 50), (10, 100)]
        assert rows[1]["auc"] == 600
        write_sweep(rows, tmp_path / "s.tsv", {"seed": 0})
        lines = (tmp_path / "s.tsv").read_text().splitlines()
        assert lines[0] == "# seed=0" and lines[1] == "window\twalk_length\tauc"
        assert len(lines) == 6
