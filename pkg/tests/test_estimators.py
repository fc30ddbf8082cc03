import networkx as nx
import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from specwalk import Graph
from specwalk.estimators import (SpectralLinkPredictor, SpectralNodeClassifier,
                                 SpectralWalkEmbedding, as_graph)

FAST = dict(walks_per_node=2, walk_length=12, epochs=2, dim=8, window=3)


@pytest.fixture(scope="module")
def G():
    return nx.powerlaw_cluster_graph(40, 2, 0.3, seed=1)


def test_params_and_clone():
    est = SpectralWalkEmbedding(epsilon=0.2, dim=16)
    assert est.get_params()["epsilon"] == 0.2
    twin = clone(est)
    assert twin.get_params() == est.get_params() and twin is not est
    assert est.set_params(window=4).window == 4


@pytest.mark.parametrize("source", ["nx", "array", "graph"])
def test_as_graph(G, source):
    edges = np.array(list(G.edges()))
    obj = {"nx": G, "array": edges, "graph": Graph.from_edges(40, edges)}[source]
    g = as_graph(obj)
    assert (g.n, g.m) == (40, G.number_of_edges())


def test_as_graph_rejects():
    with pytest.raises(ValueError):
        as_graph(np.array([[0, 1, 2]]))
    with pytest.raises(ValueError):
        as_graph(np.array([[0, -1]]))


def test_embedding_fit_transform(G):
    est = SpectralWalkEmbedding(**FAST).fit(G)
    assert est.embedding_.shape == (40, 8) and est.n_features_out_ == 8
    np.testing.assert_array_equal(est.transform([3, 1]), est.embedding_[[3, 1]])
    again = SpectralWalkEmbedding(**FAST).fit_transform(G)
    np.testing.assert_array_equal(again, est.embedding_)
    with pytest.raises(ValueError):
        est.transform([40])


def test_not_fitted():
    for est in (SpectralWalkEmbedding(), SpectralLinkPredictor(), SpectralNodeClassifier()):
        with pytest.raises(NotFittedError):
            (est.transform if hasattr(est, "transform") else est.predict)([0])


def test_link_predictor(G):
    rng = np.random.default_rng(0)
    pos = np.array(list(G.edges()))
    neg = rng.integers(0, 40, size=(len(pos), 2))
    neg = neg[~np.array([G.has_edge(a, b) or a == b for a, b in neg])]
    X = np.vstack([pos, neg])
    y = np.r_[np.ones(len(pos)), np.zeros(len(neg))]
    est = SpectralLinkPredictor(**FAST).fit(X, y, graph=G)
    proba = est.predict_proba(X)
    assert proba.shape == (len(X), 2)
    np.testing.assert_allclose(proba.sum(axis=1), 1.0)
    assert set(np.unique(est.predict(X))) <= {0, 1}
    np.testing.assert_array_equal(est.classes_, [0, 1])
    assert 0.0 <= est.score(X, y) <= 1.0
    # the probability is monotone in the decision function
    order = np.argsort(est.decision_function(X))
    assert np.all(np.diff(proba[order, 1]) >= -1e-12)
    with pytest.raises(ValueError):
        est.fit(X, y[:-1], graph=G)


def test_link_predictor_graph_from_positives(G):
    pos = np.array(list(G.edges()))
    X = np.vstack([pos, [[0, 39]]])
    y = np.r_[np.ones(len(pos)), 0]
    est = SpectralLinkPredictor(**FAST).fit(X, y)
    assert est.graph_.m == len(pos)


def test_node_classifier(G):
    v = np.arange(40)
    y = np.where(v % 3 == 0, "x", "y")
    est = SpectralNodeClassifier(**FAST).fit(v[:20], y[:20], graph=G)
    np.testing.assert_array_equal(est.classes_, ["x", "y"])
    proba = est.predict_proba(v)
    assert proba.shape == (40, 2)
    np.testing.assert_allclose(proba.sum(axis=1), 1.0)
    assert set(est.predict(v)) <= {"x", "y"}
    np.testing.assert_array_equal(est.predict(v), est.classes_[proba.argmax(axis=1)])
    assert 0.0 <= est.score(v, y) <= 1.0


def test_reproducible(G):
    a = SpectralWalkEmbedding(**FAST, random_state=3).fit_transform(G)
    b = SpectralWalkEmbedding(**FAST, random_state=3).fit_transform(G)
    np.testing.assert_array_equal(a, b)
