"""scikit-learn style estimators over spectral-biased walk embeddings."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .config import RunConfig
from .evaluation import auc, link_scores
from .graph import Graph
from .pipeline import embed, prepare


def as_graph(graph, n: int | None = None) -> Graph:
    """Accept a :class:`Graph`, a networkx graph or an ``(m, 2)`` edge array."""
    if isinstance(graph, Graph):
        return graph
    if hasattr(graph, "edges") and hasattr(graph, "nodes"):
        nodes = sorted(graph.nodes())
        index = {v: i for i, v in enumerate(nodes)}
        edges = [(index[a], index[b]) for a, b in graph.edges()]
        return Graph.from_edges(len(nodes), edges, [str(v) for v in nodes])
    edges = check_array(graph, dtype=np.int64, ensure_min_samples=1)
    if edges.shape[1] != 2:
        raise ValueError("edge array must have two columns")
    if edges.min() < 0:
        raise ValueError("vertex ids must be non-negative")
    size = int(edges.max()) + 1 if n is None else n
    return Graph.from_edges(size, edges)


def _check_vertices(X, n: int) -> np.ndarray:
    v = check_array(np.asarray(X).reshape(-1, 1), dtype=np.int64, ensure_min_samples=1).ravel()
    if v.min() < 0 or v.max() >= n:
        raise ValueError(f"vertex ids must lie in [0, {n})")
    return v


def _check_pairs(X, n: int) -> np.ndarray:
    P = check_array(X, dtype=np.int64)
    if P.shape[1] != 2:
        raise ValueError("pairs must have two columns")
    if P.min() < 0 or P.max() >= n:
        raise ValueError(f"vertex ids must lie in [0, {n})")
    return P


class _SpectralWalkBase(BaseEstimator):
    def __init__(self, epsilon=0.6, walk_length=100, walks_per_node=50, dim=128, window=10,
                 gamma=1e-7, epochs=100, learning_rate=0.025, negatives=5, hops=2, cap=30,
                 k=5, ot_order=2.0, random_state=0):
        self.epsilon = epsilon
        self.walk_length = walk_length
        self.walks_per_node = walks_per_node
        self.dim = dim
        self.window = window
        self.gamma = gamma
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.negatives = negatives
        self.hops = hops
        self.cap = cap
        self.k = k
        self.ot_order = ot_order
        self.random_state = random_state

    def _run_config(self) -> RunConfig:
        params = {k: v for k, v in self.get_params().items() if k != "random_state"}
        seed = 0 if self.random_state is None else int(self.random_state)
        return RunConfig(seed=seed, **params)

    def _fit_stages(self, g: Graph, task: str, task_data=None):
        cfg = self._run_config()
        st = embed(prepare(g, cfg), cfg, task, task_data)
        self.graph_ = g
        self.spectra_ = st.cache
        self.bias_ = st.bias
        self.model_ = st.model
        self.embedding_ = st.embeddings.vectors
        self.history_ = st.embeddings.history
        self.n_features_out_ = self.embedding_.shape[1]
        return st


class SpectralWalkEmbedding(TransformerMixin, _SpectralWalkBase):
    """Unsupervised node embeddings from spectral-biased walks.

    ``fit`` takes the graph; ``transform`` maps vertex ids to their vectors.

    Examples
    --------
    >>> import networkx as nx
    >>> emb = SpectralWalkEmbedding(walks_per_node=2, walk_length=10, epochs=2, dim=8)
    >>> emb.fit(nx.cycle_graph(6)).transform([0, 3]).shape
    (2, 8)
    """

    def fit(self, X, y=None):
        self._fit_stages(as_graph(X), "link-prediction", None)
        return self

    def transform(self, X):
        check_is_fitted(self, "embedding_")
        return self.embedding_[_check_vertices(X, len(self.embedding_))]

    def fit_transform(self, X, y=None):
        return self.fit(X).embedding_


class SpectralLinkPredictor(ClassifierMixin, _SpectralWalkBase):
    """Link prediction with a jointly trained Hadamard-product logistic head.

    ``fit(pairs, labels, graph=...)`` trains on labelled vertex pairs; the
    walks run on ``graph``, which defaults to the positive pairs.
    """

    def fit(self, X, y, graph=None):
        y = np.asarray(y).ravel()
        if graph is None:
            P = check_array(X, dtype=np.int64)
            g = as_graph(P[y == 1], n=int(P.max()) + 1)
        else:
            g = as_graph(graph)
        P = _check_pairs(X, g.n)
        if len(y) != len(P):
            raise ValueError("X and y differ in length")
        self.classes_ = np.array([0, 1])
        self._fit_stages(g, "link-prediction", (P, y.astype(float)))
        return self

    def decision_function(self, X):
        check_is_fitted(self, "model_")
        P = _check_pairs(X, len(self.embedding_))
        z = (self.embedding_[P[:, 0]] * self.embedding_[P[:, 1]]) @ self.model_.head_w
        return z + self.model_.head_b[0]

    def predict_proba(self, X):
        check_is_fitted(self, "model_")
        P = _check_pairs(X, len(self.embedding_))
        s = link_scores(self.embedding_, self.model_.head_w, self.model_.head_b, P)
        return np.column_stack([1.0 - s, s])

    def predict(self, X):
        return (self.predict_proba(X)[:, 1] >= 0.5).astype(int)

    def score(self, X, y, sample_weight=None):
        """Area under the ROC curve of the head's scores."""
        return auc(self.predict_proba(X)[:, 1], y)


class SpectralNodeClassifier(ClassifierMixin, _SpectralWalkBase):
    """Node classification with a jointly trained softmax head.

    ``fit(vertices, labels, graph=...)``; ``predict(vertices)``.
    """

    def fit(self, X, y, graph):
        g = as_graph(graph)
        v = _check_vertices(X, g.n)
        y = np.asarray(y).ravel()
        if len(y) != len(v):
            raise ValueError("X and y differ in length")
        self.classes_, codes = np.unique(y, return_inverse=True)
        self._fit_stages(g, "node-classification", (v, codes.astype(np.int64)))
        return self

    def decision_function(self, X):
        check_is_fitted(self, "model_")
        v = _check_vertices(X, len(self.embedding_))
        return self.embedding_[v] @ self.model_.head_w.T + self.model_.head_b

    def predict_proba(self, X):
        z = self.decision_function(X)
        z = z - z.max(axis=1, keepdims=True)
        e = np.exp(z)
        return e / e.sum(axis=1, keepdims=True)

    def predict(self, X):
        check_is_fitted(self, "model_")
        return self.classes_[np.argmax(self.decision_function(X), axis=1)]
