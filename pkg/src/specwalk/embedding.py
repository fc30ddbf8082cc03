"""Paragraph-vector node embeddings with a 2-Wasserstein neighborhood regularizer.

Every walk is a paragraph and every vertex a word. A window predicts its
center vertex from the mean of the walk's paragraph vector and the context
word vectors. A vertex's embedding ``x_v`` is a learned weighted sum of the
paragraph vectors of the walks that start at it. Two terms are trained jointly
with the window loss: a task head on top of ``x_v``, and
``gamma * W2^2(softmax(x_v), softmax(y_v))``, where ``y_v`` is the mean
embedding of the neighbors of ``v``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .graph import Graph
from .walks import WalkCorpus

logger = logging.getLogger(__name__)

TASKS = ("link-prediction", "node-classification", "none")


class TrainingDivergedError(ArithmeticError):
    pass


@dataclass
class EmbeddingModel:
    """All trainable parameters.

    ``word`` (n x d) and ``paragraph`` (K*n x d) are the input tables, ``agg``
    (K) combines a vertex's paragraph vectors, ``out_w`` (n x d) and
    ``out_b`` (n) form the softmax output layer. The task head is either
    ``head_w`` (d) / ``head_b`` (1) for link scoring or ``head_w``
    (classes x d) / ``head_b`` (classes) for node classification.
    """

    word: np.ndarray
    paragraph: np.ndarray
    agg: np.ndarray
    out_w: np.ndarray
    out_b: np.ndarray
    head_w: np.ndarray
    head_b: np.ndarray

    @property
    def n(self) -> int:
        return self.word.shape[0]

    @property
    def dim(self) -> int:
        return self.word.shape[1]

    @property
    def walks_per_node(self) -> int:
        return self.agg.shape[0]

    def params(self) -> dict:
        return {k: getattr(self, k) for k in
                ("word", "paragraph", "agg", "out_w", "out_b", "head_w", "head_b")}

    def copy(self) -> "EmbeddingModel":
        return EmbeddingModel(**{k: v.copy() for k, v in self.params().items()})

    def node_vectors(self) -> np.ndarray:
        K = self.walks_per_node
        return np.tensordot(self.agg, self.paragraph.reshape(self.n, K, self.dim), axes=(0, 1))


def init_model(n: int, K: int, d: int = 128, seed: int = 0, n_classes: int | None = None
               ) -> EmbeddingModel:
    if min(n, K, d) < 1:
        raise ValueError("n, K and d must be >= 1")
    rng = np.random.default_rng(seed)
    word = rng.uniform(-0.5 / d, 0.5 / d, size=(n, d))
    paragraph = rng.uniform(-0.5 / d, 0.5 / d, size=(n * K, d))
    if n_classes is None:
        head_w, head_b = np.zeros(d), np.zeros(1)
    else:
        head_w, head_b = np.zeros((n_classes, d)), np.zeros(n_classes)
    return EmbeddingModel(word, paragraph, np.full(K, 1.0 / K), np.zeros((n, d)),
                          np.zeros(n), head_w, head_b)


@dataclass(frozen=True)
class TrainConfig:
    dim: int = 128
    window: int = 10
    gamma: float = 1e-7
    epochs: int = 100
    learning_rate: float = 0.025
    min_learning_rate: float = 0.0001
    negatives: int = 5
    task: str = "link-prediction"
    full_softmax: bool = False
    scale_inputs: bool = True
    task_lr_scale: float = 1.0
    head_init: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if self.dim < 1 or self.epochs < 1:
            raise ValueError("dim and epochs must be >= 1")
        if self.gamma < 0:
            raise ValueError("gamma must be >= 0")
        if self.negatives < 0:
            raise ValueError("negatives must be >= 0")
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}; expected one of {TASKS}")
        if not 1e-8 <= self.gamma <= 1e-6 and self.gamma != 0:
            logger.info("gamma=%g lies outside the usual [1e-8, 1e-6] band", self.gamma)


@dataclass
class NodeEmbeddings:
    vectors: np.ndarray
    ids: tuple = ()
    history: list = field(default_factory=list)

    def __post_init__(self):
        if not self.ids:
            self.ids = tuple(str(i) for i in range(len(self.vectors)))

    def __len__(self):
        return len(self.vectors)


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _log_sigmoid(z):
    return -np.logaddexp(0.0, -z)


# --------------------------------------------------------------------------
# reference losses and gradients (dense, used for checking and small problems)


def center_word_loss(model: EmbeddingModel, paragraph_id: int, context, target: int,
                     negatives=None, full_softmax: bool = False):
    """Loss ``-log p(target | paragraph, context)`` and its gradients.

    With ``full_softmax`` the probability is the softmax over all vertices;
    otherwise it is the negative-sampling surrogate with the given
    ``negatives``. Gradients come back as a dict of arrays shaped like the
    model parameters.
    """
    context = np.asarray(context, dtype=np.int64)
    cnt = 1 + len(context)
    h = (model.paragraph[paragraph_id] + model.word[context].sum(axis=0)) / cnt
    grads = {k: np.zeros_like(v) for k, v in model.params().items()}
    if full_softmax:
        y = model.out_w @ h + model.out_b
        lse = np.logaddexp.reduce(y)
        loss = lse - y[target]
        p = np.exp(y - lse)
        p[target] -= 1.0
        grads["out_w"] += np.outer(p, h)
        grads["out_b"] += p
        dh = model.out_w.T @ p
    else:
        outs = np.r_[target, np.asarray(negatives if negatives is not None else [], np.int64)]
        labels = np.r_[1.0, np.zeros(len(outs) - 1)]
        f = model.out_w[outs] @ h + model.out_b[outs]
        loss = -np.sum(_log_sigmoid(np.where(labels > 0, f, -f)))
        g = _sigmoid(f) - labels
        np.add.at(grads["out_w"], outs, g[:, None] * h[None, :])
        np.add.at(grads["out_b"], outs, g)
        dh = g @ model.out_w[outs]
    grads["paragraph"][paragraph_id] += dh / cnt
    np.add.at(grads["word"], context, np.broadcast_to(dh / cnt, (len(context), len(dh))))
    return float(loss), grads


def node_vector(model: EmbeddingModel, v: int) -> np.ndarray:
    """``x_v``: aggregation-weighted sum of the paragraph vectors of ``v``'s walks."""
    K = model.walks_per_node
    return model.agg @ model.paragraph[v * K:(v + 1) * K]


def neighbor_vector(model: EmbeddingModel, g: Graph, v: int) -> np.ndarray:
    """``y_v``: mean of the neighbors' ``x_u``; ``x_v`` itself for an isolated vertex."""
    nb = g.neighbors(v)
    if len(nb) == 0:
        return node_vector(model, v)
    return np.mean([node_vector(model, int(u)) for u in nb], axis=0)


def softmax(x):
    z = np.exp(x - np.max(x))
    return z / z.sum()


@numba.njit(cache=True, nogil=True)
def _w2sq_grid(a, b):
    # W2^2 between masses a and b placed at positions 0..d-1, with gradients
    # w.r.t. the masses (valid where no cumulative breakpoints coincide).
    d = a.shape[0]
    F = np.cumsum(a)
    G = np.cumsum(b)
    F[d - 1] = 1.0
    G[d - 1] = 1.0
    cost = 0.0
    i = 0
    j = 0
    t = 0.0
    while i < d and j < d:
        nxt = min(F[i], G[j])
        if nxt > t:
            cost += (nxt - t) * (i - j) * (i - j)
            t = nxt
        if F[i] <= nxt:
            i += 1
        if G[j] <= nxt:
            j += 1
    dF = np.zeros(d)
    dG = np.zeros(d)
    j = 0
    for i in range(d - 1):
        while j < d - 1 and G[j] < F[i]:
            j += 1
        dF[i] = (i - j) ** 2 - (i + 1 - j) ** 2
    i = 0
    for j in range(d - 1):
        while i < d - 1 and F[i] < G[j]:
            i += 1
        dG[j] = (i - j) ** 2 - (i - j - 1) ** 2
    da = np.zeros(d)
    db = np.zeros(d)
    sa = 0.0
    sb = 0.0
    for k in range(d - 1, -1, -1):
        sa += dF[k]
        sb += dG[k]
        da[k] = sa
        db[k] = sb
    return cost, da, db


def w2_squared_grid(a, b) -> float:
    """Squared 2-Wasserstein distance between histograms on the integer grid."""
    return float(_w2sq_grid(np.asarray(a, float), np.asarray(b, float))[0])


def wasserstein_reg(x, y, gamma: float):
    """``gamma * W2^2(softmax(x), softmax(y))`` with coordinates at unit spacing.

    Returns the loss and the gradients with respect to ``x`` and ``y``.
    """
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    sx, sy = softmax(np.asarray(x, float)), softmax(np.asarray(y, float))
    cost, da, db = _w2sq_grid(sx, sy)
    gx = sx * (da - sx @ da)
    gy = sy * (db - sy @ db)
    return gamma * cost, gamma * gx, gamma * gy


def task_loss(model: EmbeddingModel, batch, task: str):
    """Mean task loss over a batch and its gradients.

    For ``"link-prediction"`` the batch is ``(pairs, labels)``, scored by
    ``sigmoid(head_w . (x_u * x_v) + head_b)`` against 0/1 with squared error.
    For ``"node-classification"`` it is ``(vertices, class_indices)`` with a
    linear softmax layer and cross-entropy.
    """
    K, d = model.walks_per_node, model.dim
    grads = {k: np.zeros_like(v) for k, v in model.params().items()}
    P3 = model.paragraph.reshape(model.n, K, d)
    X = np.tensordot(model.agg, P3, axes=(0, 1))
    dX = np.zeros_like(X)
    if task == "link-prediction":
        pairs, labels = batch
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        labels = np.asarray(labels, dtype=float)
        xu, xv = X[pairs[:, 0]], X[pairs[:, 1]]
        z = (xu * xv) @ model.head_w + model.head_b[0]
        s = _sigmoid(z)
        loss = float(np.mean((s - labels) ** 2))
        dz = 2.0 * (s - labels) * s * (1.0 - s) / len(labels)
        grads["head_w"] += dz @ (xu * xv)
        grads["head_b"][0] += dz.sum()
        np.add.at(dX, pairs[:, 0], dz[:, None] * model.head_w * xv)
        np.add.at(dX, pairs[:, 1], dz[:, None] * model.head_w * xu)
    elif task == "node-classification":
        nodes, cls = batch
        nodes = np.asarray(nodes, dtype=np.int64)
        cls = np.asarray(cls, dtype=np.int64)
        logits = X[nodes] @ model.head_w.T + model.head_b
        lse = np.logaddexp.reduce(logits, axis=1)
        loss = float(np.mean(lse - logits[np.arange(len(nodes)), cls]))
        p = np.exp(logits - lse[:, None])
        p[np.arange(len(nodes)), cls] -= 1.0
        p /= len(nodes)
        grads["head_w"] += p.T @ X[nodes]
        grads["head_b"] += p.sum(axis=0)
        np.add.at(dX, nodes, p @ model.head_w)
    else:
        raise ValueError(f"unknown task {task!r}")
    grads["agg"] += np.einsum("vkd,vd->k", P3, dX)
    grads["paragraph"] += (model.agg[None, :, None] * dX[:, None, :]).reshape(-1, d)
    return loss, grads


def neighbor_mean_matrix(g: Graph):
    import scipy.sparse as sp

    deg = g.degrees.astype(float)
    rows = np.repeat(np.arange(g.n), g.degrees)
    vals = 1.0 / deg[rows]
    M = sp.csr_matrix((vals, (rows, g.indices)), shape=(g.n, g.n))
    iso = np.flatnonzero(deg == 0)
    if len(iso):
        M = M + sp.csr_matrix((np.ones(len(iso)), (iso, iso)), shape=(g.n, g.n))
    return M.tocsr()


def regularizer_loss(model: EmbeddingModel, g: Graph, gamma: float):
    """Summed regularizer over all vertices with gradients for ``paragraph`` and ``agg``."""
    K, d = model.walks_per_node, model.dim
    P3 = model.paragraph.reshape(model.n, K, d)
    X = np.tensordot(model.agg, P3, axes=(0, 1))
    M = neighbor_mean_matrix(g)
    Y = M @ X
    total, dX, dY = _reg_batch(X, Y, float(gamma))
    # y_v = x_v for an isolated vertex: the term is identically zero
    iso = g.degrees == 0
    dX[iso] = 0.0
    dY[iso] = 0.0
    dX = dX + M.T @ dY
    grads = {"agg": np.einsum("vkd,vd->k", P3, dX),
             "paragraph": (model.agg[None, :, None] * dX[:, None, :]).reshape(-1, d)}
    return float(total), grads


@numba.njit(cache=True)
def _softmax_row(x):
    m = x.max()
    z = np.exp(x - m)
    return z / z.sum()


@numba.njit(cache=True)
def _reg_batch(X, Y, gamma):
    n = X.shape[0]
    dX = np.zeros_like(X)
    dY = np.zeros_like(Y)
    total = 0.0
    for v in range(n):
        sx = _softmax_row(X[v])
        sy = _softmax_row(Y[v])
        cost, da, db = _w2sq_grid(sx, sy)
        total += gamma * cost
        dX[v] = gamma * sx * (da - np.dot(sx, da))
        dY[v] = gamma * sy * (db - np.dot(sy, db))
    return total, dX, dY


# --------------------------------------------------------------------------
# SGD kernels


@numba.njit(cache=True)
def _seed_numba(seed):
    np.random.seed(seed)


@numba.njit(cache=True, inline="always")
def _log_sig(z):
    if z >= 0:
        return -math.log1p(math.exp(-z))
    return z - math.log1p(math.exp(z))


@numba.njit(cache=True, inline="always")
def _sig(z):
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


@numba.njit(cache=True, fastmath=True)
def _pv_window(P, Wd, U, b, pid, ctx, nctx, outs, nout, full_softmax, lr, h, dh,
               input_scale):
    d = P.shape[1]
    cnt = 1.0 + nctx
    for k in range(d):
        h[k] = P[pid, k]
    for c in range(nctx):
        w = ctx[c]
        for k in range(d):
            h[k] += Wd[w, k]
    for k in range(d):
        h[k] /= cnt
        dh[k] = 0.0
    loss = 0.0
    if full_softmax:
        n = U.shape[0]
        y = np.empty(n)
        for o in range(n):
            s = b[o]
            for k in range(d):
                s += U[o, k] * h[k]
            y[o] = s
        m = y.max()
        z = 0.0
        for o in range(n):
            z += math.exp(y[o] - m)
        lse = m + math.log(z)
        loss = lse - y[outs[0]]
        for o in range(n):
            g = math.exp(y[o] - lse)
            if o == outs[0]:
                g -= 1.0
            for k in range(d):
                dh[k] += g * U[o, k]
                U[o, k] -= lr * g * h[k]
            b[o] -= lr * g
    else:
        for t in range(nout):
            o = outs[t]
            f = b[o]
            for k in range(d):
                f += U[o, k] * h[k]
            if t == 0:
                loss -= _log_sig(f)
                g = _sig(f) - 1.0
            else:
                loss -= _log_sig(-f)
                g = _sig(f)
            for k in range(d):
                dh[k] += g * U[o, k]
                U[o, k] -= lr * g * h[k]
            b[o] -= lr * g
    step = lr * input_scale / cnt
    for k in range(d):
        P[pid, k] -= step * dh[k]
    for c in range(nctx):
        w = ctx[c]
        for k in range(d):
            Wd[w, k] -= step * dh[k]
    return loss


@numba.njit(cache=True, fastmath=True)
def _pv_epoch(walks, order, P, Wd, U, b, window, negatives, noise_cum, full_softmax,
              lr_start, lr_end, scale_inputs):
    N, T = walks.shape
    d = P.shape[1]
    h = np.empty(d)
    dh = np.empty(d)
    ctx = np.empty(2 * window, dtype=np.int64)
    outs = np.empty(1 + negatives, dtype=np.int64)
    total = 0.0
    count = 0
    for r in range(N):
        pid = order[r]
        lr = lr_start + (lr_end - lr_start) * r / N
        walk = walks[pid]
        for t in range(T):
            nctx = 0
            lo = max(0, t - window)
            hi = min(T, t + window + 1)
            for s in range(lo, hi):
                if s != t:
                    ctx[nctx] = walk[s]
                    nctx += 1
            outs[0] = walk[t]
            nout = 1
            if not full_softmax:
                for q in range(negatives):
                    o = np.searchsorted(noise_cum, np.random.random() * noise_cum[-1])
                    if o >= noise_cum.shape[0]:
                        o = noise_cum.shape[0] - 1
                    if o == walk[t]:
                        continue
                    outs[nout] = o
                    nout += 1
            scale = 1.0 + nctx if scale_inputs else 1.0
            total += _pv_window(P, Wd, U, b, pid, ctx, nctx, outs, nout, full_softmax, lr,
                                h, dh, scale)
            count += 1
    return total, count


@numba.njit(cache=True)
def _node_vec(P, agg, v, out):
    K = agg.shape[0]
    d = P.shape[1]
    for k in range(d):
        out[k] = 0.0
    for i in range(K):
        a = agg[i]
        row = v * K + i
        for k in range(d):
            out[k] += a * P[row, k]


@numba.njit(cache=True)
def _link_step(P, agg, hw, hb, u, v, label, lr, xu, xv, dagg, pscale):
    K = agg.shape[0]
    d = P.shape[1]
    _node_vec(P, agg, u, xu)
    _node_vec(P, agg, v, xv)
    z = hb[0]
    for k in range(d):
        z += hw[k] * xu[k] * xv[k]
    s = _sig(z)
    loss = (s - label) * (s - label)
    dz = 2.0 * (s - label) * s * (1.0 - s)
    for i in range(K):
        ru = u * K + i
        rv = v * K + i
        acc = 0.0
        for k in range(d):
            gu = dz * hw[k] * xv[k]
            gv = dz * hw[k] * xu[k]
            acc += P[ru, k] * gu + P[rv, k] * gv
        dagg[i] = acc
    for i in range(K):
        ru = u * K + i
        rv = v * K + i
        a = agg[i] * pscale
        for k in range(d):
            P[ru, k] -= lr * a * dz * hw[k] * xv[k]
            P[rv, k] -= lr * a * dz * hw[k] * xu[k]
    for k in range(d):
        hw[k] -= lr * dz * xu[k] * xv[k]
    hb[0] -= lr * dz
    for i in range(K):
        agg[i] -= lr * dagg[i]
    return loss


@numba.njit(cache=True)
def _link_epoch(P, agg, hw, hb, pairs, labels, order, lr_start, lr_end, pscale):
    d = P.shape[1]
    xu = np.empty(d)
    xv = np.empty(d)
    dagg = np.empty(agg.shape[0])
    total = 0.0
    n = order.shape[0]
    for r in range(n):
        q = order[r]
        lr = lr_start + (lr_end - lr_start) * r / n
        total += _link_step(P, agg, hw, hb, pairs[q, 0], pairs[q, 1], labels[q], lr,
                            xu, xv, dagg, pscale)
    return total / max(n, 1)


@numba.njit(cache=True)
def _class_step(P, agg, hw, hb, v, c, lr, x, logits, dx, dagg, pscale):
    K = agg.shape[0]
    d = P.shape[1]
    C = hb.shape[0]
    _node_vec(P, agg, v, x)
    for j in range(C):
        s = hb[j]
        for k in range(d):
            s += hw[j, k] * x[k]
        logits[j] = s
    m = logits.max()
    z = 0.0
    for j in range(C):
        z += math.exp(logits[j] - m)
    lse = m + math.log(z)
    loss = lse - logits[c]
    for k in range(d):
        dx[k] = 0.0
    for j in range(C):
        g = math.exp(logits[j] - lse)
        if j == c:
            g -= 1.0
        for k in range(d):
            dx[k] += g * hw[j, k]
            hw[j, k] -= lr * g * x[k]
        hb[j] -= lr * g
    for i in range(K):
        row = v * K + i
        acc = 0.0
        for k in range(d):
            acc += P[row, k] * dx[k]
        dagg[i] = acc
        for k in range(d):
            P[row, k] -= lr * agg[i] * pscale * dx[k]
    for i in range(K):
        agg[i] -= lr * dagg[i]
    return loss


@numba.njit(cache=True)
def _class_epoch(P, agg, hw, hb, nodes, classes, order, lr_start, lr_end, pscale):
    d = P.shape[1]
    x = np.empty(d)
    dx = np.empty(d)
    logits = np.empty(hb.shape[0])
    dagg = np.empty(agg.shape[0])
    total = 0.0
    n = order.shape[0]
    for r in range(n):
        q = order[r]
        lr = lr_start + (lr_end - lr_start) * r / n
        total += _class_step(P, agg, hw, hb, nodes[q], classes[q], lr, x, logits, dx, dagg,
                             pscale)
    return total / max(n, 1)


def noise_distribution(corpus: WalkCorpus, power: float = 0.75) -> np.ndarray:
    """Cumulative unigram^power noise table over vertices."""
    return np.cumsum(corpus.frequencies().astype(float) ** power)


def train(g: Graph, corpus: WalkCorpus, cfg: TrainConfig, task_data=None,
          model: EmbeddingModel | None = None, callback=None):
    """Fit the model by SGD and return ``(NodeEmbeddings, EmbeddingModel)``.

    Each epoch makes one pass over the walks in shuffled order (one SGD step
    per window), one pass over the shuffled task examples, and one full-batch
    step on the regularizer. The learning rate decays linearly across all
    epochs. ``task_data`` is ``(pairs, labels)`` for link prediction or
    ``(vertices, class_indices)`` for node classification.

    ``NodeEmbeddings.history`` holds ``(epoch, L_par, L_class, L_reg, L_ov)``
    per epoch.
    """
    if corpus.n != g.n:
        raise ValueError("corpus and graph disagree on the vertex count")
    K = corpus.walks_per_node
    task = cfg.task if task_data is not None else "none"
    n_classes = None
    if task == "node-classification":
        n_classes = int(np.max(task_data[1])) + 1
    if model is None:
        model = init_model(g.n, K, cfg.dim, cfg.seed, n_classes)
        if task == "link-prediction":
            model.head_w[:] = cfg.head_init
    rng = np.random.default_rng(cfg.seed)
    _seed_numba(int(rng.integers(2**31 - 1)))
    noise = noise_distribution(corpus)
    walks = np.ascontiguousarray(corpus.walks, dtype=np.int64)
    if task == "link-prediction":
        pairs = np.ascontiguousarray(task_data[0], dtype=np.int64)
        labels = np.ascontiguousarray(task_data[1], dtype=np.float64)
    elif task == "node-classification":
        nodes = np.ascontiguousarray(task_data[0], dtype=np.int64)
        classes = np.ascontiguousarray(task_data[1], dtype=np.int64)

    lr0, lr1 = cfg.learning_rate, cfg.min_learning_rate
    # paragraph rows reach the task loss through weights ~1/K; undo that shrinkage
    pscale = float(K) if cfg.scale_inputs else 1.0
    history = []
    for epoch in range(cfg.epochs):
        a = lr0 - (lr0 - lr1) * epoch / cfg.epochs
        z = lr0 - (lr0 - lr1) * (epoch + 1) / cfg.epochs
        try:
            order = rng.permutation(len(walks))
            total, count = _pv_epoch(walks, order, model.paragraph, model.word, model.out_w,
                                     model.out_b, cfg.window, cfg.negatives, noise,
                                     cfg.full_softmax, a, z, cfg.scale_inputs)
            l_par = total / max(count, 1)
            l_class = 0.0
            if task == "link-prediction":
                l_class = _link_epoch(model.paragraph, model.agg, model.head_w, model.head_b,
                                      pairs, labels, rng.permutation(len(pairs)),
                                      a * cfg.task_lr_scale, z * cfg.task_lr_scale, pscale)
            elif task == "node-classification":
                l_class = _class_epoch(model.paragraph, model.agg, model.head_w, model.head_b,
                                       nodes, classes, rng.permutation(len(nodes)),
                                       a * cfg.task_lr_scale, z * cfg.task_lr_scale, pscale)
        except (ZeroDivisionError, OverflowError, FloatingPointError) as exc:
            raise TrainingDivergedError(
                f"arithmetic failure at epoch {epoch + 1} ({exc}); "
                "try a smaller learning rate") from exc
        l_reg = 0.0
        if cfg.gamma > 0:
            l_reg, grads = regularizer_loss(model, g, cfg.gamma)
            model.paragraph -= z * grads["paragraph"]
            model.agg -= z * grads["agg"]
        l_ov = l_par + l_class + l_reg
        history.append((epoch + 1, l_par, l_class, l_reg, l_ov))
        logger.debug("epoch %d L_par=%.5f L_class=%.5f L_reg=%.3g", epoch + 1, l_par,
                     l_class, l_reg)
        if not np.isfinite(l_ov) or not np.isfinite(model.paragraph).all():
            raise TrainingDivergedError(
                f"loss diverged at epoch {epoch + 1} (L_par={l_par}, L_class={l_class}); "
                "try a smaller learning rate")
        if callback is not None:
            callback(epoch + 1, model)
    emb = NodeEmbeddings(model.node_vectors(), g.ids, history)
    return emb, model


def write_embeddings(emb: NodeEmbeddings, dest) -> None:
    """Word-embedding text format: ``n d`` then ``id v1 ... vd`` per line."""
    n, d = emb.vectors.shape
    with open(dest, "w", encoding="utf-8") as fh:
        fh.write(f"{n} {d}\n")
        for tok, row in zip(emb.ids, emb.vectors):
            fh.write(tok + " " + " ".join(repr(float(x)) for x in row) + "\n")


def read_embeddings(source) -> NodeEmbeddings:
    with open(source, "r", encoding="utf-8") as fh:
        n, d = map(int, fh.readline().split())
        ids, rows = [], []
        for lineno, line in enumerate(fh, 2):
            toks = line.rstrip("\n").split(" ")
            if len(toks) != d + 1:
                raise ValueError(f"line {lineno}: expected {d} components")
            ids.append(toks[0])
            rows.append(np.array(toks[1:], dtype=np.float64))
    if len(rows) != n:
        raise ValueError(f"expected {n} vectors, found {len(rows)}")
    return NodeEmbeddings(np.vstack(rows), tuple(ids))


def write_history(history, dest) -> None:
    with open(dest, "w", encoding="utf-8") as fh:
        fh.write("# epoch L_par L_class L_reg L_ov\n")
        for row in history:
            fh.write(f"{row[0]} " + " ".join(f"{x:.10g}" for x in row[1:]) + "\n")


def save_model(model: EmbeddingModel, dest, meta: dict | None = None) -> None:
    """All parameter tables in one ``.npz``; ``meta`` values are stored as strings."""
    extra = {f"meta_{k}": np.array(str(v)) for k, v in (meta or {}).items()}
    with open(dest, "wb") as fh:
        np.savez(fh, **model.params(), **extra)


def load_model(source) -> tuple[EmbeddingModel, dict]:
    with np.load(source) as z:
        params = {k: z[k] for k in ("word", "paragraph", "agg", "out_w", "out_b",
                                    "head_w", "head_b")}
        meta = {k[5:]: str(z[k]) for k in z.files if k.startswith("meta_")}
    return EmbeddingModel(**params), meta
