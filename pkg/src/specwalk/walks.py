"""Spectral-biased random walks.

With probability ``epsilon`` a step follows the bias row of the current
vertex, which spreads mass over its symmetric k-closest neighbors in
spectral distance; otherwise the step is a uniform move to a neighbor.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numba
import numpy as np

from .graph import Graph
from .spectral import SpectraCache, spectral_distance

logger = logging.getLogger(__name__)


class WalkError(RuntimeError):
    pass


def _nearest(g, cache, i, k, p):
    nb = g.neighbors(i)
    if len(nb) == 0:
        return []
    d = np.array([spectral_distance(cache, i, int(j), p) for j in nb])
    order = np.lexsort((nb, d))
    return sorted(int(j) for j in nb[order[:k]])


def symmetric_k_closest(g: Graph, cache: SpectraCache, i: int, k: int = 5,
                        ot_order: float = 2.0) -> list[int]:
    """The k spectrally nearest neighbors of ``i`` plus every other neighbor
    that counts ``i`` among its own k nearest. Ties go to the smaller id."""
    if k < 1:
        raise ValueError("k must be >= 1")
    near = set(_nearest(g, cache, i, k, ot_order))
    for j in g.neighbors(i):
        j = int(j)
        if j not in near and i in _nearest(g, cache, j, k, ot_order):
            near.add(j)
    return sorted(near)


def bias_row(g: Graph, cache: SpectraCache, i: int, k: int = 5, ot_order: float = 2.0,
             candidates=None):
    """Transition probabilities from ``i`` over its symmetric k-closest set.

    Raw scores are ``1 - d_ij / sum_m d_im``. Negative scores are clamped to
    zero and the row renormalized; a row that sums to zero (one candidate, or
    all distances zero) becomes uniform.

    Returns
    -------
    candidates : ndarray of int
    probs : ndarray of float, same length, summing to 1
    """
    if candidates is None:
        candidates = symmetric_k_closest(g, cache, i, k, ot_order)
    cand = np.asarray(candidates, dtype=np.int64)
    if cand.size == 0:
        return cand, np.zeros(0)
    d = np.array([spectral_distance(cache, i, int(j), ot_order) for j in cand])
    total = d.sum()
    if total > 0:
        raw = np.clip(1.0 - d / total, 0.0, None)
        s = raw.sum()
        if s > 0:
            return cand, raw / s
    return cand, np.full(cand.size, 1.0 / cand.size)


@dataclass(frozen=True, eq=False)
class BiasModel:
    """Bias rows for every vertex, packed CSR-style."""

    indptr: np.ndarray
    candidates: np.ndarray
    probs: np.ndarray
    k: int
    ot_order: float
    digest: str

    @property
    def n(self) -> int:
        return len(self.indptr) - 1

    @property
    def cumulative(self) -> np.ndarray:
        cum = np.empty_like(self.probs)
        for i in range(self.n):
            lo, hi = self.indptr[i], self.indptr[i + 1]
            cum[lo:hi] = np.cumsum(self.probs[lo:hi])
        return cum

    def row(self, i: int):
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return self.candidates[lo:hi], self.probs[lo:hi]

    def dense(self) -> np.ndarray:
        W = np.zeros((self.n, self.n))
        for i in range(self.n):
            c, pr = self.row(i)
            W[i, c] = pr
        return W


def build_bias(g: Graph, cache: SpectraCache, k: int = 5, ot_order: float = 2.0) -> BiasModel:
    cache.check(g)
    nearest = [set(_nearest(g, cache, i, k, ot_order)) for i in range(g.n)]
    indptr = [0]
    cands, probs = [], []
    for i in range(g.n):
        s = set(nearest[i])
        s.update(int(j) for j in g.neighbors(i) if i in nearest[int(j)])
        c, pr = bias_row(g, cache, i, k, ot_order, candidates=sorted(s))
        cands.append(c)
        probs.append(pr)
        indptr.append(indptr[-1] + len(c))
    return BiasModel(np.array(indptr, dtype=np.int64),
                     np.concatenate(cands).astype(np.int64) if cands else np.zeros(0, np.int64),
                     np.concatenate(probs) if probs else np.zeros(0),
                     k, float(ot_order), g.digest())


class OnlineBias:
    """Recomputes the bias row of a vertex every time it is requested."""

    def __init__(self, g: Graph, cache: SpectraCache, k: int = 5, ot_order: float = 2.0):
        cache.check(g)
        self.g, self.cache, self.k, self.ot_order = g, cache, k, ot_order
        self.digest = g.digest()

    def row(self, i: int):
        return bias_row(self.g, self.cache, i, self.k, self.ot_order)


def move_to(candidates, row, u: float):
    """Inverse-CDF choice: the candidate whose cumulative interval holds ``u``."""
    candidates = np.asarray(candidates)
    if candidates.size == 0:
        raise WalkError("no candidate to move to")
    cum = np.cumsum(row)
    j = int(np.searchsorted(cum, u, side="left"))
    return candidates[min(j, candidates.size - 1)]


def transition_rows(g: Graph, bias, epsilon: float) -> np.ndarray:
    """Dense mixture matrix ``(1 - epsilon) P + epsilon W``."""
    deg = g.degrees.astype(float)
    P = np.zeros((g.n, g.n))
    for i in range(g.n):
        if deg[i]:
            P[i, g.neighbors(i)] = 1.0 / deg[i]
    return (1.0 - epsilon) * P + epsilon * bias.dense()


def check_reversibility(bias: BiasModel) -> float:
    """Largest detailed-balance violation ``|pi_i w_ij - pi_j w_ji|`` of W."""
    W = bias.dense()
    vals, vecs = np.linalg.eig(W.T)
    pi = np.real(vecs[:, np.argmin(np.abs(vals - 1.0))])
    pi = pi / pi.sum()
    flow = pi[:, None] * W
    return float(np.max(np.abs(flow - flow.T)))


@numba.njit(cache=True, nogil=True)
def _walk(indptr, indices, b_indptr, b_cand, b_cum, v0, eps, u, out):
    T = out.shape[0]
    cur = v0
    out[0] = v0
    for s in range(1, T):
        x = u[2 * s - 2]
        y = u[2 * s - 1]
        deg = indptr[cur + 1] - indptr[cur]
        if deg == 0:
            return False
        lo = b_indptr[cur]
        hi = b_indptr[cur + 1]
        if x < eps and hi > lo:
            j = lo
            while j < hi - 1 and b_cum[j] < y:
                j += 1
            cur = b_cand[j]
        else:
            j = int(y * deg)
            if j >= deg:
                j = deg - 1
            cur = indices[indptr[cur] + j]
        out[s] = cur
    return True


_EMPTY_I = np.zeros(1, dtype=np.int64)
_EMPTY_F = np.zeros(0)


def _draws(rng, T):
    return rng.random(2 * (T - 1))


def simple_walk(g: Graph, v0: int, T: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform-neighbor walk of ``T`` vertices starting at ``v0``."""
    if g.degree(v0) == 0:
        raise WalkError(f"vertex {v0} is isolated")
    out = np.empty(T, dtype=np.int64)
    b_indptr = np.zeros(g.n + 1, dtype=np.int64)
    _walk(g.indptr, g.indices, b_indptr, _EMPTY_I, _EMPTY_F, v0, 0.0, _draws(rng, T), out)
    return out


def spectral_walk(g: Graph, bias, v0: int, T: int, epsilon: float,
                  rng: np.random.Generator) -> np.ndarray:
    """One spectral-biased walk of ``T`` vertices (``v0`` included).

    ``bias`` is a :class:`BiasModel` or an :class:`OnlineBias`; both consume
    the random stream identically, so they produce the same walk.
    """
    if g.degree(v0) == 0:
        raise WalkError(f"vertex {v0} is isolated")
    u = _draws(rng, T)
    out = np.empty(T, dtype=np.int64)
    if isinstance(bias, BiasModel):
        ok = _walk(g.indptr, g.indices, bias.indptr, bias.candidates, bias.cumulative,
                   v0, float(epsilon), u, out)
        if not ok:
            raise WalkError("walk reached an isolated vertex")
        return out
    cur = out[0] = v0
    for s in range(1, T):
        x, y = u[2 * s - 2], u[2 * s - 1]
        cand, row = bias.row(cur)
        if x < epsilon and len(cand):
            cur = move_to(cand, row, y)
        else:
            nb = g.neighbors(cur)
            if len(nb) == 0:
                raise WalkError("walk reached an isolated vertex")
            cur = nb[min(int(y * len(nb)), len(nb) - 1)]
        out[s] = cur
    return out


@dataclass(frozen=True)
class WalkConfig:
    walk_length: int = 100
    walks_per_node: int = 50
    epsilon: float = 0.6
    k: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.walk_length < 2:
            raise ValueError("walk_length must be >= 2")
        if self.walks_per_node < 1:
            raise ValueError("walks_per_node must be >= 1")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in [0, 1]")
        if self.k < 1:
            raise ValueError("k must be >= 1")


@dataclass(frozen=True, eq=False)
class WalkCorpus:
    """``walks_per_node`` walks per vertex; row ``v * K + i`` is walk ``i`` of ``v``
    and its row index is its paragraph id."""

    walks: np.ndarray
    walks_per_node: int

    @property
    def n(self) -> int:
        return len(self.walks) // self.walks_per_node

    @property
    def walk_length(self) -> int:
        return self.walks.shape[1]

    def __len__(self):
        return len(self.walks)

    def __eq__(self, other):
        return (isinstance(other, WalkCorpus) and self.walks_per_node == other.walks_per_node
                and np.array_equal(self.walks, other.walks))

    def starts(self) -> np.ndarray:
        return self.walks[:, 0]

    def frequencies(self) -> np.ndarray:
        return np.bincount(self.walks.ravel(), minlength=self.n)


def walk_rng(seed: int, v: int, i: int) -> np.random.Generator:
    return np.random.default_rng([seed, v, i])


def generate_corpus(g: Graph, bias, cfg: WalkConfig, threads: int = 1) -> WalkCorpus:
    """``K`` walks from every vertex, each with its own seeded stream.

    A vertex with no edge yields walks that stay on it.
    """
    T, K = cfg.walk_length, cfg.walks_per_node
    walks = np.empty((g.n * K, T), dtype=np.int64)
    if isinstance(bias, BiasModel):
        b_indptr, b_cand, b_cum = bias.indptr, bias.candidates, bias.cumulative
    else:
        b_indptr = None
    isolated = np.flatnonzero(g.degrees == 0)
    if len(isolated):
        logger.warning("%d isolated vertices get stationary walks", len(isolated))

    def run(vertices):
        for v in vertices:
            for i in range(K):
                row = walks[v * K + i]
                if g.degree(v) == 0:
                    row[:] = v
                    continue
                rng = walk_rng(cfg.seed, int(v), i)
                if b_indptr is None:
                    row[:] = spectral_walk(g, bias, int(v), T, cfg.epsilon, rng)
                elif not _walk(g.indptr, g.indices, b_indptr, b_cand, b_cum, int(v),
                               float(cfg.epsilon), _draws(rng, T), row):
                    raise WalkError("walk reached an isolated vertex")

    if threads > 1:
        chunks = np.array_split(np.arange(g.n), threads)
        with ThreadPoolExecutor(threads) as ex:
            list(ex.map(run, chunks))
    else:
        run(range(g.n))
    return WalkCorpus(walks, K)


def write_corpus(corpus: WalkCorpus, dest, header: dict | None = None) -> None:
    with open(dest, "w", encoding="utf-8") as fh:
        for k, v in (header or {}).items():
            fh.write(f"# {k}={v}\n")
        for pid, w in enumerate(corpus.walks):
            fh.write(f"{pid} " + " ".join(map(str, w.tolist())) + "\n")


def read_corpus(source, walks_per_node: int | None = None) -> WalkCorpus:
    meta = {}
    rows = []
    with open(source, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if line.startswith("#"):
                if "=" in line:
                    k, v = line[1:].strip().split("=", 1)
                    meta[k.strip()] = v.strip()
                continue
            toks = line.split()
            if not toks:
                continue
            if int(toks[0]) != len(rows):
                raise ValueError(f"line {lineno}: paragraph ids must be consecutive")
            rows.append([int(t) for t in toks[1:]])
    K = walks_per_node or int(meta.get("walks_per_node", 1))
    return WalkCorpus(np.array(rows, dtype=np.int64), K)


def default_threads() -> int:
    return max(1, len(os.sched_getaffinity(0)))
