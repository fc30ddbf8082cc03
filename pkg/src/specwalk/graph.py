"""Undirected simple graphs, neighborhood extraction and edge splitting."""

from __future__ import annotations

import hashlib
import io
import logging
import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

logger = logging.getLogger(__name__)


class GraphFormatError(ValueError):
    """Raised when an edge list, label file or split file cannot be parsed."""


@dataclass(frozen=True)
class LoadStats:
    lines: int
    duplicates: int
    self_loops: int


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable undirected simple graph stored in CSR form.

    Vertices are the integers ``0..n-1``; ``ids`` maps each back to the
    token it had in the source file.
    """

    indptr: np.ndarray
    indices: np.ndarray
    ids: tuple = ()
    load_stats: LoadStats | None = field(default=None, compare=False)

    def __post_init__(self):
        self.indptr.setflags(write=False)
        self.indices.setflags(write=False)
        if not self.ids:
            object.__setattr__(self, "ids", tuple(str(i) for i in range(self.n)))

    @classmethod
    def from_edges(cls, n: int, edges, ids: Sequence = ()) -> "Graph":
        """Build a graph on ``n`` vertices, dropping loops and duplicate edges."""
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if len(edges) and (edges.min() < 0 or edges.max() >= n):
            raise ValueError("edge endpoint out of range")
        edges = edges[edges[:, 0] != edges[:, 1]]
        lo = np.minimum(edges[:, 0], edges[:, 1])
        hi = np.maximum(edges[:, 0], edges[:, 1])
        und = np.unique(np.stack([lo, hi], axis=1), axis=0) if len(edges) else edges
        src = np.concatenate([und[:, 0], und[:, 1]])
        dst = np.concatenate([und[:, 1], und[:, 0]])
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(indptr, src + 1, 1)
        indptr = np.cumsum(indptr)
        return cls(indptr, dst.astype(np.int64), tuple(ids))

    @property
    def n(self) -> int:
        return len(self.indptr) - 1

    @property
    def m(self) -> int:
        return len(self.indices) // 2

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def degree(self, v: int) -> int:
        return int(self.indptr[v + 1] - self.indptr[v])

    def has_edge(self, u: int, v: int) -> bool:
        nb = self.neighbors(u)
        i = np.searchsorted(nb, v)
        return bool(i < len(nb) and nb[i] == v)

    def edges(self) -> np.ndarray:
        """Edge array of shape (m, 2) with ``u < v``, sorted lexicographically."""
        src = np.repeat(np.arange(self.n), self.degrees)
        mask = src < self.indices
        return np.stack([src[mask], self.indices[mask]], axis=1)

    def edge_keys(self) -> np.ndarray:
        e = self.edges()
        return e[:, 0] * self.n + e[:, 1]

    def subgraph_edges(self, keep) -> "Graph":
        """Graph on the same vertex set restricted to the edges ``keep``."""
        return Graph.from_edges(self.n, keep, self.ids)

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(np.int64(self.n).tobytes())
        h.update(np.ascontiguousarray(self.edges(), dtype=np.int64).tobytes())
        return h.hexdigest()[:16]

    def to_networkx(self):
        import networkx as nx

        g = nx.Graph()
        g.add_nodes_from(range(self.n))
        g.add_edges_from(map(tuple, self.edges()))
        return g

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (np.array_equal(self.indptr, other.indptr)
                and np.array_equal(self.indices, other.indices))

    def __hash__(self):
        return hash(self.digest())

    def __repr__(self):
        return f"Graph(n={self.n}, m={self.m})"


def _open_text(source):
    if isinstance(source, (str, os.PathLike)):
        return open(source, "r", encoding="utf-8"), True
    if isinstance(source, (bytes, bytearray)):
        return io.StringIO(source.decode("utf-8")), True
    if isinstance(source, io.TextIOBase):
        return source, False
    return io.TextIOWrapper(source, encoding="utf-8"), False


def _is_int(tok: str) -> bool:
    try:
        int(tok)
    except ValueError:
        return False
    return True


def load_edge_list(source) -> Graph:
    """Read a whitespace-separated edge list.

    Lines starting with ``#`` (and blank lines) are skipped; any extra
    columns after the two endpoints, such as weights, are ignored.
    Tokens are renumbered to ``0..n-1``: numerically if every token is an
    integer, otherwise in order of first appearance.

    Raises
    ------
    GraphFormatError
        On a line with fewer than two tokens, or if no edges were read.
    """
    fh, close = _open_text(source)
    pairs = []
    nlines = 0
    try:
        for lineno, line in enumerate(fh, 1):
            s = line.strip()
            if not s or s.startswith("#") or s.startswith("%"):
                continue
            toks = s.split()
            if len(toks) < 2:
                raise GraphFormatError(f"line {lineno}: expected two vertex tokens, got {s!r}")
            pairs.append((toks[0], toks[1]))
            nlines += 1
    finally:
        if close:
            fh.close()
    if not pairs:
        raise GraphFormatError("empty graph: no edges found")

    seen = {}
    for a, b in pairs:
        seen.setdefault(a, None)
        seen.setdefault(b, None)
    tokens = list(seen)
    if all(_is_int(t) for t in tokens):
        tokens.sort(key=int)
    index = {t: i for i, t in enumerate(tokens)}
    raw = np.array([(index[a], index[b]) for a, b in pairs], dtype=np.int64)

    loops = int(np.sum(raw[:, 0] == raw[:, 1]))
    g = Graph.from_edges(len(tokens), raw, tokens)
    dups = nlines - loops - g.m
    stats = LoadStats(lines=nlines, duplicates=dups, self_loops=loops)
    object.__setattr__(g, "load_stats", stats)
    if dups or loops:
        logger.info("dropped %d duplicate edges and %d self-loops", dups, loops)
    return g


def write_edge_list(g: Graph, dest) -> None:
    fh = open(dest, "w", encoding="utf-8") if isinstance(dest, (str, os.PathLike)) else dest
    try:
        fh.write(f"# n={g.n} m={g.m}\n")
        for u, v in g.edges():
            fh.write(f"{g.ids[u]} {g.ids[v]}\n")
    finally:
        if fh is not dest:
            fh.close()


def write_id_map(g: Graph, dest) -> None:
    with open(dest, "w", encoding="utf-8") as fh:
        for i, tok in enumerate(g.ids):
            fh.write(f"{i}\t{tok}\n")


def khop_vertices(g: Graph, v: int, hops: int, cap: int) -> list[int]:
    """Breadth-first neighborhood of ``v``, ring by ring.

    Each ring is ordered by ascending vertex id and the result is cut at
    ``cap`` vertices, ``v`` first.
    """
    if hops < 1 or cap < 1:
        raise ValueError("hops and cap must be >= 1")
    out = [int(v)]
    if cap == 1:
        return out
    visited = {int(v)}
    ring = [int(v)]
    for _ in range(hops):
        nxt = set()
        for u in ring:
            for w in g.neighbors(u):
                w = int(w)
                if w not in visited:
                    nxt.add(w)
        if not nxt:
            break
        ring = sorted(nxt)
        visited.update(ring)
        out.extend(ring)
        if len(out) >= cap:
            return out[:cap]
    return out


@dataclass(frozen=True, eq=False)
class EdgeSplit:
    train_pos: np.ndarray
    train_neg: np.ndarray
    test_pos: np.ndarray
    test_neg: np.ndarray
    seed: int
    isolated_train_vertices: int = 0

    def __eq__(self, other):
        return all(np.array_equal(getattr(self, k), getattr(other, k))
                   for k in ("train_pos", "train_neg", "test_pos", "test_neg"))

    def train_pairs(self):
        X = np.concatenate([self.train_pos, self.train_neg])
        y = np.r_[np.ones(len(self.train_pos)), np.zeros(len(self.train_neg))]
        return X, y

    def test_pairs(self):
        X = np.concatenate([self.test_pos, self.test_neg])
        y = np.r_[np.ones(len(self.test_pos)), np.zeros(len(self.test_neg))]
        return X, y


def n_test_edges(m: int, test_fraction: float) -> int:
    """Round-half-up count of test edges, kept within ``[1, m - 1]``."""
    k = int(np.floor(test_fraction * m + 0.5))
    return min(max(k, 1), m - 1)


def sample_non_edges(g: Graph, count: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``count`` distinct non-edges ``(u, v)``, ``u < v``, uniformly."""
    n = g.n
    total = n * (n - 1) // 2 - g.m
    if count > total:
        raise ValueError(f"graph too dense: need {count} non-edges, only {total} exist")
    edge_keys = set(g.edge_keys().tolist())
    if g.m > 0.5 * n * (n - 1) / 2:
        iu, ju = np.triu_indices(n, 1)
        keys = iu * n + ju
        mask = ~np.isin(keys, np.fromiter(edge_keys, dtype=np.int64))
        cand = np.stack([iu[mask], ju[mask]], axis=1)
        pick = rng.choice(len(cand), size=count, replace=False)
        return cand[pick]
    chosen = {}
    while len(chosen) < count:
        batch = rng.integers(0, n, size=(2 * (count - len(chosen)) + 16, 2))
        for u, v in batch:
            if u == v:
                continue
            if u > v:
                u, v = v, u
            key = int(u) * n + int(v)
            if key in edge_keys or key in chosen:
                continue
            chosen[key] = (int(u), int(v))
            if len(chosen) == count:
                break
    return np.array(list(chosen.values()), dtype=np.int64).reshape(-1, 2)


def split_edges(g: Graph, test_fraction: float = 0.1, seed: int = 0) -> EdgeSplit:
    """Random train/test split of the edges with balanced negative samples.

    Test vertices left without any training edge are counted, not repaired.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must lie in (0, 1)")
    if g.m < 2:
        raise ValueError("need at least two edges to split")
    rng = np.random.default_rng(seed)
    edges = g.edges()
    perm = rng.permutation(g.m)
    k = n_test_edges(g.m, test_fraction)
    test_pos = edges[np.sort(perm[:k])]
    train_pos = edges[np.sort(perm[k:])]
    neg = sample_non_edges(g, g.m, rng)
    test_neg, train_neg = neg[:k], neg[k:]
    train_deg = np.bincount(train_pos.ravel(), minlength=g.n)
    isolated = int(np.sum((train_deg == 0) & (g.degrees > 0)))
    if isolated:
        logger.info("%d vertices have no training edge after the split", isolated)
    return EdgeSplit(train_pos, train_neg, test_pos, test_neg, seed, isolated)


_SPLIT_SECTIONS = ("train_pos", "train_neg", "test_pos", "test_neg")


def write_split(split: EdgeSplit, dest, header: dict | None = None) -> None:
    with open(dest, "w", encoding="utf-8") as fh:
        fh.write(f"# seed={split.seed}\n")
        for k, v in (header or {}).items():
            fh.write(f"# {k}={v}\n")
        for name in _SPLIT_SECTIONS:
            fh.write(f"%{name}\n")
            for u, v in getattr(split, name):
                fh.write(f"{u} {v}\n")


def read_split(source) -> EdgeSplit:
    sections = {name: [] for name in _SPLIT_SECTIONS}
    seed = 0
    current = None
    with open(source, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.strip()
            if not s:
                continue
            if s.startswith("#"):
                if s[1:].strip().startswith("seed="):
                    seed = int(s.split("=", 1)[1])
                continue
            if s.startswith("%"):
                current = s[1:]
                if current not in sections:
                    raise GraphFormatError(f"line {lineno}: unknown section {s!r}")
                continue
            if current is None:
                raise GraphFormatError(f"line {lineno}: pair outside of a section")
            toks = s.split()
            if len(toks) != 2:
                raise GraphFormatError(f"line {lineno}: expected a vertex pair")
            sections[current].append((int(toks[0]), int(toks[1])))
    arrs = {k: np.array(v, dtype=np.int64).reshape(-1, 2) for k, v in sections.items()}
    return EdgeSplit(seed=seed, **arrs)


@dataclass(frozen=True)
class LabeledNodes:
    labels: dict
    train_ids: tuple
    test_ids: tuple

    def __post_init__(self):
        if set(self.train_ids) & set(self.test_ids):
            raise ValueError("train and test vertices overlap")
        missing = [v for v in (*self.train_ids, *self.test_ids) if v not in self.labels]
        if missing:
            raise ValueError(f"unlabeled vertices in split: {missing[:5]}")

    @property
    def classes(self):
        return sorted(set(self.labels.values()))


def read_labels(source, g: Graph) -> dict:
    """Read ``vertex<TAB>class`` lines into ``{vertex index: class label}``."""
    index = {tok: i for i, tok in enumerate(g.ids)}
    labels = {}
    with open(source, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            toks = s.split()
            if len(toks) != 2:
                raise GraphFormatError(f"line {lineno}: expected 'vertex<TAB>class'")
            if toks[0] not in index:
                continue
            labels[index[toks[0]]] = toks[1]
    return labels


def stratified_node_split(labels: dict, per_class: int = 20, seed: int = 0) -> LabeledNodes:
    """``per_class`` training vertices per class, the rest for testing."""
    rng = np.random.default_rng(seed)
    by_class = {}
    for v, c in sorted(labels.items()):
        by_class.setdefault(c, []).append(v)
    train = []
    for c in sorted(by_class):
        members = np.array(by_class[c])
        take = min(per_class, max(len(members) - 1, 1))
        train.extend(rng.choice(members, size=take, replace=False).tolist())
    train_set = set(train)
    test = [v for v in sorted(labels) if v not in train_set]
    return LabeledNodes(dict(labels), tuple(sorted(train)), tuple(test))


def read_node_split(source, labels: dict, g: Graph) -> LabeledNodes:
    """Read ``%train`` / ``%test`` sections of vertex ids (file tokens)."""
    index = {tok: i for i, tok in enumerate(g.ids)}
    parts = {"train": [], "test": []}
    current = None
    with open(source, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            if s.startswith("%"):
                current = s[1:]
                if current not in parts:
                    raise GraphFormatError(f"line {lineno}: unknown section {s!r}")
                continue
            if current is None:
                raise GraphFormatError(f"line {lineno}: vertex outside of a section")
            if s not in index:
                raise GraphFormatError(f"line {lineno}: unknown vertex {s!r}")
            parts[current].append(index[s])
    return LabeledNodes(labels, tuple(parts["train"]), tuple(parts["test"]))


def write_node_split(nodes: LabeledNodes, dest, g: Graph) -> None:
    with open(dest, "w", encoding="utf-8") as fh:
        fh.write("%train\n")
        fh.writelines(f"{g.ids[v]}\n" for v in nodes.train_ids)
        fh.write("%test\n")
        fh.writelines(f"{g.ids[v]}\n" for v in nodes.test_ids)


def connected_component(g: Graph, v: int) -> set:
    seen = {int(v)}
    stack = [int(v)]
    while stack:
        u = stack.pop()
        for w in g.neighbors(u):
            w = int(w)
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return seen


def relabel_pairs(pairs: Iterable, g: Graph) -> np.ndarray:
    index = {tok: i for i, tok in enumerate(g.ids)}
    return np.array([(index[str(a)], index[str(b)]) for a, b in pairs], dtype=np.int64)
