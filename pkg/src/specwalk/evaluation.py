"""Link-prediction AUC, node-classification accuracy and walk-quality diagnostics."""

from __future__ import annotations

import itertools
import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .graph import EdgeSplit, Graph, LabeledNodes, connected_component
from .spectral import SpectraCache
from .walks import BiasModel, _draws, _walk

logger = logging.getLogger(__name__)


def auc(scores, labels) -> float:
    """Mann-Whitney AUC; tied positive/negative pairs count one half."""
    scores = np.asarray(scores, dtype=float).ravel()
    labels = np.asarray(labels).ravel().astype(bool)
    if scores.shape != labels.shape:
        raise ValueError("scores and labels differ in length")
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs both positive and negative labels")
    ranks = rankdata(scores)
    return float((ranks[labels].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def link_scores(vectors, head_w, head_b, pairs) -> np.ndarray:
    """Head output ``sigmoid(w . (x_u * x_v) + b)`` for each pair."""
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    z = (vectors[pairs[:, 0]] * vectors[pairs[:, 1]]) @ np.asarray(head_w)
    z = z + float(np.ravel(head_b)[0])
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def eval_link_prediction(vectors, head_w, head_b, split: EdgeSplit) -> float:
    if len(split.test_pos) == 0 or len(split.test_neg) == 0:
        raise ValueError("empty test set")
    pairs, labels = split.test_pairs()
    return auc(link_scores(vectors, head_w, head_b, pairs), labels)


def mean_std(values) -> tuple[float, float]:
    v = np.asarray(values, dtype=float)
    return float(v.mean()), float(v.std(ddof=1)) if v.size > 1 else 0.0


def eval_node_classification(vectors, nodes: LabeledNodes, seed: int = 0) -> float:
    """Fit a multinomial logistic head on the training vertices; test accuracy."""
    from sklearn.linear_model import LogisticRegression

    tr = np.asarray(nodes.train_ids)
    te = np.asarray(nodes.test_ids)
    y_tr = np.array([nodes.labels[v] for v in tr])
    y_te = np.array([nodes.labels[v] for v in te])
    missing = set(y_te) - set(y_tr)
    if missing:
        warnings.warn(f"classes {sorted(missing)} appear only in the test split")
    clf = LogisticRegression(max_iter=2000, random_state=seed)
    clf.fit(vectors[tr], y_tr)
    return float(np.mean(clf.predict(vectors[te]) == y_te))


# --------------------------------------------------------------------------
# walk diagnostics


@dataclass
class DiagnosticReport:
    kind: str
    grid: list
    spectral: list
    simple: list
    samples: int
    config: dict = field(default_factory=dict)
    confidence: float | None = None

    def __post_init__(self):
        if not len(self.grid) == len(self.spectral) == len(self.simple):
            raise ValueError("series lengths must match the grid")

    def write(self, dest) -> None:
        with open(dest, "w", encoding="utf-8") as fh:
            fh.write(f"# kind={self.kind}\n# samples={self.samples}\n")
            if self.confidence is not None:
                fh.write(f"# confidence={self.confidence:.6f}\n")
            for k, v in self.config.items():
                fh.write(f"# {k}={v}\n")
            fh.write("T\tspectral\tsimple\n")
            for t, a, b in zip(self.grid, self.spectral, self.simple):
                fh.write(f"{t}\t{a:.10g}\t{b:.10g}\n")


def bootstrap_confidence(better, worse, n_boot: int = 2000, seed: int = 0) -> float:
    """Fraction of paired bootstrap resamples in which ``better`` has the lower mean."""
    diff = np.asarray(worse, float) - np.asarray(better, float)
    if diff.size == 0:
        return 0.0
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, diff.size, size=(n_boot, diff.size))
    return float(np.mean(diff[idx].mean(axis=1) > 0))


def _bias_arrays(bias: BiasModel):
    return bias.indptr, bias.candidates, bias.cumulative


def _paired_walks(g, arrays, v, T, epsilon, rng):
    """A spectral and a simple walk driven by the same uniforms."""
    u = _draws(rng, T)
    sw = np.empty(T, dtype=np.int64)
    rw = np.empty(T, dtype=np.int64)
    _walk(g.indptr, g.indices, *arrays, v, float(epsilon), u, sw)
    _walk(g.indptr, g.indices, *arrays, v, 0.0, u, rw)
    return sw, rw


def distance_quantile(cache: SpectraCache, q: float, p: float = 2.0, sample: int | None = None,
                      seed: int = 0) -> float:
    """``q``-quantile of pairwise spectral distances over distinct vertex pairs."""
    D = cache.pairwise(p)
    iu = np.triu_indices(cache.n, 1)
    vals = D[iu]
    if sample is not None and sample < vals.size:
        vals = np.random.default_rng(seed).choice(vals, size=sample, replace=False)
    return float(np.quantile(vals, q))


def sample_similar_pairs(g: Graph, cache: SpectraCache, count: int = 1000,
                         percentile: float = 5.0, p: float = 2.0, seed: int = 0):
    """Ordered pairs ``(s, t)``, ``s != t``, with spectral distance at or below the
    given percentile and ``t`` reachable from ``s``."""
    D = cache.pairwise(p)
    iu = np.triu_indices(g.n, 1)
    thr = np.percentile(D[iu], percentile)
    comp = np.full(g.n, -1)
    for v in range(g.n):
        if comp[v] < 0:
            comp[list(connected_component(g, v))] = v
    ok = (D <= thr) & (comp[:, None] == comp[None, :]) & (g.degrees[:, None] > 0)
    np.fill_diagonal(ok, False)
    cand = np.argwhere(ok)
    if len(cand) == 0:
        raise ValueError("no spectrally similar pairs found")
    rng = np.random.default_rng(seed)
    pick = rng.choice(len(cand), size=count, replace=len(cand) < count)
    return cand[pick], float(thr)


def hitting_rank(g: Graph, bias: BiasModel, pairs, T: int = 100, runs: int = 10,
                 epsilon: float = 0.6, seed: int = 0) -> DiagnosticReport:
    """Mean position of the first visit to ``t`` in walks from ``s`` (``T + 1`` when
    ``t`` is never reached), for spectral and simple walks."""
    arrays = _bias_arrays(bias)
    spec, simp = [], []
    for q, (s, t) in enumerate(np.asarray(pairs)):
        rs, rr = [], []
        for r in range(runs):
            rng = np.random.default_rng([seed, q, r])
            sw, rw = _paired_walks(g, arrays, int(s), T, epsilon, rng)
            rs.append(_first_index(sw, t, T))
            rr.append(_first_index(rw, t, T))
        spec.append(np.mean(rs))
        simp.append(np.mean(rr))
    conf = bootstrap_confidence(spec, simp, seed=seed)
    return DiagnosticReport("hitting_rank", [T], [float(np.mean(spec))], [float(np.mean(simp))],
                            len(spec), {"runs": runs, "epsilon": epsilon, "seed": seed}, conf)


def _first_index(walk, t, T):
    hits = np.flatnonzero(walk[1:] == t)
    return int(hits[0]) + 1 if hits.size else T + 1


def packing_density(g: Graph, cache: SpectraCache, bias: BiasModel, starts, t_grid, c: float,
                    runs: int = 100, epsilon: float = 0.6, p: float = 2.0, seed: int = 0
                    ) -> DiagnosticReport:
    """Per walk length, mean percentage of walk positions inside the start's
    Wasserstein ball of radius ``c``."""
    arrays = _bias_arrays(bias)
    D = cache.pairwise(p)
    t_grid = [int(t) for t in t_grid]
    Tmax = max(t_grid)
    spec = np.zeros((len(starts), len(t_grid)))
    simp = np.zeros_like(spec)
    for q, s in enumerate(starts):
        inball = D[s] <= c
        inball[s] = True
        for r in range(runs):
            rng = np.random.default_rng([seed, q, r])
            sw, rw = _paired_walks(g, arrays, int(s), Tmax, epsilon, rng)
            cs = np.cumsum(inball[sw])
            cr = np.cumsum(inball[rw])
            for j, T in enumerate(t_grid):
                spec[q, j] += cs[T - 1] / T
                simp[q, j] += cr[T - 1] / T
    spec *= 100.0 / runs
    simp *= 100.0 / runs
    conf = min(bootstrap_confidence(-spec[:, j], -simp[:, j], seed=seed)
               for j in range(len(t_grid)))
    rep = DiagnosticReport("packing_density", t_grid, spec.mean(0).tolist(), simp.mean(0).tolist(),
                           len(starts), {"runs": runs, "epsilon": epsilon, "radius": c,
                                         "seed": seed}, conf)
    rep.per_start = (spec, simp)
    return rep


def _cover_length(walk, ball_mask, size):
    seen = set()
    for i, v in enumerate(walk):
        if ball_mask[v] and v not in seen:
            seen.add(v)
            if len(seen) == size:
                return i + 1
    return len(walk)


def cover_time(g: Graph, cache: SpectraCache, bias: BiasModel, starts, c: float,
               max_T: int = 2000, runs: int = 10, epsilon: float = 0.6, p: float = 2.0,
               seed: int = 0) -> DiagnosticReport:
    """Mean number of walk positions needed to visit every vertex of the start's
    Wasserstein ball; walks that never finish are censored at ``max_T``."""
    arrays = _bias_arrays(bias)
    D = cache.pairwise(p)
    starts = np.atleast_1d(starts)
    spec, simp = [], []
    for q, s in enumerate(starts):
        mask = D[s] <= c
        mask[s] = True
        size = int(mask.sum())
        rs, rr = [], []
        for r in range(runs):
            if g.degree(int(s)) == 0:
                rs.append(1 if size == 1 else max_T)
                rr.append(rs[-1])
                continue
            rng = np.random.default_rng([seed, q, r])
            sw, rw = _paired_walks(g, arrays, int(s), max_T, epsilon, rng)
            rs.append(_cover_length(sw, mask, size))
            rr.append(_cover_length(rw, mask, size))
        spec.append(np.mean(rs))
        simp.append(np.mean(rr))
    conf = bootstrap_confidence(spec, simp, seed=seed)
    return DiagnosticReport("cover_time", [max_T], [float(np.mean(spec))], [float(np.mean(simp))],
                            len(starts), {"runs": runs, "epsilon": epsilon, "radius": c,
                                          "seed": seed}, conf)


def sweep(evaluate, grid: dict) -> list[dict]:
    """Run ``evaluate(**point)`` for every point of the cartesian ``grid``, in grid order."""
    keys = list(grid)
    rows = []
    for values in itertools.product(*(grid[k] for k in keys)):
        point = dict(zip(keys, values))
        score = evaluate(**point)
        rows.append({**point, "auc": score})
        logger.info("sweep %s -> %.4f", point, score)
    return rows


def write_sweep(rows, dest, config: dict | None = None) -> None:
    if not rows:
        raise ValueError("nothing to write")
    keys = list(rows[0])
    with open(dest, "w", encoding="utf-8") as fh:
        for k, v in (config or {}).items():
            fh.write(f"# {k}={v}\n")
        fh.write("\t".join(keys) + "\n")
        for r in rows:
            fh.write("\t".join(str(r[k]) for k in keys) + "\n")
