"""End-to-end runs: spectra, bias, walks, training and evaluation in memory."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .config import RunConfig
from .embedding import EmbeddingModel, NodeEmbeddings, train
from .evaluation import eval_link_prediction, eval_node_classification, mean_std
from .graph import EdgeSplit, Graph, LabeledNodes, split_edges
from .spectral import SpectraCache, build_spectra
from .walks import BiasModel, WalkCorpus, build_bias, generate_corpus

logger = logging.getLogger(__name__)


@dataclass
class Stages:
    graph: Graph
    cache: SpectraCache
    bias: BiasModel
    corpus: WalkCorpus | None = None
    embeddings: NodeEmbeddings | None = None
    model: EmbeddingModel | None = None


def walk_graph(g: Graph, split: EdgeSplit | None, cfg: RunConfig) -> Graph:
    """The graph walks run on: the training edges only unless configured otherwise."""
    if split is None or not cfg.walks_on_train_graph:
        return g
    return g.subgraph_edges(split.train_pos)


def prepare(g: Graph, cfg: RunConfig, cache: SpectraCache | None = None) -> Stages:
    if cache is None:
        cache = build_spectra(g, cfg.hops, cfg.cap, cfg.threads)
    bias = build_bias(g, cache, cfg.k, cfg.ot_order)
    return Stages(g, cache, bias)


def embed(stages: Stages, cfg: RunConfig, task: str = "link-prediction", task_data=None,
          seed: int | None = None) -> Stages:
    seed = cfg.seed if seed is None else seed
    corpus = generate_corpus(stages.graph, stages.bias, cfg.walk_config(seed), cfg.threads)
    emb, model = train(stages.graph, corpus, cfg.train_config(task, seed), task_data)
    stages.corpus, stages.embeddings, stages.model = corpus, emb, model
    return stages


def link_prediction_run(g: Graph, cfg: RunConfig, seed: int | None = None,
                        split: EdgeSplit | None = None) -> float:
    """Split, embed and score once; returns the test AUC."""
    seed = cfg.seed if seed is None else seed
    if split is None:
        split = split_edges(g, cfg.test_fraction, seed)
    st = embed(prepare(walk_graph(g, split, cfg), cfg), cfg, "link-prediction",
               split.train_pairs(), seed)
    return eval_link_prediction(st.embeddings.vectors, st.model.head_w, st.model.head_b, split)


def link_prediction(g: Graph, cfg: RunConfig, runs: int | None = None) -> dict:
    """Repeated link-prediction runs, seeds ``seed .. seed + runs - 1``."""
    runs = cfg.runs if runs is None else runs
    scores = []
    for r in range(runs):
        scores.append(link_prediction_run(g, cfg, cfg.seed + r))
        logger.info("run %d/%d AUC %.4f", r + 1, runs, scores[-1])
    mean, std = mean_std(scores)
    return {"aucs": scores, "mean": mean, "std": std}


def node_classification_run(g: Graph, nodes: LabeledNodes, cfg: RunConfig,
                            seed: int | None = None) -> float:
    seed = cfg.seed if seed is None else seed
    classes = sorted(set(nodes.labels.values()))
    index = {c: i for i, c in enumerate(classes)}
    tr = np.asarray(nodes.train_ids, dtype=np.int64)
    y = np.array([index[nodes.labels[v]] for v in tr], dtype=np.int64)
    st = embed(prepare(g, cfg), cfg, "node-classification", (tr, y), seed)
    return eval_node_classification(st.embeddings.vectors, nodes, seed)


def node_classification(g: Graph, nodes: LabeledNodes, cfg: RunConfig,
                        runs: int | None = None) -> dict:
    runs = cfg.runs if runs is None else runs
    scores = [node_classification_run(g, nodes, cfg, cfg.seed + r) for r in range(runs)]
    mean, std = mean_std(scores)
    return {"accuracies": scores, "mean": mean, "std": std}
