"""Spectral-biased random walks and paragraph-vector node embeddings."""

from .config import RunConfig, load_config
from .embedding import EmbeddingModel, NodeEmbeddings, TrainConfig, init_model, train
from .estimators import SpectralLinkPredictor, SpectralNodeClassifier, SpectralWalkEmbedding
from .evaluation import (DiagnosticReport, auc, cover_time, eval_link_prediction,
                         eval_node_classification, hitting_rank, packing_density, sweep)
from .graph import EdgeSplit, Graph, LabeledNodes, khop_vertices, load_edge_list, split_edges
from .spectral import (SpectraCache, SpectrumMeasure, build_spectra, node_spectrum,
                       normalized_laplacian, spectral_distance, symmetric_eigenvalues,
                       wasserstein_1d, wasserstein_ball)
from .walks import (BiasModel, WalkConfig, WalkCorpus, bias_row, build_bias, generate_corpus,
                    move_to, simple_walk, spectral_walk, symmetric_k_closest)

__all__ = [
    "BiasModel", "DiagnosticReport", "EdgeSplit", "EmbeddingModel", "Graph", "LabeledNodes",
    "NodeEmbeddings", "RunConfig", "SpectraCache", "SpectralLinkPredictor",
    "SpectralNodeClassifier", "SpectralWalkEmbedding", "SpectrumMeasure", "TrainConfig",
    "WalkConfig", "WalkCorpus", "auc", "bias_row", "build_bias", "build_spectra",
    "cover_time", "eval_link_prediction", "eval_node_classification", "generate_corpus",
    "hitting_rank", "init_model", "khop_vertices", "load_config", "load_edge_list",
    "move_to", "node_spectrum", "normalized_laplacian", "packing_density", "simple_walk",
    "spectral_distance", "spectral_walk", "split_edges", "sweep", "symmetric_eigenvalues",
    "symmetric_k_closest", "train", "wasserstein_1d", "wasserstein_ball",
]
