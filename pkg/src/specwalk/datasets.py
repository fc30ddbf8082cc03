"""Locating benchmark graphs on local disk.

Files are looked up in ``$SPECWALK_DATA_DIR`` (default: ``data/`` under the
current directory). Nothing is downloaded.

Expected layout::

    usair.txt  celegans.txt  infect-hyper.txt          edge lists
    cora.txt   cora.labels   [cora.split]               edges, vertex<TAB>class, %train/%test
    citeseer.txt citeseer.labels [citeseer.split]
"""

from __future__ import annotations

import os
from dataclasses import dataclass

from .graph import Graph, LabeledNodes, load_edge_list, read_labels, read_node_split

# published vertex and edge counts, used to catch a wrong file early
KNOWN_SIZES = {
    "usair": (332, 2126),
    "celegans": (297, 2148),
}


class DatasetUnavailable(FileNotFoundError):
    pass


def data_dir() -> str:
    return os.environ.get("SPECWALK_DATA_DIR", os.path.join(os.getcwd(), "data"))


def _path(name: str, suffix: str) -> str:
    return os.path.join(data_dir(), f"{name}{suffix}")


def load_graph(name: str) -> Graph:
    path = _path(name, ".txt")
    if not os.path.exists(path):
        raise DatasetUnavailable(
            f"dataset {name!r} not available: expected an edge list at {path} "
            "(set SPECWALK_DATA_DIR to the directory holding it)")
    g = load_edge_list(path)
    if name in KNOWN_SIZES and (g.n, g.m) != KNOWN_SIZES[name]:
        raise ValueError(f"{path}: n={g.n} m={g.m}, expected n, m = {KNOWN_SIZES[name]}")
    return g


@dataclass
class LabeledGraph:
    graph: Graph
    labels: dict
    split: LabeledNodes | None


def load_labeled(name: str) -> LabeledGraph:
    g = load_graph(name)
    lab = _path(name, ".labels")
    if not os.path.exists(lab):
        raise DatasetUnavailable(f"labels for {name!r} not available: expected {lab}")
    labels = read_labels(lab, g)
    sp = _path(name, ".split")
    split = read_node_split(sp, labels, g) if os.path.exists(sp) else None
    return LabeledGraph(g, labels, split)
