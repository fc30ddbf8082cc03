"""Command-line entry point: ``specwalk <subcommand> [options]``.

Stages share an output directory. Each stage reads the artifact of the stage
before it and checks that the graph digests agree.
"""

from __future__ import annotations

import argparse
import hashlib
import logging
import os
import sys
from dataclasses import fields

import numpy as np

from . import evaluation as ev
from .config import ConfigError, RunConfig, format_config, load_config
from .embedding import (TrainingDivergedError, load_model, read_embeddings, save_model, train,
                        write_embeddings, write_history)
from .graph import (Graph, GraphFormatError, LabeledNodes, load_edge_list, read_labels,
                    read_node_split, read_split, split_edges, stratified_node_split,
                    write_id_map, write_node_split, write_split)
from .pipeline import link_prediction_run, node_classification_run, walk_graph
from .spectral import build_spectra, load_spectra, save_spectra
from .walks import OnlineBias, build_bias, generate_corpus, read_corpus, write_corpus

logger = logging.getLogger("specwalk")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class DataError(RuntimeError):
    """Missing or inconsistent input or artifact."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# --------------------------------------------------------------------------
# artifacts


ARTIFACTS = {
    "spectra": ("spectra.txt", "spectra.bin"),
    "split": ("split.txt",),
    "node_split": ("node_split.txt",),
    "walks": ("walks.txt",),
    "embeddings": ("embeddings.txt",),
    "model": ("model.npz",),
}
PRODUCER = {"spectra": "spectra", "split": "spectra", "node_split": "spectra",
            "walks": "walks", "embeddings": "train", "model": "train"}


def artifact(out: str, kind: str) -> str:
    for name in ARTIFACTS[kind]:
        path = os.path.join(out, name)
        if os.path.exists(path):
            return path
    raise DataError(f"missing {ARTIFACTS[kind][0]} in {out!r}; "
                    f"run `specwalk {PRODUCER[kind]}` with the same --out first")


def file_digest(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()[:16]


def read_header(path: str) -> dict:
    meta = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            if "=" in line:
                k, v = line[1:].split("=", 1)
                meta[k.strip()] = v.strip()
    return meta


def _expect(found: str, wanted: str, what: str, producer: str) -> None:
    if found != wanted:
        raise DataError(f"{what} was built from a different graph (digest {found} != {wanted}); "
                        f"rerun `specwalk {producer}`")


def _config_header(cfg: RunConfig) -> dict:
    return {f"cfg.{k}": v for k, v in cfg.as_dict().items()}


# --------------------------------------------------------------------------
# shared loading


def _load_graph(cfg: RunConfig) -> Graph:
    if not cfg.dataset:
        raise ConfigError("no dataset given; pass --dataset or set `dataset` in the config")
    if not os.path.exists(cfg.dataset):
        raise DataError(f"dataset {cfg.dataset!r} not found")
    return load_edge_list(cfg.dataset)


def _is_nc(cfg: RunConfig) -> bool:
    return bool(cfg.labels)


def _load_nodes(cfg: RunConfig, g: Graph) -> LabeledNodes:
    labels = read_labels(cfg.labels, g)
    path = os.path.join(cfg.output_dir, "node_split.txt")
    if os.path.exists(path):
        return read_node_split(path, labels, g)
    raise DataError(f"missing node_split.txt in {cfg.output_dir!r}; run `specwalk spectra` first")


def _walk_graph(cfg: RunConfig, g: Graph):
    """Graph the walks run on, plus the edge split when predicting links."""
    if _is_nc(cfg):
        return g, None
    split = read_split(artifact(cfg.output_dir, "split"))
    meta = read_header(os.path.join(cfg.output_dir, "split.txt"))
    _expect(meta.get("graph", ""), g.digest(), "split.txt", "spectra")
    return walk_graph(g, split, cfg), split


def _bias(cfg, wg, cache, online=False):
    if online:
        return OnlineBias(wg, cache, cfg.k, cfg.ot_order)
    return build_bias(wg, cache, cfg.k, cfg.ot_order)


# --------------------------------------------------------------------------
# stages


def cmd_spectra(cfg: RunConfig, args) -> int:
    g = _load_graph(cfg)
    os.makedirs(cfg.output_dir, exist_ok=True)
    write_id_map(g, os.path.join(cfg.output_dir, "ids.tsv"))
    if _is_nc(cfg):
        labels = read_labels(cfg.labels, g)
        nodes = (read_node_split(cfg.node_split, labels, g) if cfg.node_split
                 else stratified_node_split(labels, cfg.per_class, cfg.seed))
        write_node_split(nodes, os.path.join(cfg.output_dir, "node_split.txt"), g)
        wg = g
    else:
        split = split_edges(g, cfg.test_fraction, cfg.seed)
        write_split(split, os.path.join(cfg.output_dir, "split.txt"),
                    {"graph": g.digest(), "test_fraction": cfg.test_fraction,
                     "isolated_train_vertices": split.isolated_train_vertices})
        wg = walk_graph(g, split, cfg)
    cache = build_spectra(wg, cfg.hops, cfg.cap, cfg.threads)
    name = "spectra.bin" if args.binary else "spectra.txt"
    for stale in ARTIFACTS["spectra"]:
        p = os.path.join(cfg.output_dir, stale)
        if stale != name and os.path.exists(p):
            os.remove(p)
    save_spectra(cache, os.path.join(cfg.output_dir, name), binary=args.binary)
    print(f"spectra: n={g.n} m={g.m} walk-graph m={wg.m} digest={cache.digest}")
    return EXIT_OK


def _load_cache(cfg, wg):
    cache = load_spectra(artifact(cfg.output_dir, "spectra"))
    _expect(cache.digest, wg.digest(), "the spectra cache", "spectra")
    if (cache.hops, cache.cap) != (cfg.hops, cfg.cap):
        raise DataError(f"spectra cache uses hops={cache.hops} cap={cache.cap}, config has "
                        f"hops={cfg.hops} cap={cfg.cap}; rerun `specwalk spectra`")
    return cache


def cmd_walks(cfg: RunConfig, args) -> int:
    g = _load_graph(cfg)
    wg, _ = _walk_graph(cfg, g)
    cache = _load_cache(cfg, wg)
    bias = _bias(cfg, wg, cache, args.online_bias)
    corpus = generate_corpus(wg, bias, cfg.walk_config(), cfg.threads)
    header = {"graph": wg.digest(),
              "spectra": file_digest(artifact(cfg.output_dir, "spectra")),
              "walks_per_node": cfg.walks_per_node, "walk_length": cfg.walk_length,
              "epsilon": cfg.epsilon, "k": cfg.k, "ot_order": cfg.ot_order, "seed": cfg.seed}
    write_corpus(corpus, os.path.join(cfg.output_dir, "walks.txt"), header)
    print(f"walks: {len(corpus)} walks of length {corpus.walk_length} (epsilon={cfg.epsilon})")
    return EXIT_OK


def _task_data(cfg, g, split):
    if _is_nc(cfg):
        nodes = _load_nodes(cfg, g)
        classes = nodes.classes
        index = {c: i for i, c in enumerate(classes)}
        tr = np.asarray(nodes.train_ids, dtype=np.int64)
        return "node-classification", (tr, np.array([index[nodes.labels[v]] for v in tr]))
    return "link-prediction", split.train_pairs()


def cmd_train(cfg: RunConfig, args) -> int:
    g = _load_graph(cfg)
    wg, split = _walk_graph(cfg, g)
    walks_path = artifact(cfg.output_dir, "walks")
    meta = read_header(walks_path)
    _expect(meta.get("graph", ""), wg.digest(), "walks.txt", "walks")
    corpus = read_corpus(walks_path)
    task, data = _task_data(cfg, g, split)
    tcfg = cfg.train_config(task)
    emb, model = train(wg, corpus, tcfg, data)
    out = cfg.output_dir
    write_embeddings(emb, os.path.join(out, "embeddings.txt"))
    write_history(emb.history, os.path.join(out, "history.tsv"))
    save_model(model, os.path.join(out, "model.npz"),
               {"graph": wg.digest(), "walks": file_digest(walks_path), "task": task,
                "embeddings": file_digest(os.path.join(out, "embeddings.txt"))})
    last = emb.history[-1]
    print(f"train: {tcfg.epochs} epochs, final L_ov={last[4]:.6g}")
    return EXIT_OK


def _write_runs(path, cfg, name, values, extra=None):
    mean, std = ev.mean_std(values)
    with open(path, "w", encoding="utf-8") as fh:
        for k, v in {**_config_header(cfg), **(extra or {})}.items():
            fh.write(f"# {k}={v}\n")
        fh.write(f"run\tseed\t{name}\n")
        for r, v in enumerate(values):
            fh.write(f"{r}\t{cfg.seed + r}\t{v:.10g}\n")
        fh.write(f"# mean={mean:.10g}\n# std={std:.10g}\n")
    return mean, std


def cmd_eval_lp(cfg: RunConfig, args) -> int:
    if _is_nc(cfg):
        raise ConfigError("eval-lp needs a link-prediction run; drop `labels` from the config")
    g = _load_graph(cfg)
    wg, split = _walk_graph(cfg, g)
    model, meta = load_model(artifact(cfg.output_dir, "model"))
    _expect(meta.get("graph", ""), wg.digest(), "model.npz", "train")
    if meta.get("task") != "link-prediction":
        raise DataError("model.npz was trained for node classification; rerun `specwalk train`")
    aucs = [ev.eval_link_prediction(model.node_vectors(), model.head_w, model.head_b, split)]
    for r in range(1, cfg.runs):
        aucs.append(link_prediction_run(g, cfg, cfg.seed + r))
        logger.info("run %d AUC %.4f", r + 1, aucs[-1])
    mean, std = _write_runs(os.path.join(cfg.output_dir, "lp_report.tsv"), cfg, "auc", aucs,
                            {"model": file_digest(artifact(cfg.output_dir, "model"))})
    print(f"AUC {mean:.4f} ± {std:.4f} over {len(aucs)} run(s)")
    return EXIT_OK


def cmd_eval_nc(cfg: RunConfig, args) -> int:
    if not _is_nc(cfg):
        raise ConfigError("eval-nc needs `labels` (vertex<TAB>class file)")
    g = _load_graph(cfg)
    nodes = _load_nodes(cfg, g)
    emb_path = artifact(cfg.output_dir, "embeddings")
    _, meta = load_model(artifact(cfg.output_dir, "model"))
    if meta.get("embeddings") != file_digest(emb_path):
        raise DataError("embeddings.txt does not match model.npz; rerun `specwalk train`")
    emb = read_embeddings(emb_path)
    accs = [ev.eval_node_classification(emb.vectors, nodes, cfg.seed)]
    for r in range(1, cfg.runs):
        accs.append(node_classification_run(g, nodes, cfg, cfg.seed + r))
    mean, std = _write_runs(os.path.join(cfg.output_dir, "nc_report.tsv"), cfg, "accuracy", accs)
    print(f"accuracy {mean:.4f} ± {std:.4f} over {len(accs)} run(s)")
    return EXIT_OK


def cmd_diagnose(cfg: RunConfig, args) -> int:
    g = _load_graph(cfg)
    wg, _ = _walk_graph(cfg, g)
    cache = _load_cache(cfg, wg)
    bias = build_bias(wg, cache, cfg.k, cfg.ot_order)
    c = args.radius if args.radius is not None else ev.distance_quantile(
        cache, 0.10, cfg.ot_order, sample=100_000, seed=cfg.seed)
    pairs, thr = ev.sample_similar_pairs(wg, cache, args.pairs, 5.0, cfg.ot_order, cfg.seed)
    rng = np.random.default_rng(cfg.seed)
    active = np.flatnonzero(wg.degrees > 0)
    starts = rng.choice(active, size=min(args.starts, len(active)), replace=False)
    common = {**_config_header(cfg), "pair_threshold": thr}
    reports = [
        ev.hitting_rank(wg, bias, pairs, cfg.walk_length, args.runs_diag, cfg.epsilon, cfg.seed),
        ev.packing_density(wg, cache, bias, starts, args.t_grid, c, args.runs_diag, cfg.epsilon,
                           cfg.ot_order, cfg.seed),
        ev.cover_time(wg, cache, bias, starts, c, args.max_t, args.runs_diag, cfg.epsilon,
                      cfg.ot_order, cfg.seed),
    ]
    for rep in reports:
        rep.config.update(common)
        rep.write(os.path.join(cfg.output_dir, f"{rep.kind}.tsv"))
        print(f"{rep.kind}: spectral={rep.spectral} simple={rep.simple} "
              f"confidence={rep.confidence:.3f}")
    return EXIT_OK


def _parse_grid(items) -> dict:
    grid = {}
    keys = {f.name: f.type for f in fields(RunConfig)}
    for item in items or []:
        if "=" not in item:
            raise ConfigError(f"grid entry {item!r} must look like key=v1,v2")
        key, values = item.split("=", 1)
        key = {"bias_prob": "epsilon", "C": "window", "T": "walk_length"}.get(
            key.replace("-", "_"), key.replace("-", "_"))
        if key not in keys:
            raise ConfigError(f"unknown grid key {key!r}")
        cast = {"int": int, "float": float}.get(keys[key], str)
        grid[key] = [cast(v) for v in values.split(",") if v]
    if not grid:
        raise ConfigError("sweep needs at least one --grid key=v1,v2")
    return grid


def cmd_sweep(cfg: RunConfig, args) -> int:
    g = _load_graph(cfg)
    grid = _parse_grid(args.grid)

    def evaluate(**point):
        res = [link_prediction_run(g, cfg.replace(**point), cfg.seed + r) for r in range(cfg.runs)]
        return float(np.mean(res))

    rows = ev.sweep(evaluate, grid)
    os.makedirs(cfg.output_dir, exist_ok=True)
    ev.write_sweep(rows, os.path.join(cfg.output_dir, "sweep.tsv"), _config_header(cfg))
    aucs = [r["auc"] for r in rows]
    print(f"sweep: {len(rows)} points, AUC range {min(aucs):.4f}..{max(aucs):.4f}")
    return EXIT_OK


def cmd_pipeline(cfg: RunConfig, args) -> int:
    args.binary = False
    args.online_bias = False
    for step in (cmd_spectra, cmd_walks, cmd_train):
        step(cfg, args)
    with open(os.path.join(cfg.output_dir, "run.cfg"), "w", encoding="utf-8") as fh:
        fh.write(format_config(cfg))
    return (cmd_eval_nc if _is_nc(cfg) else cmd_eval_lp)(cfg, args)


COMMANDS = {
    "spectra": (cmd_spectra, "split the graph and cache neighborhood spectra"),
    "walks": (cmd_walks, "generate the spectral-biased walk corpus"),
    "train": (cmd_train, "train embeddings on the walk corpus"),
    "eval-lp": (cmd_eval_lp, "link-prediction AUC"),
    "eval-nc": (cmd_eval_nc, "node-classification accuracy"),
    "diagnose": (cmd_diagnose, "hitting rank, packing density and cover time"),
    "sweep": (cmd_sweep, "AUC over a hyperparameter grid"),
    "pipeline": (cmd_pipeline, "spectra, walks, train and evaluation in one go"),
}


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat `key = value` config file")
    p.add_argument("--out", dest="output_dir", help="artifact directory")
    p.add_argument("--bias-prob", dest="epsilon", type=float,
                   help="probability of a spectral step (0 gives a simple walk)")
    for f in fields(RunConfig):
        if f.name in ("output_dir", "epsilon"):
            continue
        flag = "--" + f.name.replace("_", "-")
        if f.type == "bool":
            p.add_argument(flag, dest=f.name, action=argparse.BooleanOptionalAction,
                           default=None)
        else:
            cast = {"int": int, "float": float}.get(f.type, str)
            p.add_argument(flag, dest=f.name, type=cast, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="specwalk", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, (_, help_) in COMMANDS.items():
        p = sub.add_parser(name, help=help_)
        _add_config_flags(p)
        if name == "spectra":
            p.add_argument("--binary", action="store_true", help="write spectra.bin")
        if name == "walks":
            p.add_argument("--online-bias", action="store_true",
                           help="compute bias rows on demand instead of precomputing them")
        if name == "diagnose":
            p.add_argument("--pairs", type=int, default=1000)
            p.add_argument("--starts", type=int, default=100)
            p.add_argument("--diag-runs", dest="runs_diag", type=int, default=100)
            p.add_argument("--t-grid", type=lambda s: [int(x) for x in s.split(",")],
                           default=[40, 80, 120, 160, 200])
            p.add_argument("--max-t", type=int, default=2000)
            p.add_argument("--radius", type=float, default=None,
                           help="Wasserstein ball radius (default: 10th distance percentile)")
        if name == "sweep":
            p.add_argument("--grid", action="append",
                           help="key=v1,v2 (repeatable); aliases C, T, bias-prob")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = {f.name: getattr(args, f.name, None) for f in fields(RunConfig)}
    func = COMMANDS[args.command][0]
    try:
        cfg = load_config(args.config, **overrides)
        return func(cfg, args)
    except ConfigError as exc:
        print(f"specwalk: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, GraphFormatError, FileNotFoundError, KeyError) as exc:
        print(f"specwalk: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (TrainingDivergedError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"specwalk: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"specwalk: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
