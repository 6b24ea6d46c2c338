"""Command-line pipeline: synth -> augment -> train -> eval / ablate / spectrum.

Every output file starts with a comment line carrying the config hash and
seed, so any artifact can be regenerated from its header. Exit codes: 0 on
success, 1 on pipeline errors, 2 on configuration errors.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .augment import learn_schemes, load_scheme, materialize_views, save_scheme
from .config import ConfigError, RunConfig, parse_config
from .encoder import save_params, train
from .evalsuite import evaluate_embeddings, report_rows, run_ablation
from .hetgraph import (
    HeteroGraph,
    MetaPathView,
    build_all_views,
    load_heterograph,
    save_heterograph,
)
from .spectral import graph_spectrum, normalized_laplacian
from .synthgen import generate


def _load_config(args) -> RunConfig:
    cfg = parse_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.out_dir = args.out
    cfg.validate()
    return cfg


def _resolve_graph(cfg: RunConfig) -> HeteroGraph:
    if cfg.graph_dir:
        return load_heterograph(cfg.graph_dir)
    return generate(cfg.synth_config())


def _write_tsv(path: str, rows: list[str], header: str) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# {header}\n")
        for row in rows:
            fh.write(row + "\n")


def _scheme_paths(cfg: RunConfig, metapath: str) -> tuple[str, str]:
    return (
        os.path.join(cfg.out_dir, f"scheme_{metapath}_1.tsv"),
        os.path.join(cfg.out_dir, f"scheme_{metapath}_2.tsv"),
    )


def _matches_header(path: str, header: str) -> bool:
    with open(path, encoding="utf-8") as fh:
        return fh.readline().strip() == f"# {header}"


def _ensure_schemes(cfg: RunConfig, views: list[MetaPathView], verbose: bool = True):
    """Load per-view scheme checkpoints, learning and saving any that are missing.

    A checkpoint is only reused when its header carries the current config
    hash; anything stale is re-learned and overwritten.
    """
    os.makedirs(cfg.out_dir, exist_ok=True)
    schemes = []
    for view in views:
        p1, p2 = _scheme_paths(cfg, view.metapath.name)
        if (
            os.path.isfile(p1)
            and os.path.isfile(p2)
            and _matches_header(p1, cfg.header())
            and _matches_header(p2, cfg.header())
        ):
            s1, s2 = load_scheme(p1, view), load_scheme(p2, view)
            if verbose:
                print(f"loaded schemes for {view.metapath.name}")
        else:
            s1, s2 = learn_schemes(view, cfg.aug_config())
            save_scheme(s1, p1, cfg.header())
            save_scheme(s2, p2, cfg.header())
            for scheme, tag in ((s1, 1), (s2, 2)):
                trace_rows = ["iteration\tobjective"] + [
                    f"{i}\t{v!r}" for i, v in enumerate(scheme.trace)
                ]
                _write_tsv(
                    os.path.join(cfg.out_dir, f"trace_{view.metapath.name}_{tag}.tsv"),
                    trace_rows,
                    cfg.header(),
                )
            if verbose:
                print(
                    f"learned schemes for {view.metapath.name}: "
                    f"up={s1.final_objective:.4f} down={s2.final_objective:.4f}"
                )
        schemes.append((s1, s2))
    return schemes


def _materialized_pairs(cfg: RunConfig, views, schemes):
    first, second = [], []
    for view, (s1, s2) in zip(views, schemes):
        v1, v2 = materialize_views(view, s1, s2, mode=cfg.mode, seed=cfg.seed)
        first.append(v1)
        second.append(v2)
    return first, second


# ---------------------------------------------------------------------------
# commands

def cmd_synth(cfg: RunConfig) -> int:
    g = generate(cfg.synth_config())
    target = cfg.graph_dir or os.path.join(cfg.out_dir, "graph")
    save_heterograph(g, target, header=cfg.header())
    print(f"wrote synthetic graph to {target}")
    return 0


def cmd_augment(cfg: RunConfig) -> int:
    g = _resolve_graph(cfg)
    _ensure_schemes(cfg, build_all_views(g))
    return 0


def _train_pipeline(cfg: RunConfig):
    g = _resolve_graph(cfg)
    views = build_all_views(g)
    schemes = _ensure_schemes(cfg, views, verbose=False)
    pairs = _materialized_pairs(cfg, views, schemes)
    result = train(g, pairs, cfg.train_config())
    return g, result


def cmd_train(cfg: RunConfig) -> int:
    g, result = _train_pipeline(cfg)
    emb_rows = ["\t".join(repr(float(v)) for v in row) for row in result.embeddings]
    _write_tsv(os.path.join(cfg.out_dir, "embeddings.tsv"), emb_rows, cfg.header())
    loss_rows = ["epoch\tloss"] + [f"{i}\t{v!r}" for i, v in enumerate(result.losses)]
    _write_tsv(os.path.join(cfg.out_dir, "loss_curve.tsv"), loss_rows, cfg.header())
    save_params(result.params, os.path.join(cfg.out_dir, "params.bin"))
    print(f"trained {len(result.losses)} epochs; embeddings for {g.n_target} nodes")
    return 0


def _load_embeddings(path: str) -> np.ndarray:
    with open(path, encoding="utf-8", newline="\n") as fh:
        rows = [
            [float(v) for v in line.split("\t")]
            for line in (ln.strip() for ln in fh)
            if line and not line.startswith("#")
        ]
    return np.array(rows)


def cmd_eval(cfg: RunConfig) -> int:
    emb_path = os.path.join(cfg.out_dir, "embeddings.tsv")
    if os.path.isfile(emb_path):
        g = _resolve_graph(cfg)
        embeddings = _load_embeddings(emb_path)
    else:
        g, result = _train_pipeline(cfg)
        embeddings = result.embeddings
    if g.labels is None:
        raise ValueError("evaluation requires a labeled graph")
    reports = [
        evaluate_embeddings(
            embeddings,
            g.labels,
            size,
            runs=cfg.runs,
            seed=cfg.seed,
            n_val=cfg.n_val,
            n_test=cfg.n_test,
        )
        for size in cfg.split_size_list()
    ]
    _write_tsv(os.path.join(cfg.out_dir, "metrics.tsv"), report_rows(reports), cfg.header())
    for rep in reports:
        mean, std = rep.mean_std("macro_f1")
        print(f"split {rep.split_size}: macro_f1 {mean:.4f} +/- {std:.4f}")
    return 0


def cmd_ablate(cfg: RunConfig) -> int:
    g = _resolve_graph(cfg)
    if g.labels is None:
        raise ValueError("ablation requires a labeled graph")
    rows: list[str] = []
    for size in cfg.split_size_list():
        arms = run_ablation(
            g,
            cfg.train_config(),
            cfg.aug_config(),
            labels_per_class=size,
            runs=cfg.runs,
            eval_seed=cfg.seed,
            n_val=cfg.n_val,
            n_test=cfg.n_test,
        )
        reports = [arms[name].report for name in sorted(arms)]
        chunk = report_rows(reports)
        rows.extend(chunk if not rows else chunk[1:])  # keep a single header row
        for name in sorted(arms):
            loss_rows = ["epoch\tloss"] + [
                f"{i}\t{v!r}" for i, v in enumerate(arms[name].losses)
            ]
            _write_tsv(
                os.path.join(cfg.out_dir, f"loss_curve_{name}.tsv"),
                loss_rows,
                cfg.header(),
            )
            mean, _ = arms[name].report.mean_std("macro_f1")
            print(f"split {size} arm {name}: macro_f1 {mean:.4f}")
    _write_tsv(os.path.join(cfg.out_dir, "ablation.tsv"), rows, cfg.header())
    return 0


def cmd_spectrum(cfg: RunConfig) -> int:
    g = _resolve_graph(cfg)
    for view in build_all_views(g):
        s = graph_spectrum(normalized_laplacian(view.adjacency))
        rows = ["index\teigenvalue"] + [
            f"{i}\t{float(v)!r}" for i, v in enumerate(s.eigenvalues)
        ]
        _write_tsv(
            os.path.join(cfg.out_dir, f"spectrum_{view.metapath.name}.tsv"),
            rows,
            cfg.header(),
        )
        print(f"{view.metapath.name}: {len(s.eigenvalues)} eigenvalues")
    return 0


COMMANDS = {
    "synth": cmd_synth,
    "augment": cmd_augment,
    "train": cmd_train,
    "eval": cmd_eval,
    "ablate": cmd_ablate,
    "spectrum": cmd_spectrum,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hgspec",
        description="Spectral augmentation and contrastive learning on heterogeneous graphs",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="key=value config file")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--out", default=None, help="override output directory")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
