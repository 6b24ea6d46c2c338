"""Heterogeneous graph data model, meta-path views, and the on-disk format.

A graph lives in a directory:

    manifest.tsv            node_type / relation / metapath / target lines
    edges_<relation>.tsv    src <TAB> dst [<TAB> weight], 0-based indices
    features_<type>.tsv     header "n d", then n rows of d floats
    labels.tsv              node_index <TAB> class_index (target nodes)

All files are UTF-8 with LF line endings. Node ordering is fixed by file
order, so everything downstream is bit-reproducible.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .validation import check_adjacency


class GraphFormatError(ValueError):
    """Malformed graph directory or manifest."""


@dataclass(frozen=True)
class Relation:
    name: str
    src_type: str
    dst_type: str


@dataclass(frozen=True)
class MetaPath:
    """Typed path template returning to the target type.

    ``node_types`` has one more element than ``relations``; each relation
    must connect consecutive types, in either direction.
    """

    name: str
    node_types: tuple[str, ...]
    relations: tuple[str, ...]

    @property
    def length(self) -> int:
        return len(self.relations)


@dataclass
class HeteroGraph:
    node_types: list[str]
    node_counts: dict[str, int]
    relations: list[Relation]
    # relation name -> (m, 3) float array of (src, dst, weight) rows
    edges: dict[str, np.ndarray]
    features: dict[str, np.ndarray]
    target_type: str
    metapaths: list[MetaPath] = field(default_factory=list)
    labels: np.ndarray | None = None

    @property
    def n_target(self) -> int:
        return self.node_counts[self.target_type]

    def relation_by_name(self, name: str) -> Relation:
        for r in self.relations:
            if r.name == name:
                return r
        raise KeyError(f"unknown relation {name!r}")

    def biadjacency(self, relation: str, src_type: str) -> np.ndarray:
        """0/1 incidence matrix of a relation, oriented so rows are ``src_type``."""
        rel = self.relation_by_name(relation)
        n_src = self.node_counts[rel.src_type]
        n_dst = self.node_counts[rel.dst_type]
        m = np.zeros((n_src, n_dst))
        e = self.edges[relation]
        if len(e):
            m[e[:, 0].astype(int), e[:, 1].astype(int)] = 1.0
        if src_type == rel.src_type:
            return m
        if src_type == rel.dst_type:
            return m.T
        raise GraphFormatError(
            f"relation {relation!r} does not touch node type {src_type!r}"
        )


@dataclass
class MetaPathView:
    """Dense weighted homogeneous graph over target nodes for one meta-path."""

    metapath: MetaPath
    adjacency: np.ndarray

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]


@dataclass
class NetworkSchema:
    nodes: list[str]
    edges: list[tuple[str, str, str]]  # (src_type, dst_type, relation name)


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def is_valid(self) -> bool:
        return not self.violations


# ---------------------------------------------------------------------------
# directory I/O

def _read_lines(path: str) -> list[str]:
    with open(path, encoding="utf-8", newline="\n") as fh:
        return [
            line.rstrip("\n")
            for line in fh
            if line.strip() and not line.startswith("#")
        ]


def load_heterograph(path: str) -> HeteroGraph:
    """Load and fully validate a graph directory."""
    manifest = os.path.join(path, "manifest.tsv")
    if not os.path.isfile(manifest):
        raise GraphFormatError(f"missing manifest: {manifest}")

    node_types: list[str] = []
    node_counts: dict[str, int] = {}
    relations: list[Relation] = []
    metapaths: list[MetaPath] = []
    target_type: str | None = None

    for line in _read_lines(manifest):
        parts = line.split("\t")
        kind = parts[0]
        if kind == "node_type":
            name, count = parts[1], int(parts[2])
            if count < 0:
                raise GraphFormatError(f"negative node count for type {name!r}")
            node_types.append(name)
            node_counts[name] = count
        elif kind == "relation":
            relations.append(Relation(parts[1], parts[2], parts[3]))
        elif kind == "metapath":
            metapaths.append(
                MetaPath(parts[1], tuple(parts[2].split(",")), tuple(parts[3].split(",")))
            )
        elif kind == "target":
            target_type = parts[1]
        else:
            raise GraphFormatError(f"unknown manifest line kind {kind!r}")

    if target_type is None:
        raise GraphFormatError("manifest declares no target type")
    if target_type not in node_counts:
        raise GraphFormatError(f"target type {target_type!r} not declared")
    for r in relations:
        for t in (r.src_type, r.dst_type):
            if t not in node_counts:
                raise GraphFormatError(f"relation {r.name!r} uses undeclared type {t!r}")

    edges: dict[str, np.ndarray] = {}
    for r in relations:
        epath = os.path.join(path, f"edges_{r.name}.tsv")
        if not os.path.isfile(epath):
            raise GraphFormatError(f"missing edge file for relation {r.name!r}")
        rows = []
        for line in _read_lines(epath):
            cols = line.split("\t")
            src, dst = int(cols[0]), int(cols[1])
            w = float(cols[2]) if len(cols) > 2 else 1.0
            if w <= 0:
                raise GraphFormatError(
                    f"non-positive weight {w} in relation {r.name!r}"
                )
            if not (0 <= src < node_counts[r.src_type]) or not (
                0 <= dst < node_counts[r.dst_type]
            ):
                raise GraphFormatError(
                    f"dangling endpoint ({src}, {dst}) in relation {r.name!r}"
                )
            rows.append((src, dst, w))
        edges[r.name] = (
            np.array(rows, dtype=np.float64) if rows else np.zeros((0, 3))
        )

    features: dict[str, np.ndarray] = {}
    for t in node_types:
        fpath = os.path.join(path, f"features_{t}.tsv")
        if not os.path.isfile(fpath):
            continue
        lines = _read_lines(fpath)
        n, d = (int(v) for v in lines[0].split())
        mat = np.array(
            [[float(v) for v in line.split("\t")] for line in lines[1 : n + 1]]
        )
        if mat.shape != (n, d):
            raise GraphFormatError(f"feature file for {t!r} does not match its header")
        if n != node_counts[t]:
            raise GraphFormatError(
                f"feature row count {n} != node count {node_counts[t]} for type {t!r}"
            )
        features[t] = mat

    labels = None
    lpath = os.path.join(path, "labels.tsv")
    if os.path.isfile(lpath):
        labels = np.full(node_counts[target_type], -1, dtype=np.int64)
        for line in _read_lines(lpath):
            idx, cls = (int(v) for v in line.split("\t"))
            if not 0 <= idx < node_counts[target_type]:
                raise GraphFormatError(f"label index {idx} out of range")
            labels[idx] = cls

    g = HeteroGraph(
        node_types=node_types,
        node_counts=node_counts,
        relations=relations,
        edges=edges,
        features=features,
        target_type=target_type,
        metapaths=metapaths,
        labels=labels,
    )
    for p in g.metapaths:
        _check_metapath(g, p)
    report = validate_heterograph(g)
    if not report.is_valid:
        raise GraphFormatError("; ".join(report.violations))
    return g


def save_heterograph(g: HeteroGraph, path: str, header: str | None = None) -> None:
    """Write a graph directory; inverse of :func:`load_heterograph`."""
    os.makedirs(path, exist_ok=True)
    lines = [f"node_type\t{t}\t{g.node_counts[t]}" for t in g.node_types]
    lines += [f"relation\t{r.name}\t{r.src_type}\t{r.dst_type}" for r in g.relations]
    lines += [
        f"metapath\t{p.name}\t{','.join(p.node_types)}\t{','.join(p.relations)}"
        for p in g.metapaths
    ]
    lines.append(f"target\t{g.target_type}")
    _write_lines(os.path.join(path, "manifest.tsv"), lines, header)

    for r in g.relations:
        rows = [
            f"{int(s)}\t{int(d)}\t{float(w)!r}" for s, d, w in g.edges.get(r.name, ())
        ]
        _write_lines(os.path.join(path, f"edges_{r.name}.tsv"), rows, header)

    for t, mat in g.features.items():
        rows = [f"{mat.shape[0]} {mat.shape[1]}"]
        rows += ["\t".join(repr(float(v)) for v in row) for row in mat]
        _write_lines(os.path.join(path, f"features_{t}.tsv"), rows, header)

    if g.labels is not None:
        rows = [
            f"{i}\t{int(c)}" for i, c in enumerate(g.labels) if c >= 0
        ]
        _write_lines(os.path.join(path, "labels.tsv"), rows, header)


def _write_lines(path: str, lines: list[str], header: str | None = None) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if header:
            fh.write(f"# {header}\n")
        for line in lines:
            fh.write(line + "\n")


# ---------------------------------------------------------------------------
# meta-path views

def _check_metapath(g: HeteroGraph, p: MetaPath) -> None:
    if len(p.node_types) != len(p.relations) + 1:
        raise GraphFormatError(f"metapath {p.name!r} has inconsistent lengths")
    if p.length < 2:
        raise GraphFormatError(f"metapath {p.name!r} must have length >= 2")
    if p.node_types[0] != g.target_type or p.node_types[-1] != g.target_type:
        raise GraphFormatError(
            f"metapath {p.name!r} must start and end at the target type"
        )
    for t in p.node_types:
        if t not in g.node_counts:
            raise GraphFormatError(f"metapath {p.name!r} uses unknown type {t!r}")
    for i, rname in enumerate(p.relations):
        try:
            rel = g.relation_by_name(rname)
        except KeyError:
            raise GraphFormatError(
                f"metapath {p.name!r} uses unknown relation {rname!r}"
            ) from None
        a, b = p.node_types[i], p.node_types[i + 1]
        if {rel.src_type, rel.dst_type} != {a, b} and not (
            rel.src_type == a and rel.dst_type == b
        ):
            raise GraphFormatError(
                f"relation {rname!r} does not connect {a!r} and {b!r}"
            )


def build_metapath_view(g: HeteroGraph, p: MetaPath) -> MetaPathView:
    """Path-count adjacency over target nodes for one meta-path.

    Multiplies 0/1 incidence matrices along the path, zeroes the diagonal
    (self-paths carry no contrastive signal and would dominate the
    normalization), symmetrizes, and rescales so the max entry is 1.
    """
    _check_metapath(g, p)
    m = g.biadjacency(p.relations[0], p.node_types[0])
    for i in range(1, p.length):
        m = m @ g.biadjacency(p.relations[i], p.node_types[i])
    np.fill_diagonal(m, 0.0)
    m = (m + m.T) / 2.0
    return MetaPathView(metapath=p, adjacency=normalize_view_weights(m))


def normalize_view_weights(raw: np.ndarray) -> np.ndarray:
    """Divide by the max entry so weights land in [0, 1]; all-zero passes through."""
    raw = check_adjacency(raw, "raw view matrix")
    top = raw.max() if raw.size else 0.0
    return raw / top if top > 0 else raw.copy()


def build_all_views(g: HeteroGraph) -> list[MetaPathView]:
    return [build_metapath_view(g, p) for p in g.metapaths]


# ---------------------------------------------------------------------------
# schema and validation

def network_schema(g: HeteroGraph) -> NetworkSchema:
    """Type-level summary graph: one node per node type, one edge per relation."""
    return NetworkSchema(
        nodes=list(g.node_types),
        edges=[(r.src_type, r.dst_type, r.name) for r in g.relations],
    )


def validate_heterograph(g: HeteroGraph) -> ValidationReport:
    """Collect invariant violations; reports rather than raising."""
    report = ValidationReport()
    for r in g.relations:
        e = g.edges.get(r.name)
        if e is None:
            report.violations.append(f"relation {r.name!r} has no edge table")
            continue
        if len(e) == 0:
            continue
        src, dst, w = e[:, 0], e[:, 1], e[:, 2]
        if src.min() < 0 or src.max() >= g.node_counts[r.src_type]:
            report.violations.append(f"dangling endpoint in relation {r.name!r}")
        if dst.min() < 0 or dst.max() >= g.node_counts[r.dst_type]:
            report.violations.append(f"dangling endpoint in relation {r.name!r}")
        if w.min() <= 0:
            report.violations.append(f"non-positive weight in relation {r.name!r}")
    for t, mat in g.features.items():
        if mat.shape[0] != g.node_counts[t]:
            report.violations.append(
                f"feature rows {mat.shape[0]} != node count {g.node_counts[t]}"
                f" for type {t!r}"
            )
    if len(g.node_types) + len(g.relations) <= 2:
        report.warnings.append("homogeneous graph: |types| + |relations| <= 2")
    if g.target_type not in g.node_counts:
        report.violations.append(f"unknown target type {g.target_type!r}")
    if g.labels is not None and len(g.labels) != g.node_counts.get(g.target_type, -1):
        report.violations.append("label vector length != target node count")
    return report
