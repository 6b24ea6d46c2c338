"""Dual-aggregation contrastive encoder over augmented meta-path views.

Two branches share the per-type feature projections: a meta-path branch
(one-layer graph convolution per view, fused by semantic attention) and a
network-schema branch (attention over typed neighborhoods of the target
nodes, fused by type-level attention). Training contrasts the two augmented
meta-path view sets against each other, and the schema branch against their
mean, with an InfoNCE loss over structure-derived positives.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from . import tensor as T
from .hetgraph import HeteroGraph, MetaPathView, build_all_views
from .tensor import Tensor


@dataclass
class TrainConfig:
    lr: float = 0.001
    dim: int = 64
    tau: float = 0.5
    lam: float = 0.5
    p_feat: float = 0.7  # keep-probability for non-target feature columns
    p_edge: float = 0.7  # keep-probability for schema edges
    epochs: int = 200
    patience: int = 50
    pos_count: int = 5
    seed: int = 0

    def validate(self) -> None:
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError("lam must lie in [0, 1]")
        for name in ("p_feat", "p_edge"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.dim <= 0 or self.epochs < 0 or self.pos_count < 0:
            raise ValueError("dim, epochs and pos_count must be nonnegative")


class EncoderParams:
    """Named trainable tensors; iteration order is fixed at construction."""

    def __init__(self):
        self.tensors: dict[str, Tensor] = {}

    def new(self, name: str, shape: tuple[int, int], rng) -> Tensor:
        t = T.xavier_init(shape, rng)
        self.tensors[name] = t
        return t

    def new_zeros(self, name: str, shape: tuple[int, int]) -> Tensor:
        t = T.parameter(np.zeros(shape))
        self.tensors[name] = t
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self.tensors[name]

    def all(self) -> list[Tensor]:
        return list(self.tensors.values())

    def names(self) -> list[str]:
        return list(self.tensors)

    @classmethod
    def build(cls, g: HeteroGraph, feats: dict[str, np.ndarray], cfg: TrainConfig):
        rng = np.random.default_rng(cfg.seed)
        d = cfg.dim
        p = cls()
        for t in g.node_types:
            p.new(f"feat_w:{t}", (feats[t].shape[1], d), rng)
            p.new_zeros(f"feat_b:{t}", (1, d))
        for mp in g.metapaths:
            p.new(f"gcn_w:{mp.name}", (d, d), rng)
        p.new("sem_w", (d, d), rng)
        p.new_zeros("sem_b", (1, d))
        p.new("sem_q", (d, 1), rng)
        rels, _ = target_relations(g)
        for r in rels:
            p.new(f"natt_src:{r.name}", (d, 1), rng)
            p.new(f"natt_nbr:{r.name}", (d, 1), rng)
        p.new("type_w", (d, d), rng)
        p.new_zeros("type_b", (1, d))
        p.new("type_q", (d, 1), rng)
        p.new("head_w1", (d, d), rng)
        p.new_zeros("head_b1", (1, d))
        p.new("head_w2", (d, d), rng)
        p.new_zeros("head_b2", (1, d))
        return p


def target_relations(g: HeteroGraph):
    """Relations touching the target type, with the neighbor type attached."""
    out = []
    for r in g.relations:
        if g.target_type == r.src_type:
            out.append((r, r.dst_type))
        elif g.target_type == r.dst_type:
            out.append((r, r.src_type))
    return [r for r, _ in out], [t for _, t in out]


def ensure_features(g: HeteroGraph) -> dict[str, np.ndarray]:
    """Per-type feature matrices, synthesizing one-hot identity where missing."""
    feats = {}
    for t in g.node_types:
        if t in g.features:
            feats[t] = g.features[t]
        else:
            feats[t] = np.eye(g.node_counts[t])
    return feats


def gcn_propagation(a: np.ndarray) -> np.ndarray:
    """Symmetric propagation matrix D~^(-1/2) (A + I) D~^(-1/2)."""
    a_hat = a + np.eye(a.shape[0])
    dinv = 1.0 / np.sqrt(a_hat.sum(axis=1))
    return dinv[:, None] * a_hat * dinv[None, :]


def _attention_pool(zs: list[Tensor], w: Tensor, b: Tensor, q: Tensor):
    """Softmax-weighted sum of same-shape embeddings; weights from mean scores."""
    scores = [T.mean_all(T.matmul(T.tanh(T.add(T.matmul(z, w), b)), q)) for z in zs]
    shift = T.constant([[max(s.item() for s in scores)]])
    exps = [T.exp(T.sub(s, shift)) for s in scores]
    total = exps[0]
    for e in exps[1:]:
        total = T.add(total, e)
    betas = [T.divide(e, total) for e in exps]
    fused = T.hadamard(betas[0], zs[0])
    for beta, z in zip(betas[1:], zs[1:]):
        fused = T.add(fused, T.hadamard(beta, z))
    return fused, np.array([b_.item() for b_ in betas])


def encode_metapath_scheme(
    views: list[MetaPathView] | list[np.ndarray],
    h: Tensor,
    params: EncoderParams,
    metapath_names: list[str] | None = None,
):
    """One-layer GCN per view, fused by semantic attention.

    Returns the fused embedding and the attention weights over views.
    """
    if not views:
        raise ValueError("empty view list")
    adjs = [v.adjacency if isinstance(v, MetaPathView) else v for v in views]
    if metapath_names is None:
        metapath_names = [v.metapath.name for v in views]
    n = h.shape[0]
    zs = []
    for a, name in zip(adjs, metapath_names):
        if a.shape[0] != n:
            raise ValueError("view node count does not match feature rows")
        prop = T.constant(gcn_propagation(a))
        zs.append(T.elu(T.matmul(prop, T.matmul(h, params[f"gcn_w:{name}"]))))
    return _attention_pool(zs, params["sem_w"], params["sem_b"], params["sem_q"])


@dataclass
class SchemaMasks:
    """Per-epoch stochastic masks for the schema branch."""

    feat_cols: dict[str, np.ndarray]  # type -> (1, d_type) 0/1 column keep mask
    edge_keep: dict[str, np.ndarray]  # relation -> (n_target, n_nbr) kept biadjacency


def draw_schema_masks(
    g: HeteroGraph, feats: dict[str, np.ndarray], cfg: TrainConfig, rng
) -> SchemaMasks:
    feat_cols = {}
    for t in g.node_types:
        d_t = feats[t].shape[1]
        if t == g.target_type or cfg.p_feat >= 1.0:
            feat_cols[t] = np.ones((1, d_t))
        else:
            feat_cols[t] = (rng.random((1, d_t)) < cfg.p_feat).astype(float)
    edge_keep = {}
    rels, _ = target_relations(g)
    for r in rels:
        biadj = g.biadjacency(r.name, g.target_type)
        if cfg.p_edge >= 1.0:
            edge_keep[r.name] = biadj
        else:
            edge_keep[r.name] = biadj * (rng.random(biadj.shape) < cfg.p_edge)
    return SchemaMasks(feat_cols=feat_cols, edge_keep=edge_keep)


def _project_type(
    x: np.ndarray, col_mask: np.ndarray, params: EncoderParams, type_name: str
) -> Tensor:
    masked = T.constant(x * col_mask)
    return T.elu(
        T.add(T.matmul(masked, params[f"feat_w:{type_name}"]), params[f"feat_b:{type_name}"])
    )


def encode_schema_scheme(
    g: HeteroGraph,
    feats: dict[str, np.ndarray],
    params: EncoderParams,
    masks: SchemaMasks,
    h_target: Tensor,
):
    """Attention aggregation over typed target neighborhoods.

    Nodes left without any kept neighbor fall back to their own projected
    feature instead of a zero row.
    """
    rels, nbr_types = target_relations(g)
    if not rels:
        raise ValueError("target type has no incident relations")
    n = g.n_target
    summaries = []
    rowhas_all = np.zeros((n, 1))
    for r, nbr_t in zip(rels, nbr_types):
        h_nbr = (
            h_target
            if nbr_t == g.target_type
            else _project_type(feats[nbr_t], masks.feat_cols[nbr_t], params, nbr_t)
        )
        keep = masks.edge_keep[r.name]
        scores = T.tanh(
            T.add(
                T.matmul(h_target, params[f"natt_src:{r.name}"]),
                T.transpose(T.matmul(h_nbr, params[f"natt_nbr:{r.name}"])),
            )
        )
        num = T.hadamard(T.exp(scores), T.constant(keep))
        den = T.sum_rows(num)
        rowhas = (keep.sum(axis=1, keepdims=True) > 0).astype(float)
        rowhas_all = np.maximum(rowhas_all, rowhas)
        den_safe = T.add(den, T.constant(1.0 - rowhas))
        alpha = T.divide(num, den_safe)
        summaries.append(T.elu(T.matmul(alpha, h_nbr)))
    fused, betas = _attention_pool(
        summaries, params["type_w"], params["type_b"], params["type_q"]
    )
    z = T.add(
        T.hadamard(fused, T.constant(rowhas_all)),
        T.hadamard(h_target, T.constant(1.0 - rowhas_all)),
    )
    return z, betas


def projection_head(z: Tensor, params: EncoderParams) -> Tensor:
    hidden = T.elu(T.add(T.matmul(z, params["head_w1"]), params["head_b1"]))
    out = T.add(T.matmul(hidden, params["head_w2"]), params["head_b2"])
    return T.row_normalize_l2(out)


def select_positives(views: list[MetaPathView], pos_count: int) -> np.ndarray:
    """Boolean positive mask from cross-view connection counts.

    Node i's positives are the pos_count nodes connected to it in the most
    views (zero-count nodes never qualify; ties break toward lower index),
    plus i itself.
    """
    adjs = [v.adjacency if isinstance(v, MetaPathView) else v for v in views]
    n = adjs[0].shape[0]
    counts = np.zeros((n, n))
    for a in adjs:
        counts += (a > 0).astype(float)
    mask = np.zeros((n, n), dtype=bool)
    order = np.arange(n)
    for i in range(n):
        row = counts[i]
        ranked = sorted(order[row > 0], key=lambda j: (-row[j], j))
        for j in ranked[:pos_count]:
            mask[i, j] = True
        mask[i, i] = True
    return mask


def contrastive_loss(
    z_a: Tensor, z_b: Tensor, positives: np.ndarray, tau: float
) -> Tensor:
    """Symmetric InfoNCE over cosine similarities with multi-positive rows."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    if z_a.shape != z_b.shape:
        raise ValueError("embedding shapes differ")
    mask = T.constant(positives.astype(float))

    def one_side(anchor: Tensor, other: Tensor) -> Tensor:
        a_n = T.row_normalize_l2(anchor)
        o_n = T.row_normalize_l2(other)
        sim = T.scale(T.matmul(a_n, T.transpose(o_n)), 1.0 / tau)
        e = T.exp(sim)
        pos = T.sum_rows(T.hadamard(e, mask))
        tot = T.sum_rows(e)
        return T.mean_all(T.sub(T.log(tot), T.log(pos)))

    return T.scale(T.add(one_side(z_a, z_b), one_side(z_b, z_a)), 0.5)


# ---------------------------------------------------------------------------
# training

@dataclass
class TrainResult:
    params: EncoderParams
    embeddings: np.ndarray
    losses: list[float] = field(default_factory=list)
    semantic_weights: np.ndarray | None = None


def _target_projection(
    g: HeteroGraph, feats: dict[str, np.ndarray], params: EncoderParams
) -> Tensor:
    ones = np.ones((1, feats[g.target_type].shape[1]))
    return _project_type(feats[g.target_type], ones, params, g.target_type)


def epoch_loss(
    g: HeteroGraph,
    adjs_a: list[np.ndarray],
    adjs_b: list[np.ndarray],
    feats: dict[str, np.ndarray],
    params: EncoderParams,
    cfg: TrainConfig,
    masks: SchemaMasks,
    positives: np.ndarray,
) -> Tensor:
    """One full loss evaluation; pure given the masks."""
    names = [mp.name for mp in g.metapaths]
    h_t = _target_projection(g, feats, params)
    z1, _ = encode_metapath_scheme(adjs_a, h_t, params, names)
    z2, _ = encode_metapath_scheme(adjs_b, h_t, params, names)
    h1, h2 = projection_head(z1, params), projection_head(z2, params)
    terms = []
    if cfg.lam > 0:
        terms.append(T.scale(contrastive_loss(h1, h2, positives, cfg.tau), cfg.lam))
    if cfg.lam < 1:
        z_sc, _ = encode_schema_scheme(g, feats, params, masks, h_t)
        h_sc = projection_head(z_sc, params)
        mean_views = T.scale(T.add(h1, h2), 0.5)
        terms.append(
            T.scale(contrastive_loss(h_sc, mean_views, positives, cfg.tau), 1.0 - cfg.lam)
        )
    loss = terms[0]
    for t in terms[1:]:
        loss = T.add(loss, t)
    return loss


def train(
    g: HeteroGraph,
    view_pairs: tuple[list[MetaPathView], list[MetaPathView]],
    cfg: TrainConfig,
) -> TrainResult:
    """Contrastive pretraining; returns trained params plus inference embeddings.

    Inference embeddings come from the unaugmented views so the evaluation
    protocol never sees the training-time perturbations.
    """
    cfg.validate()
    feats = ensure_features(g)
    params = EncoderParams.build(g, feats, cfg)
    views_orig = build_all_views(g)
    positives = select_positives(views_orig, cfg.pos_count)
    adjs_a = [v.adjacency for v in view_pairs[0]]
    adjs_b = [v.adjacency for v in view_pairs[1]]
    if len(adjs_a) != len(g.metapaths) or len(adjs_b) != len(g.metapaths):
        raise ValueError("view pair does not cover the graph's meta-paths")

    rng = np.random.default_rng(cfg.seed)
    opt = T.AdamState.for_params(params.all(), lr=cfg.lr)
    losses: list[float] = []
    best = np.inf
    stale = 0
    for _ in range(cfg.epochs):
        masks = draw_schema_masks(g, feats, cfg, rng)
        loss = epoch_loss(g, adjs_a, adjs_b, feats, params, cfg, masks, positives)
        T.backward(loss)
        T.adam_step(params.all(), opt)
        T.zero_grads(params.all())
        value = loss.item()
        losses.append(value)
        if value < best - 1e-9:
            best, stale = value, 0
        else:
            stale += 1
            if stale >= cfg.patience:
                break

    h_t = _target_projection(g, feats, params)
    z, betas = encode_metapath_scheme(views_orig, h_t, params)
    return TrainResult(
        params=params, embeddings=z.values.copy(), losses=losses, semantic_weights=betas
    )


# ---------------------------------------------------------------------------
# parameter checkpoints: length-prefixed flat f64 records

def save_params(params: EncoderParams, path: str) -> None:
    with open(path, "wb") as fh:
        for name, t in params.tensors.items():
            blob = name.encode("utf-8")
            fh.write(struct.pack("<I", len(blob)))
            fh.write(blob)
            fh.write(struct.pack("<II", *t.shape))
            fh.write(t.values.astype("<f8").tobytes())


def load_params(path: str) -> dict[str, np.ndarray]:
    out: dict[str, np.ndarray] = {}
    with open(path, "rb") as fh:
        while True:
            head = fh.read(4)
            if not head:
                break
            (name_len,) = struct.unpack("<I", head)
            name = fh.read(name_len).decode("utf-8")
            rows, cols = struct.unpack("<II", fh.read(8))
            data = np.frombuffer(fh.read(rows * cols * 8), dtype="<f8")
            out[name] = data.reshape(rows, cols).copy()
    return out


# ---------------------------------------------------------------------------
# estimator wrapper

class ContrastiveEncoder(BaseEstimator):
    """sklearn-style front end for the dual-aggregation encoder.

    fit(g, views_pair=...) trains on the given augmented view pair (the
    unaugmented views are used when none is supplied); transform(g) returns
    node embeddings for the graph's own views under the trained weights.
    """

    def __init__(
        self,
        dim: int = 64,
        lr: float = 0.001,
        tau: float = 0.5,
        lam: float = 0.5,
        p_feat: float = 0.7,
        p_edge: float = 0.7,
        epochs: int = 200,
        patience: int = 50,
        pos_count: int = 5,
        seed: int = 0,
    ):
        self.dim = dim
        self.lr = lr
        self.tau = tau
        self.lam = lam
        self.p_feat = p_feat
        self.p_edge = p_edge
        self.epochs = epochs
        self.patience = patience
        self.pos_count = pos_count
        self.seed = seed

    def _config(self) -> TrainConfig:
        return TrainConfig(
            lr=self.lr,
            dim=self.dim,
            tau=self.tau,
            lam=self.lam,
            p_feat=self.p_feat,
            p_edge=self.p_edge,
            epochs=self.epochs,
            patience=self.patience,
            pos_count=self.pos_count,
            seed=self.seed,
        )

    def fit(self, X: HeteroGraph, y=None, views_pair=None):
        if views_pair is None:
            base = build_all_views(X)
            views_pair = (base, base)
        result = train(X, views_pair, self._config())
        self.params_ = result.params
        self.embeddings_ = result.embeddings
        self.losses_ = result.losses
        self.semantic_weights_ = result.semantic_weights
        return self

    def transform(self, X: HeteroGraph) -> np.ndarray:
        if not hasattr(self, "params_"):
            raise NotFittedError("ContrastiveEncoder is not fitted")
        feats = ensure_features(X)
        h_t = _target_projection(X, feats, self.params_)
        z, _ = encode_metapath_scheme(build_all_views(X), h_t, self.params_)
        return z.values.copy()

    def fit_transform(self, X: HeteroGraph, y=None, **kwargs) -> np.ndarray:
        self.fit(X, y, **kwargs)
        return self.embeddings_
