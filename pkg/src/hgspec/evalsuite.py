"""Frozen-embedding evaluation: splits, linear probe, metrics, ablations."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError
from sklearn.metrics import f1_score

from .augment import AugmentConfig, AugmentationScheme, complement_matrix, learn_schemes, materialize_views
from .encoder import TrainConfig, train
from .hetgraph import HeteroGraph, MetaPathView, build_all_views


@dataclass
class SplitSpec:
    labels_per_class: int = 20
    n_val: int = 1000
    n_test: int = 1000
    seed: int = 0


@dataclass
class Split:
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray
    scaled: bool = False

    def hash(self) -> str:
        h = hashlib.sha256()
        for part in (self.train, self.val, self.test):
            h.update(np.sort(part).astype(np.int64).tobytes())
        return h.hexdigest()[:12]


def make_split(labels: np.ndarray, spec: SplitSpec) -> Split:
    """Fixed labeled-per-class train set, then val/test from the remainder.

    Graphs too small for the requested val/test sizes fall back to 20% of
    the remaining nodes each (flagged via ``scaled``).
    """
    rng = np.random.default_rng(spec.seed)
    labeled = np.flatnonzero(labels >= 0)
    classes = np.unique(labels[labeled])
    if len(classes) < 2:
        raise ValueError("need at least 2 labeled classes")
    train_idx = []
    for c in classes:
        members = labeled[labels[labeled] == c]
        if len(members) < spec.labels_per_class:
            raise ValueError(
                f"class {c} has {len(members)} nodes < {spec.labels_per_class}"
            )
        train_idx.extend(rng.permutation(members)[: spec.labels_per_class])
    train_idx = np.array(sorted(train_idx))
    pool = rng.permutation(np.setdiff1d(labeled, train_idx))
    scaled = len(pool) < spec.n_val + spec.n_test
    n_val, n_test = (
        (spec.n_val, spec.n_test)
        if not scaled
        else (int(0.2 * len(pool)), int(0.2 * len(pool)))
    )
    if n_test == 0:
        raise ValueError("graph too small to carve out a test split")
    return Split(
        train=train_idx,
        val=np.sort(pool[:n_val]),
        test=np.sort(pool[n_val : n_val + n_test]),
        scaled=scaled,
    )


# ---------------------------------------------------------------------------
# linear probe

class LinearProbe(BaseEstimator):
    """Multinomial logistic regression by deterministic full-batch descent.

    L2 penalty on the weights (not the bias), constant step from a Lipschitz
    bound, stopping at gradient norm <= tol or max_iter sweeps.
    """

    def __init__(self, l2: float = 1e-4, max_iter: int = 2000, tol: float = 1e-6):
        self.l2 = l2
        self.max_iter = max_iter
        self.tol = tol

    def fit(self, X: np.ndarray, y: np.ndarray):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y)
        self.classes_ = np.unique(y)
        if len(self.classes_) < 2:
            raise ValueError("need at least 2 classes to fit the probe")
        n, d = X.shape
        k = len(self.classes_)
        onehot = (y[:, None] == self.classes_[None, :]).astype(float)
        w = np.zeros((d, k))
        b = np.zeros(k)
        lip = 0.5 * float(np.linalg.eigvalsh((X.T @ X) + np.eye(d))[-1]) / n + self.l2
        step = 1.0 / lip
        for _ in range(self.max_iter):
            p = self._softmax(X @ w + b)
            gw = X.T @ (p - onehot) / n + self.l2 * w
            gb = (p - onehot).mean(axis=0)
            gnorm = np.sqrt(np.sum(gw ** 2) + np.sum(gb ** 2))
            if gnorm <= self.tol:
                break
            w -= step * gw
            b -= step * gb
        self.coef_ = w
        self.intercept_ = b
        return self

    @staticmethod
    def _softmax(z: np.ndarray) -> np.ndarray:
        z = z - z.max(axis=1, keepdims=True)
        e = np.exp(z)
        return e / e.sum(axis=1, keepdims=True)

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        if not hasattr(self, "coef_"):
            raise NotFittedError("LinearProbe is not fitted")
        return self._softmax(np.asarray(X, dtype=float) @ self.coef_ + self.intercept_)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]


def linear_probe(embeddings: np.ndarray, labels: np.ndarray, split: Split):
    """Fit the probe on the train split, score the test split.

    Returns (class probabilities, predictions, class order).
    """
    train_classes = np.unique(labels[split.train])
    eval_classes = np.unique(labels[np.concatenate([split.train, split.test])])
    missing = np.setdiff1d(eval_classes, train_classes)
    if len(missing):
        raise ValueError(f"class absent from train split: {missing.tolist()}")
    probe = LinearProbe().fit(embeddings[split.train], labels[split.train])
    probs = probe.predict_proba(embeddings[split.test])
    preds = probe.predict(embeddings[split.test])
    return probs, preds, probe.classes_


# ---------------------------------------------------------------------------
# metrics

def _midranks(x: np.ndarray) -> np.ndarray:
    order = np.argsort(x, kind="stable")
    ranks = np.empty(len(x))
    i = 0
    while i < len(x):
        j = i
        while j + 1 < len(x) and x[order[j + 1]] == x[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def _binary_auc(scores: np.ndarray, positive: np.ndarray) -> float:
    n_pos = int(positive.sum())
    n_neg = len(positive) - n_pos
    if n_pos == 0 or n_neg == 0:
        return float("nan")
    ranks = _midranks(scores)
    return float((ranks[positive].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


@dataclass
class MetricsRun:
    macro_f1: float
    micro_f1: float
    auc: float
    notes: list[str] = field(default_factory=list)


def compute_metrics(
    probs: np.ndarray,
    predictions: np.ndarray,
    truth: np.ndarray,
    class_order: np.ndarray,
) -> MetricsRun:
    """Macro/micro F1 plus one-vs-rest AUC macro-averaged over present classes."""
    if len(predictions) != len(truth) or probs.shape[0] != len(truth):
        raise ValueError("metric input shapes disagree")
    present = np.unique(truth)
    notes = []
    absent = np.setdiff1d(class_order, present)
    if len(absent):
        notes.append(f"classes absent from truth excluded: {absent.tolist()}")
    macro = float(
        f1_score(truth, predictions, labels=present, average="macro", zero_division=0)
    )
    micro = float(f1_score(truth, predictions, average="micro", zero_division=0))
    aucs = []
    for col, c in enumerate(class_order):
        if c not in present:
            continue
        auc_c = _binary_auc(probs[:, col], truth == c)
        if not np.isnan(auc_c):
            aucs.append(auc_c)
    auc = float(np.mean(aucs)) if aucs else float("nan")
    return MetricsRun(macro_f1=macro, micro_f1=micro, auc=auc, notes=notes)


@dataclass
class MetricsReport:
    arm: str
    split_size: int
    runs: list[MetricsRun]
    split_hashes: list[str] = field(default_factory=list)
    scaled: bool = False

    def mean_std(self, metric: str) -> tuple[float, float]:
        vals = np.array([getattr(r, metric) for r in self.runs])
        return float(vals.mean()), float(vals.std())


def evaluate_embeddings(
    embeddings: np.ndarray,
    labels: np.ndarray,
    labels_per_class: int,
    runs: int = 10,
    seed: int = 0,
    n_val: int = 1000,
    n_test: int = 1000,
    arm: str = "spectral",
) -> MetricsReport:
    """Probe the frozen embeddings over ``runs`` independent random splits."""
    results, hashes, scaled = [], [], False
    for r in range(runs):
        spec = SplitSpec(labels_per_class, n_val=n_val, n_test=n_test, seed=seed + r)
        split = make_split(labels, spec)
        scaled = scaled or split.scaled
        probs, preds, classes = linear_probe(embeddings, labels, split)
        results.append(compute_metrics(probs, preds, labels[split.test], classes))
        hashes.append(split.hash())
    return MetricsReport(
        arm=arm,
        split_size=labels_per_class,
        runs=results,
        split_hashes=hashes,
        scaled=scaled,
    )


# ---------------------------------------------------------------------------
# ablation arms

ARM_SPECTRAL = "spectral"  # learned augmentation schemes
ARM_STATIC = "static"  # original views copied (no augmentation)
ARM_RANDOM = "random"  # random flip probabilities, not optimized


def _random_schemes(view: MetaPathView, rng) -> tuple[AugmentationScheme, AugmentationScheme]:
    a = view.adjacency

    def one() -> AugmentationScheme:
        upper = np.triu(rng.random(a.shape), 1)
        probs = upper + upper.T
        return AugmentationScheme(
            metapath=view.metapath.name,
            probs=probs,
            flips=complement_matrix(a),
            base_adjacency=a.copy(),
            objective_kind="j_pair",
            trace=[],
        )

    return one(), one()


def build_arm_views(
    g: HeteroGraph, arm: str, aug_cfg: AugmentConfig, seed: int
) -> tuple[list[MetaPathView], list[MetaPathView]]:
    """The augmented view pair each ablation arm trains on."""
    base = build_all_views(g)
    if arm == ARM_STATIC:
        return base, base
    first, second = [], []
    rng = np.random.default_rng(seed)
    for view in base:
        if arm == ARM_SPECTRAL:
            s1, s2 = learn_schemes(view, aug_cfg)
        elif arm == ARM_RANDOM:
            s1, s2 = _random_schemes(view, rng)
        else:
            raise ValueError(f"unknown ablation arm {arm!r}")
        v1, v2 = materialize_views(view, s1, s2, mode=aug_cfg.mode, seed=aug_cfg.seed)
        first.append(v1)
        second.append(v2)
    return first, second


@dataclass
class ArmResult:
    report: MetricsReport
    losses: list[float]


def run_ablation(
    g: HeteroGraph,
    train_cfg: TrainConfig,
    aug_cfg: AugmentConfig,
    labels_per_class: int = 20,
    runs: int = 10,
    eval_seed: int = 0,
    n_val: int = 1000,
    n_test: int = 1000,
) -> dict[str, ArmResult]:
    """Train and probe the three arms under identical seeds and splits."""
    if g.labels is None:
        raise ValueError("ablation requires a labeled graph")
    out: dict[str, ArmResult] = {}
    for arm in (ARM_SPECTRAL, ARM_STATIC, ARM_RANDOM):
        views_pair = build_arm_views(g, arm, aug_cfg, seed=aug_cfg.seed)
        result = train(g, views_pair, train_cfg)
        report = evaluate_embeddings(
            result.embeddings,
            g.labels,
            labels_per_class,
            runs=runs,
            seed=eval_seed,
            n_val=n_val,
            n_test=n_test,
            arm=arm,
        )
        out[arm] = ArmResult(report=report, losses=result.losses)
    return out


# ---------------------------------------------------------------------------
# report serialization

def report_rows(reports: list[MetricsReport]) -> list[str]:
    """TSV body: per-run rows plus mean/std rows, diff-friendly ordering."""
    rows = ["arm\tsplit_size\tmetric\tkind\tvalue"]
    for rep in reports:
        for metric in ("macro_f1", "micro_f1", "auc"):
            for i, run in enumerate(rep.runs):
                rows.append(
                    f"{rep.arm}\t{rep.split_size}\t{metric}\trun_{i}"
                    f"\t{getattr(run, metric)!r}"
                )
            mean, std = rep.mean_std(metric)
            rows.append(f"{rep.arm}\t{rep.split_size}\t{metric}\tmean\t{mean!r}")
            rows.append(f"{rep.arm}\t{rep.split_size}\t{metric}\tstd\t{std!r}")
        if rep.scaled:
            rows.append(f"{rep.arm}\t{rep.split_size}\tsplit\tscaled\t1")
    return rows
