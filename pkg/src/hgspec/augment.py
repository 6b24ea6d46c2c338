"""Learnable topology augmentation schemes driven by the graph spectrum.

An augmentation is t(A) = A + C o B: B holds per-edge flip probabilities in
[0, 1], and C holds the flip direction (+1 creates an absent edge at weight
1, -A_ij deletes an existing one). Two schemes are learned per view by
projected gradient ascent: one pushes the spectrum norm of the augmented
graph up relative to the original, the other pulls it down, so the two
materialized views sit far apart in spectrum space.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .hetgraph import MetaPath, MetaPathView
from .spectral import (
    graph_spectrum,
    normalized_laplacian,
    spectral_distance,
    spectrum_norm,
    spectrum_norm_grad,
)
from .validation import check_unit_box, check_view_adjacency

OBJECTIVE_KINDS = ("single", "single_max", "single_min", "double", "double_max", "j_pair")


@dataclass
class AugmentConfig:
    lr: float = 0.1
    iterations: int = 50
    norm: str = "l2"
    budget_fraction: float | None = None
    mode: str = "deterministic"  # or "bernoulli"
    literal_flip: bool = False  # keep-sign flip rule for existing edges
    seed: int = 0

    def validate(self) -> None:
        if self.lr <= 0:
            raise ValueError("augmentation lr must be positive")
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if self.norm not in ("l2", "l1"):
            raise ValueError("norm must be 'l2' or 'l1'")
        if self.budget_fraction is not None and self.budget_fraction <= 0:
            raise ValueError("budget_fraction must be positive when set")
        if self.mode not in ("deterministic", "bernoulli"):
            raise ValueError("mode must be 'deterministic' or 'bernoulli'")


@dataclass
class AugmentationScheme:
    metapath: str
    probs: np.ndarray  # symmetric, zero diagonal, entries in [0, 1]
    flips: np.ndarray  # flip-direction matrix derived from the base view
    base_adjacency: np.ndarray
    objective_kind: str = "j_pair"
    trace: list[float] = field(default_factory=list)

    @property
    def final_objective(self) -> float:
        return self.trace[-1] if self.trace else 1.0


def complement_matrix(a: np.ndarray, literal: bool = False) -> np.ndarray:
    """Flip directions: +1 where no edge exists, -weight where one does.

    ``literal=True`` keeps the positive sign on existing edges (doubling
    instead of deleting them); exposed for comparison only.
    """
    a = check_view_adjacency(a)
    c = np.where(a == 0, 1.0, a if literal else -a)
    np.fill_diagonal(c, 0.0)
    return c


def apply_scheme(a: np.ndarray, b: np.ndarray, literal: bool = False) -> np.ndarray:
    """t(A) = A + C o B. Closed over valid view adjacencies for any valid B."""
    a = check_view_adjacency(a)
    b = check_unit_box(b, "flip probabilities")
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a + complement_matrix(a, literal) * b


def objective_value(
    a: np.ndarray,
    b1: np.ndarray,
    b2: np.ndarray | None = None,
    kind: str = "single",
    norm: str = "l2",
) -> float:
    """Spectral objectives comparing augmented graphs to the original or each other."""
    if kind == "j_pair":
        raise ValueError("j_pair is optimized per side; evaluate single_max/single_min")
    if kind not in OBJECTIVE_KINDS:
        raise ValueError(f"unknown objective kind {kind!r}")
    if kind in ("double", "double_max") and b2 is None:
        raise ValueError(f"objective {kind!r} needs a second scheme matrix")
    s_orig = graph_spectrum(normalized_laplacian(a))
    s1 = graph_spectrum(normalized_laplacian(apply_scheme(a, b1)))
    if kind == "single":
        return spectral_distance(s1, s_orig, norm)
    if kind in ("single_max", "single_min"):
        return spectrum_norm(s1, norm) / spectrum_norm(s_orig, norm)
    s2 = graph_spectrum(normalized_laplacian(apply_scheme(a, b2)))
    if kind == "double":
        return spectral_distance(s1, s2, norm)
    return spectrum_norm(s1, norm) / spectrum_norm(s2, norm)


# ---------------------------------------------------------------------------
# optimizer

def _project(b: np.ndarray, a: np.ndarray, budget_fraction: float | None) -> np.ndarray:
    b = (b + b.T) / 2.0
    np.fill_diagonal(b, 0.0)
    np.clip(b, 0.0, 1.0, out=b)
    if budget_fraction is not None:
        budget = budget_fraction * float(np.count_nonzero(a))
        total = b.sum()
        if total > budget > 0:
            b *= budget / total
    return b


def _ascend(
    a: np.ndarray,
    flips: np.ndarray,
    sign: float,
    cfg: AugmentConfig,
    *,
    max_doublings: int = 7,
    max_halvings: int = 4,
) -> tuple[np.ndarray, list[float]]:
    """Projected gradient ascent on a spectrum-norm ratio.

    sign=+1 maximizes norm(t(A,B)) / norm(A); sign=-1 maximizes the inverse
    ratio, i.e. minimizes the augmented norm. Each iteration takes one
    gradient and line-searches the step along the projected ray: starting at
    cfg.lr it doubles while the objective improves (the landscape is nearly
    flat near B = 0, so fixed small steps stall), and on failure halves a
    few times before skipping the update. The recorded trace is therefore
    non-decreasing.
    """
    base_norm = np.linalg.norm(normalized_laplacian(a))

    def ratio(b: np.ndarray) -> float:
        t_norm = np.linalg.norm(normalized_laplacian(a + flips * b))
        return float(t_norm / base_norm if sign > 0 else base_norm / t_norm)

    b = np.zeros_like(a)
    value = ratio(b)
    trace = [value]
    for _ in range(cfg.iterations):
        grad = sign * spectrum_norm_grad(a + flips * b) * flips
        if not np.all(np.isfinite(grad)):
            raise FloatingPointError("non-finite augmentation gradient")
        step = cfg.lr
        improved = False
        for _ in range(max_doublings):
            candidate = _project(b + step * grad, a, cfg.budget_fraction)
            cand_value = ratio(candidate)
            if cand_value > value + 1e-12:
                b, value = candidate, cand_value
                improved = True
                step *= 2.0
            else:
                break
        if not improved:
            step = cfg.lr / 2.0
            for _ in range(max_halvings):
                candidate = _project(b + step * grad, a, cfg.budget_fraction)
                cand_value = ratio(candidate)
                if cand_value >= value - 1e-12:
                    b, value = candidate, cand_value
                    break
                step /= 2.0
        trace.append(value)
    return b, trace


def learn_schemes(
    view: MetaPathView, cfg: AugmentConfig
) -> tuple[AugmentationScheme, AugmentationScheme]:
    """Learn the norm-raising and norm-lowering schemes for one view."""
    cfg.validate()
    if cfg.norm != "l2":
        raise ValueError("scheme optimization is defined for the l2 norm only")
    a = check_view_adjacency(view.adjacency)
    if not np.any(a > 0):
        raise ValueError("cannot learn augmentation schemes on an all-zero view")
    flips = complement_matrix(a, cfg.literal_flip)
    b_up, trace_up = _ascend(a, flips, +1.0, cfg)
    b_down, trace_down = _ascend(a, flips, -1.0, cfg)

    def make(b: np.ndarray, tr: list[float]) -> AugmentationScheme:
        return AugmentationScheme(
            metapath=view.metapath.name,
            probs=b,
            flips=flips,
            base_adjacency=a.copy(),
            objective_kind="j_pair",
            trace=tr,
        )

    return make(b_up, trace_up), make(b_down, trace_down)


def materialize_views(
    view: MetaPathView,
    s1: AugmentationScheme,
    s2: AugmentationScheme,
    mode: str = "deterministic",
    seed: int = 0,
) -> tuple[MetaPathView, MetaPathView]:
    """Produce the two augmented views; done once, before contrastive training."""
    a = view.adjacency
    for s in (s1, s2):
        if s.base_adjacency.shape != a.shape or not np.array_equal(s.base_adjacency, a):
            raise ValueError(f"scheme for {s.metapath!r} was not learned on this view")
    rng = np.random.default_rng(seed)

    def realize(scheme: AugmentationScheme) -> MetaPathView:
        b = scheme.probs
        if mode == "bernoulli":
            draw = rng.random(a.shape)
            upper = np.triu(draw, 1)
            sample = (upper < np.triu(b, 1)).astype(float)
            b = sample + sample.T
        elif mode != "deterministic":
            raise ValueError(f"unknown materialization mode {mode!r}")
        return MetaPathView(metapath=view.metapath, adjacency=a + scheme.flips * b)

    return realize(s1), realize(s2)


# ---------------------------------------------------------------------------
# checkpoints

def save_scheme(scheme: AugmentationScheme, path: str, header_comment: str = "") -> None:
    n = scheme.probs.shape[0]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        fh.write(
            f"{n}\t{max(len(scheme.trace) - 1, 0)}\t{scheme.objective_kind}"
            f"\t{scheme.final_objective!r}\n"
        )
        for row in scheme.probs:
            fh.write("\t".join(repr(float(v)) for v in row) + "\n")


def load_scheme(path: str, view: MetaPathView) -> AugmentationScheme:
    with open(path, encoding="utf-8", newline="\n") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip() and not ln.startswith("#")]
    n_str, iters_str, kind, final_str = lines[0].split("\t")
    n = int(n_str)
    probs = np.array([[float(v) for v in line.split("\t")] for line in lines[1 : n + 1]])
    if probs.shape != (n, n):
        raise ValueError(f"scheme file {path!r} does not match its header")
    a = view.adjacency
    if a.shape[0] != n:
        raise ValueError(f"scheme file {path!r} has order {n}, view has {a.shape[0]}")
    return AugmentationScheme(
        metapath=view.metapath.name,
        probs=probs,
        flips=complement_matrix(a),
        base_adjacency=a.copy(),
        objective_kind=kind,
        trace=[float(final_str)],
    )


# ---------------------------------------------------------------------------
# estimator wrapper

class SpectralAugmenter(BaseEstimator):
    """Learns a pair of augmentation schemes for one meta-path view.

    fit(X) accepts a MetaPathView or a raw view adjacency; transform(X)
    returns the two augmented counterparts of whatever was passed in.
    """

    def __init__(
        self,
        lr: float = 0.1,
        iterations: int = 50,
        norm: str = "l2",
        budget_fraction: float | None = None,
        mode: str = "deterministic",
        seed: int = 0,
    ):
        self.lr = lr
        self.iterations = iterations
        self.norm = norm
        self.budget_fraction = budget_fraction
        self.mode = mode
        self.seed = seed

    def _config(self) -> AugmentConfig:
        return AugmentConfig(
            lr=self.lr,
            iterations=self.iterations,
            norm=self.norm,
            budget_fraction=self.budget_fraction,
            mode=self.mode,
            seed=self.seed,
        )

    @staticmethod
    def _as_view(x) -> MetaPathView:
        if isinstance(x, MetaPathView):
            return x
        a = check_view_adjacency(np.asarray(x, dtype=float))
        return MetaPathView(
            metapath=MetaPath("view", ("t", "t", "t"), ("r", "r")), adjacency=a
        )

    def fit(self, X, y=None):
        view = self._as_view(X)
        self.scheme_up_, self.scheme_down_ = learn_schemes(view, self._config())
        return self

    def transform(self, X):
        if not hasattr(self, "scheme_up_"):
            raise NotFittedError("SpectralAugmenter is not fitted")
        view = self._as_view(X)
        v1, v2 = materialize_views(
            view, self.scheme_up_, self.scheme_down_, mode=self.mode, seed=self.seed
        )
        if isinstance(X, MetaPathView):
            return v1, v2
        return v1.adjacency, v2.adjacency

    def fit_transform(self, X, y=None):
        return self.fit(X).transform(X)

    def separation(self) -> float:
        """Spectral distance between the two deterministic augmented views."""
        if not hasattr(self, "scheme_up_"):
            raise NotFittedError("SpectralAugmenter is not fitted")
        a = self.scheme_up_.base_adjacency
        s1 = graph_spectrum(normalized_laplacian(apply_scheme(a, self.scheme_up_.probs)))
        s2 = graph_spectrum(normalized_laplacian(apply_scheme(a, self.scheme_down_.probs)))
        return spectral_distance(s1, s2)
