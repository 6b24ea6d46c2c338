"""Shared fixtures and independent oracles for the test suite.

The oracles here deliberately avoid the package's own code paths: the
Laplacian is recomputed from its definition, eigenvalues come from the
characteristic polynomial, and gradients come from central differences.
"""

from __future__ import annotations

import numpy as np
import pytest
from mpmath import mp

from hgspec.hetgraph import HeteroGraph, MetaPath, Relation


def charpoly_eigenvalues(matrix: np.ndarray, dps: int = 40) -> np.ndarray:
    """Eigenvalues via Faddeev-LeVerrier coefficients and polynomial roots.

    Repeated roots can stall the Durand-Kerner iteration, in which case the
    roots are taken from the companion matrix instead (still independent of
    the package's symmetric eigensolver).
    """
    mp.dps = dps
    n = matrix.shape[0]
    am = mp.matrix([[mp.mpf(float(v)) for v in row] for row in matrix])
    coeffs = [mp.mpf(1)]
    m = mp.eye(n)
    for k in range(1, n + 1):
        m = am * m
        c = -sum(m[i, i] for i in range(n)) / k
        coeffs.append(c)
        for i in range(n):
            m[i, i] += c
    try:
        roots = mp.polyroots(coeffs, maxsteps=500, extraprec=160)
    except mp.NoConvergence:
        companion = mp.zeros(n)
        for i in range(1, n):
            companion[i, i - 1] = mp.mpf(1)
        for i in range(n):
            companion[i, n - 1] = -coeffs[n - i]
        roots = mp.eig(companion, left=False, right=False)
    return np.sort(np.array([float(mp.re(r)) for r in roots]))


def raw_laplacian(a: np.ndarray) -> np.ndarray:
    """Textbook normalized Laplacian, defined for slightly perturbed inputs too."""
    deg = a.sum(axis=1)
    safe = np.where(deg > 0, deg, 1.0)
    dinv = np.where(deg > 0, 1.0 / np.sqrt(safe), 0.0)
    return np.eye(len(a)) - dinv[:, None] * a * dinv[None, :]


def fd_pair_gradient(f, a: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central differences over symmetric entry pairs of a."""
    n = a.shape[0]
    g = np.zeros_like(a)
    for i in range(n):
        for j in range(i + 1, n):
            ap, am = a.copy(), a.copy()
            ap[i, j] += h
            ap[j, i] += h
            am[i, j] -= h
            am[j, i] -= h
            g[i, j] = g[j, i] = (f(ap) - f(am)) / (2 * h)
    return g


def random_view_adjacency(rng, n: int, density: float = 0.5) -> np.ndarray:
    """Random symmetric zero-diagonal matrix with weights in (0.3, 1]."""
    mask = rng.random((n, n)) < density
    u = np.triu((0.3 + 0.7 * rng.random((n, n))) * mask, 1)
    a = u + u.T
    if not np.any(a > 0):  # guarantee at least one edge
        a[0, 1] = a[1, 0] = 1.0
    return a


def coauthor_graph(edge_pairs, n_authors: int, n_papers: int) -> HeteroGraph:
    """Tiny author-paper test graph with the author-paper-author meta-path."""
    edges = np.array([(a, p, 1.0) for a, p in edge_pairs], dtype=float)
    return HeteroGraph(
        node_types=["author", "paper"],
        node_counts={"author": n_authors, "paper": n_papers},
        relations=[Relation("writes", "author", "paper")],
        edges={"writes": edges if len(edge_pairs) else np.zeros((0, 3))},
        features={},
        target_type="author",
        metapaths=[MetaPath("APA", ("author", "paper", "author"), ("writes", "writes"))],
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
