"""Normalized Laplacians, spectra, and gradients of spectral quantities.

Gradients are taken with respect to symmetric edge perturbations: bumping
weight (i, j) also bumps (j, i), which changes both endpoint degrees. The
returned gradient matrices store that paired derivative at both (i, j) and
(j, i), so a central finite difference that flips both entries reproduces
them directly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .validation import check_adjacency, check_symmetric


@dataclass
class SpectrumResult:
    eigenvalues: np.ndarray  # ascending
    eigenvectors: np.ndarray  # orthonormal columns, paired with eigenvalues
    source_n: int


def normalized_laplacian(a: np.ndarray) -> np.ndarray:
    """L = I - D^(-1/2) A D^(-1/2), with isolated nodes contributing L_ii = 1."""
    a = check_adjacency(a)
    deg = a.sum(axis=1)
    dinv = np.zeros_like(deg)
    np.divide(1.0, np.sqrt(deg), out=dinv, where=deg > 0)
    lap = np.eye(a.shape[0]) - dinv[:, None] * a * dinv[None, :]
    return (lap + lap.T) / 2.0


def graph_spectrum(lap: np.ndarray) -> SpectrumResult:
    """Full symmetric eigendecomposition, eigenvalues ascending."""
    lap = check_symmetric(lap, "laplacian")
    vals, vecs = np.linalg.eigh((lap + lap.T) / 2.0)
    return SpectrumResult(eigenvalues=vals, eigenvectors=vecs, source_n=lap.shape[0])


def spectrum_norm(s: SpectrumResult, kind: str = "l2") -> float:
    """Norm of the eigenvalue vector; l2 equals the Frobenius norm of L."""
    if kind == "l2":
        return float(np.linalg.norm(s.eigenvalues))
    if kind == "l1":
        return float(np.sum(np.abs(s.eigenvalues)))
    raise ValueError(f"unknown norm kind {kind!r}")


def spectral_distance(s1: SpectrumResult, s2: SpectrumResult, kind: str = "l2") -> float:
    """Norm of the difference of the two ascending eigenvalue vectors."""
    if s1.source_n != s2.source_n:
        raise ValueError(
            f"spectrum dimension mismatch: {s1.source_n} vs {s2.source_n}"
        )
    diff = s1.eigenvalues - s2.eigenvalues
    if kind == "l2":
        return float(np.linalg.norm(diff))
    if kind == "l1":
        return float(np.sum(np.abs(diff)))
    raise ValueError(f"unknown norm kind {kind!r}")


# ---------------------------------------------------------------------------
# gradients

def laplacian_grad_wrt_entry(a: np.ndarray, i: int, j: int) -> np.ndarray:
    """dL/dw for the symmetric weight pair (i, j): a dense n x n matrix.

    Product rule on L = I - D^(-1/2) A D^(-1/2); the derivative of the
    D^(-1/2) factors shows up as a rescaling of row/column i and j of the
    normalized adjacency. Rows of zero degree are held at zero (matching
    the isolated-node convention, which is flat there).
    """
    a = check_adjacency(a)
    if i == j:
        raise ValueError("diagonal entries are fixed at zero; need i != j")
    n = a.shape[0]
    deg = a.sum(axis=1)
    dinv = np.zeros_like(deg)
    np.divide(1.0, np.sqrt(deg), out=dinv, where=deg > 0)
    s = dinv[:, None] * a * dinv[None, :]

    ds = np.zeros((n, n))
    ds[i, j] += dinv[i] * dinv[j]
    ds[j, i] += dinv[i] * dinv[j]
    for k in (i, j):
        if deg[k] > 0:
            ds[k, :] -= s[k, :] / (2.0 * deg[k])
            ds[:, k] -= s[:, k] / (2.0 * deg[k])
    return -ds


def _chain_to_adjacency(a: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Map dF/dL (symmetric w) to the per-edge-pair gradient matrix dF/dA.

    Vectorized form of pairing w with :func:`laplacian_grad_wrt_entry` for
    every off-diagonal pair at once.
    """
    deg = a.sum(axis=1)
    dinv = np.zeros_like(deg)
    np.divide(1.0, np.sqrt(deg), out=dinv, where=deg > 0)
    s = dinv[:, None] * a * dinv[None, :]
    g = np.zeros_like(deg)
    np.divide((w * s).sum(axis=1), deg, out=g, where=deg > 0)
    grad = -2.0 * w * np.outer(dinv, dinv) + g[:, None] + g[None, :]
    grad = (grad + grad.T) / 2.0  # kill one-ulp addition-order asymmetry
    np.fill_diagonal(grad, 0.0)
    return grad


def spectrum_norm_grad(a: np.ndarray) -> np.ndarray:
    """Gradient of the l2 spectrum norm of L(A) with respect to A.

    Uses ||eig(L)||_2 = ||L||_F, so no eigendecomposition is needed and the
    gradient stays defined at repeated eigenvalues.
    """
    a = check_adjacency(a)
    lap = normalized_laplacian(a)
    fro = np.linalg.norm(lap)
    if fro == 0:
        raise ValueError("zero Laplacian has no spectrum-norm gradient")
    return _chain_to_adjacency(a, lap / fro)


def spectral_distance_grad(
    a_aug: np.ndarray, s_ref: SpectrumResult, gap_tol: float = 1e-6
) -> np.ndarray:
    """Gradient of the spectral distance between L(a_aug) and a fixed spectrum.

    First-order eigenvalue perturbation (dlambda_k/dL = u_k u_k^T) requires a
    simple spectrum; repeated eigenvalues raise. At zero distance the
    subgradient 0 is returned.
    """
    a_aug = check_adjacency(a_aug)
    s = graph_spectrum(normalized_laplacian(a_aug))
    if s.source_n != s_ref.source_n:
        raise ValueError("spectrum dimension mismatch")
    gaps = np.diff(s.eigenvalues)
    if len(gaps) and gaps.min() <= gap_tol:
        raise ValueError("repeated eigenvalues; distance gradient undefined")
    diff = s.eigenvalues - s_ref.eigenvalues
    dist = np.linalg.norm(diff)
    if dist == 0:
        return np.zeros_like(a_aug)
    u = s.eigenvectors
    w = (u * (diff / dist)) @ u.T
    return _chain_to_adjacency(a_aug, w)
