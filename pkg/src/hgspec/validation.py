"""Shared input-validation helpers for matrix-valued arguments."""

from __future__ import annotations

import numpy as np


def as_matrix(x, name: str = "matrix") -> np.ndarray:
    """Coerce to a 2-D float64 array, rejecting anything else."""
    a = np.asarray(x, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {a.shape}")
    return a


def check_square(a: np.ndarray, name: str = "matrix") -> np.ndarray:
    a = as_matrix(a, name)
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be square, got shape {a.shape}")
    return a


def check_symmetric(a: np.ndarray, name: str = "matrix", atol: float = 1e-8) -> np.ndarray:
    a = check_square(a, name)
    if a.size and np.max(np.abs(a - a.T)) > atol:
        raise ValueError(f"{name} is not symmetric within {atol}")
    return a


def check_adjacency(a: np.ndarray, name: str = "adjacency") -> np.ndarray:
    """Symmetric, nonnegative, zero-diagonal matrix (a graph adjacency)."""
    a = check_symmetric(a, name)
    if a.size:
        if np.min(a) < 0:
            raise ValueError(f"{name} has a negative entry")
        if np.max(np.abs(np.diag(a))) > 0:
            raise ValueError(f"{name} has a nonzero diagonal")
    return a


def check_view_adjacency(a: np.ndarray, name: str = "view adjacency") -> np.ndarray:
    """Adjacency with all entries in [0, 1] (a normalized meta-path view)."""
    a = check_adjacency(a, name)
    if a.size and np.max(a) > 1.0 + 1e-12:
        raise ValueError(f"{name} has an entry above 1")
    return a


def check_unit_box(b: np.ndarray, name: str = "matrix") -> np.ndarray:
    """Symmetric zero-diagonal matrix with entries in [0, 1]."""
    b = check_symmetric(b, name)
    if b.size:
        if np.min(b) < -1e-12 or np.max(b) > 1.0 + 1e-12:
            raise ValueError(f"{name} entries must lie in [0, 1]")
        if np.max(np.abs(np.diag(b))) > 0:
            raise ValueError(f"{name} has a nonzero diagonal")
    return b


def check_same_shape(a: np.ndarray, b: np.ndarray, names: str = "operands") -> None:
    if a.shape != b.shape:
        raise ValueError(f"{names} have mismatched shapes {a.shape} vs {b.shape}")
