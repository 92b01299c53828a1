"""Spectral view of class confusions.

The symmetrized confusion matrix is read as a graph affinity between
classes; the unnormalized Laplacian's small eigenvectors then embed the
classes so that frequently-confused ones sit close together. The
eigensolver is a cyclic Jacobi iteration - adequate for the few hundred
classes this package deals with and exactly reproducible.
"""
from __future__ import annotations

import numpy as np

from .common import AnalysisError, as_square_matrix, check_symmetric

__all__ = [
    "symmetrize",
    "unnormalized_laplacian",
    "eigendecompose",
    "spectral_embed",
    "category_distances",
]


def symmetrize(confusion) -> np.ndarray:
    """(C + Cᵀ)/2: mutual confusion counts as affinity; diagonal retained."""
    c = as_square_matrix(confusion, "confusion matrix")
    return (c + c.T) / 2.0


def unnormalized_laplacian(affinity) -> np.ndarray:
    """L = D - W with D = diag(row sums); W's diagonal is zeroed first.

    Self-affinity carries no information about which other classes a class
    is confused with, so it is excluded before forming the graph.
    """
    w = as_square_matrix(affinity, "affinity matrix")
    check_symmetric(w, "affinity matrix")
    np.fill_diagonal(w, 0.0)
    return np.diag(w.sum(axis=1)) - w


def eigendecompose(matrix, tol: float = 1e-12,
                   max_sweeps: int = 60) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi eigendecomposition of a symmetric matrix.

    Returns eigenvalues in ascending order and the matching orthonormal
    eigenvectors as columns. Sweeps rotate every off-diagonal pair until
    the off-diagonal mass falls below tol times the matrix norm.
    """
    a = as_square_matrix(matrix, "matrix")
    check_symmetric(a, "matrix")
    n = a.shape[0]
    v = np.eye(n)
    scale = max(1.0, np.abs(a).max())
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.tril(a, -1) ** 2))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rot_p, rot_q = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * rot_p - s * rot_q
                a[:, q] = s * rot_p + c * rot_q
                rot_p, rot_q = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * rot_p - s * rot_q
                a[q, :] = s * rot_p + c * rot_q
                vec_p, vec_q = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vec_p - s * vec_q
                v[:, q] = s * vec_p + c * vec_q
    values = np.diag(a).copy()
    order = np.argsort(values, kind="stable")
    return values[order], v[:, order]


def spectral_embed(affinity, k: int = 8, zero_tol: float = 1e-9) -> np.ndarray:
    """Coordinates from the eigenvectors of the k smallest nonzero eigenvalues.

    Zero eigenvalues (one per connected component) carry only membership
    information and are skipped. Requires k < n and at least k nonzero
    eigenvalues.
    """
    w = as_square_matrix(affinity, "affinity matrix")
    n = w.shape[0]
    if k >= n:
        raise AnalysisError(f"embedding dimension k={k} must be below n={n}")
    values, vectors = eigendecompose(unnormalized_laplacian(w))
    nonzero = np.flatnonzero(values > zero_tol)
    if nonzero.size < k:
        raise AnalysisError(
            f"only {nonzero.size} nonzero eigenvalues available for k={k}"
        )
    return vectors[:, nonzero[:k]].copy()


def category_distances(coords, categories) -> tuple[tuple, np.ndarray]:
    """Euclidean distances between category centroids in an embedding.

    Returns (sorted category labels, len(labels)² distance matrix with a
    zero diagonal).
    """
    coords = np.asarray(coords, dtype=np.float64)
    categories = list(categories)
    if coords.ndim != 2 or len(categories) != coords.shape[0]:
        raise AnalysisError(
            f"need one category per coordinate row: {coords.shape} vs "
            f"{len(categories)} categories"
        )
    labels = tuple(sorted(set(categories)))
    centroids = np.stack([
        coords[[i for i, c in enumerate(categories) if c == label]].mean(axis=0)
        for label in labels
    ])
    m = len(labels)
    dist = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1, m):
            d = float(np.linalg.norm(centroids[i] - centroids[j]))
            dist[i, j] = dist[j, i] = d
    return labels, dist
