"""Exact t-SNE for small point sets (n <= ~2000).

Gaussian input affinities are calibrated per point by binary search so
every conditional distribution hits the requested perplexity, then
symmetrized; the output layout minimizes KL(P || Q) against a Student-t
kernel by momentum gradient descent with early exaggeration. The step
size backs off (and the layout rolls back) whenever the objective rises
between checkpoints, so the recorded KL trace after the exaggeration
phase is non-increasing by construction.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .common import AnalysisError

__all__ = ["TsneResult", "conditional_affinities", "tsne"]

_P_FLOOR = 1e-12
_EXAGGERATION = 12.0
_EXAGGERATION_SHARE = 0.15


@dataclass(frozen=True)
class TsneResult:
    """Final coordinates plus the KL(P||Q) trace at checkpoint iterations."""

    coords: np.ndarray
    kl_checkpoints: tuple[tuple[int, float], ...]


def _squared_distances(points: np.ndarray) -> np.ndarray:
    sq = np.sum(points ** 2, axis=1)
    d = sq[:, None] + sq[None, :] - 2.0 * points @ points.T
    np.fill_diagonal(d, 0.0)
    return np.maximum(d, 0.0)


def conditional_affinities(points, perplexity: float,
                           tol: float = 1e-7, max_iter: int = 80) -> np.ndarray:
    """Row-stochastic Gaussian affinities with per-point bandwidths.

    Each row i gets its own precision beta_i, binary-searched until the
    conditional distribution's perplexity 2^H(P_i) matches the target.
    The diagonal is zero.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2:
        raise AnalysisError(f"points must be 2-D, got shape {points.shape}")
    n = points.shape[0]
    if not 0.0 < perplexity < n:
        raise AnalysisError(f"perplexity must lie in (0, n={n}), got {perplexity}")
    target_entropy = np.log2(perplexity)
    d = _squared_distances(points)
    p = np.zeros((n, n))
    for i in range(n):
        row = np.delete(d[i], i)
        beta, lo, hi = 1.0, 0.0, np.inf
        for _ in range(max_iter):
            kernel = np.exp(-(row - row.min()) * beta)
            total = kernel.sum()
            prob = kernel / total
            with np.errstate(divide="ignore", invalid="ignore"):
                entropy = -np.sum(np.where(prob > 0, prob * np.log2(prob), 0.0))
            gap = entropy - target_entropy
            if abs(gap) < tol:
                break
            if gap > 0:  # too flat: raise precision
                lo = beta
                beta = beta * 2.0 if hi == np.inf else (beta + hi) / 2.0
            else:
                hi = beta
                beta = (lo + beta) / 2.0
        p[i, np.arange(n) != i] = prob
    return p


def _kl_divergence(p: np.ndarray, q: np.ndarray) -> float:
    mask = p > 0
    return float(np.sum(p[mask] * np.log(p[mask] / q[mask])))


def tsne(points, out_dim: int = 2, perplexity: float = 30.0,
         iterations: int = 500, seed: int = 0,
         learning_rate: float | None = None,
         checkpoint_every: int = 25) -> TsneResult:
    """Embed points into out_dim in {2, 3} dimensions; deterministic per seed.

    Early exaggeration multiplies P by 12 for the first 15% of iterations;
    momentum is 0.5 during that phase and 0.8 after. When learning_rate is
    omitted it defaults to max(n / 12, 50), which keeps small layouts from
    overshooting. KL checkpoints are logged every checkpoint_every
    iterations against the true (never exaggerated) P.
    """
    points = np.asarray(points, dtype=np.float64)
    if out_dim not in (2, 3):
        raise AnalysisError(f"out_dim must be 2 or 3, got {out_dim}")
    if iterations < 1:
        raise AnalysisError("iterations must be positive")
    n = points.shape[0]
    if learning_rate is None:
        learning_rate = max(n / _EXAGGERATION, 50.0)
    if learning_rate <= 0:
        raise AnalysisError("learning_rate must be positive")
    conditional = conditional_affinities(points, perplexity)
    p = (conditional + conditional.T) / (2.0 * n)
    p = np.maximum(p, _P_FLOOR)
    np.fill_diagonal(p, 0.0)

    rng = np.random.default_rng(seed)
    coords = rng.standard_normal((n, out_dim)) * 1e-4
    velocity = np.zeros_like(coords)
    gains = np.ones_like(coords)
    exaggerate_until = max(1, int(round(_EXAGGERATION_SHARE * iterations)))
    step = learning_rate
    checkpoints: list[tuple[int, float]] = []
    best_coords = coords.copy()
    best_kl = np.inf

    def q_matrix(y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        student = 1.0 / (1.0 + _squared_distances(y))
        np.fill_diagonal(student, 0.0)
        return np.maximum(student / student.sum(), _P_FLOOR), student

    for it in range(1, iterations + 1):
        target = p * _EXAGGERATION if it <= exaggerate_until else p
        momentum = 0.5 if it <= exaggerate_until else 0.8
        q, student = q_matrix(coords)
        force = (target - q) * student
        grad = 4.0 * ((np.diag(force.sum(axis=1)) - force) @ coords)
        same_sign = np.sign(grad) == np.sign(velocity)
        gains = np.where(same_sign, gains * 0.8, gains + 0.2)
        gains = np.clip(gains, 0.01, 10.0)
        velocity = momentum * velocity - step * gains * grad
        coords = coords + velocity
        coords = coords - coords.mean(axis=0)

        at_checkpoint = it % checkpoint_every == 0 or it == iterations
        if at_checkpoint:
            kl = _kl_divergence(p, q_matrix(coords)[0])
            if it > exaggerate_until and kl > best_kl:
                # objective rose: roll back and retry more cautiously
                coords = best_coords.copy()
                velocity = np.zeros_like(coords)
                step *= 0.5
                kl = best_kl
            else:
                best_coords = coords.copy()
                best_kl = kl
            checkpoints.append((it, kl))
    return TsneResult(coords=coords, kl_checkpoints=tuple(checkpoints))
