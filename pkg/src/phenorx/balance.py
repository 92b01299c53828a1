"""Class flattening by k-medoids (PAM) replacement.

Oversized primary-disease classes are replaced by their `cap` medoid
records so the balanced corpus keeps data points (medoids are members),
while classes at or under the cap pass through untouched. PAM runs the
classic greedy BUILD followed by steepest-descent SWAP; the swap search
uses the nearest/second-nearest decomposition so one iteration costs
O(k·n + n·c) vectorized work instead of O(k·n·c) scalar work.
"""

from __future__ import annotations

from collections import Counter
from typing import Sequence

import numpy as np

from .corpus.codec import encode_prescription
from .corpus.generator import Record


def pairwise_distance(vectors: Sequence[np.ndarray] | np.ndarray) -> np.ndarray:
    """Euclidean distance matrix (float64, symmetric, zero diagonal)."""
    A = np.asarray(vectors, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] == 0:
        raise ValueError("need a non-empty 2-D array of vectors")
    n, d = A.shape
    D = np.empty((n, n), dtype=np.float64)
    block = max(1, (1 << 24) // max(n * d, 1))
    for lo in range(0, n, block):
        hi = min(lo + block, n)
        diff = A[lo:hi, None, :] - A[None, :, :]
        D[lo:hi] = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    np.fill_diagonal(D, 0.0)
    return D


def _nearest_two(D: np.ndarray, medoids: np.ndarray):
    """Per point: index into `medoids` of its nearest medoid, and the
    distances to its nearest and second-nearest medoids."""
    sub = D[:, medoids]
    if len(medoids) == 1:
        n1 = np.zeros(D.shape[0], dtype=np.intp)
        dn = sub[:, 0]
        return n1, dn, np.full_like(dn, np.inf)
    order = np.argsort(sub, axis=1, kind="stable")
    n1 = order[:, 0]
    rows = np.arange(D.shape[0])
    return n1, sub[rows, n1], sub[rows, order[:, 1]]


def k_medoids(D: np.ndarray, k: int, seed: int = 0) -> list[int]:
    """PAM medoid indices: greedy BUILD, then SWAP to a local optimum.

    Fully deterministic (ties go to the lowest index); the seed parameter
    is accepted for interface uniformity but never consulted.
    """
    D = np.asarray(D, dtype=np.float64)
    n = D.shape[0]
    if D.ndim != 2 or D.shape[1] != n:
        raise ValueError("distance matrix must be square")
    if not 1 <= k <= n:
        raise ValueError(f"k={k} outside [1, {n}]")

    # BUILD: start from the 1-medoid optimum, then add the point that
    # lowers the assignment cost the most
    medoids = [int(np.argmin(D.sum(axis=1)))]
    dn = D[:, medoids[0]].copy()
    while len(medoids) < k:
        costs = np.minimum(dn[None, :], D).sum(axis=1)
        costs[medoids] = np.inf
        j = int(np.argmin(costs))
        medoids.append(j)
        dn = np.minimum(dn, D[:, j])

    if k == n:
        return sorted(medoids)

    med = np.array(sorted(medoids), dtype=np.intp)
    while True:
        n1, dn, ds = _nearest_two(D, med)
        is_medoid = np.zeros(n, dtype=bool)
        is_medoid[med] = True
        cand = np.flatnonzero(~is_medoid)

        sub = D[:, cand]                                  # n × c
        base = np.minimum(sub - dn[:, None], 0.0)         # gain if m keeps serving i
        delta = base.sum(axis=0)[None, :].repeat(k, axis=0)
        reassign = np.minimum(sub, ds[:, None]) - dn[:, None] - base
        for m in range(k):
            rows = n1 == m
            if rows.any():
                delta[m] += reassign[rows].sum(axis=0)

        best = int(np.argmin(delta))
        m_out, x_in = divmod(best, len(cand))
        if delta[m_out, x_in] >= -1e-9:
            return [int(m) for m in med]
        med[m_out] = cand[x_in]
        med.sort()


def class_histogram(records: Sequence[Record]) -> Counter:
    return Counter(r.phenotype.primary_icd9 for r in records)


def uniform_cap(labels, per_class_cap: int, seed: int = 0) -> np.ndarray:
    """Positional indices of a per-class uniform subsample.

    Classes at or below the cap keep every row; larger classes keep a
    uniform random subset of exactly `per_class_cap` rows. Indices come
    back grouped by ascending class label. This is the cheap alternative
    to medoid replacement when representativeness of the retained rows
    does not need to be optimized.
    """
    labels = np.asarray(labels)
    if per_class_cap < 1:
        raise ValueError("per_class_cap must be positive")
    if labels.size == 0:
        return np.empty(0, dtype=np.intp)
    rng = np.random.default_rng(seed)
    chosen = []
    for value in sorted(set(labels.tolist())):
        rows = np.flatnonzero(labels == value)
        if rows.size > per_class_cap:
            rows = rng.choice(rows, size=per_class_cap, replace=False)
        chosen.append(rows)
    return np.concatenate(chosen)


def balance_corpus(
    records: Sequence[Record],
    per_class_cap: int,
    seed: int = 0,
    sample_ceiling: int = 2048,
) -> list[Record]:
    """Flatten the primary-disease class histogram to at most `per_class_cap`.

    Classes above the cap are replaced by their cap medoid records (PAM on
    Euclidean distances between encoded prescriptions). Classes above
    `sample_ceiling` are first down-sampled uniformly to the ceiling so
    the distance matrix stays tractable. Output preserves corpus order.
    """
    if per_class_cap < 1:
        raise ValueError("per_class_cap must be positive")
    if sample_ceiling < per_class_cap:
        raise ValueError("sample_ceiling must be at least per_class_cap")

    by_class: dict[str, list[int]] = {}
    for i, r in enumerate(records):
        by_class.setdefault(r.phenotype.primary_icd9, []).append(i)

    rng = np.random.default_rng(seed)
    keep: set[int] = set()
    for code in sorted(by_class):
        idx = by_class[code]
        if len(idx) <= per_class_cap:
            keep.update(idx)
            continue
        if len(idx) > sample_ceiling:
            chosen = rng.choice(len(idx), size=sample_ceiling, replace=False)
            idx = [idx[i] for i in sorted(chosen)]
        vectors = np.stack([encode_prescription(records[i].prescription) for i in idx])
        med = k_medoids(pairwise_distance(vectors), per_class_cap, seed)
        keep.update(idx[m] for m in med)
    return [records[i] for i in sorted(keep)]
