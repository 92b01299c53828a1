"""Agglomerative clustering with Newick output and partition comparison.

Average linkage (UPGMA) is the default; single and complete linkage are
available behind the same interface. Merges are deterministic: distance
ties break toward the pair whose clusters contain the smallest leaf
indices, so repeated runs and reordered inputs agree.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .common import AnalysisError, as_square_matrix, check_symmetric

__all__ = ["Merge", "Dendrogram", "hierarchical_cluster", "adjusted_rand"]

_LINKAGES = ("average", "single", "complete")


@dataclass(frozen=True)
class Merge:
    """One agglomeration: cluster ids (leaves are 0..n-1, internal nodes
    n, n+1, ... in merge order), the linkage distance, and the merged size."""

    left: int
    right: int
    height: float
    size: int


@dataclass(frozen=True)
class Dendrogram:
    """A full agglomeration history over labeled leaves."""

    labels: tuple[str, ...]
    merges: tuple[Merge, ...]

    @property
    def n_leaves(self) -> int:
        return len(self.labels)

    def _leaf_sets(self) -> dict[int, list[int]]:
        sets = {i: [i] for i in range(self.n_leaves)}
        for t, m in enumerate(self.merges):
            sets[self.n_leaves + t] = sets[m.left] + sets[m.right]
        return sets

    def cophenetic(self) -> np.ndarray:
        """Matrix of merge heights at which each leaf pair first joins."""
        n = self.n_leaves
        sets = self._leaf_sets()
        out = np.zeros((n, n))
        for t, m in enumerate(self.merges):
            for i in sets[m.left]:
                for j in sets[m.right]:
                    out[i, j] = out[j, i] = m.height
        return out

    def cut(self, k: int) -> np.ndarray:
        """Partition the leaves into k clusters by undoing the last merges.

        Returns one integer id per leaf; ids are numbered 1..k in order of
        each cluster's smallest leaf index.
        """
        n = self.n_leaves
        if not 1 <= k <= n:
            raise AnalysisError(f"cannot cut {n} leaves into {k} clusters")
        parent = list(range(n + len(self.merges)))

        def find(x: int) -> int:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for t, m in enumerate(self.merges[: n - k]):
            node = n + t
            parent[find(m.left)] = node
            parent[find(m.right)] = node
        roots: dict[int, int] = {}
        assignment = np.zeros(n, dtype=np.int64)
        for leaf in range(n):
            root = find(leaf)
            if root not in roots:
                roots[root] = len(roots) + 1
            assignment[leaf] = roots[root]
        return assignment

    def newick(self) -> str:
        """Newick text with branch lengths (parent height - child height)."""
        heights = {i: 0.0 for i in range(self.n_leaves)}
        texts = {i: label for i, label in enumerate(self.labels)}
        node = self.n_leaves - 1
        for t, m in enumerate(self.merges):
            node = self.n_leaves + t
            heights[node] = m.height
            parts = []
            for child in (m.left, m.right):
                length = m.height - heights[child]
                parts.append(f"{texts.pop(child)}:{length:.6g}")
            texts[node] = f"({parts[0]},{parts[1]})"
        return texts[node] + ";"


def hierarchical_cluster(distances, labels=None, linkage: str = "average") -> Dendrogram:
    """Agglomerate a full distance matrix bottom-up.

    Cluster distances follow the chosen linkage (size-weighted average,
    minimum, or maximum of member distances). Ties in the next-merge choice
    resolve to the clusters holding the smallest leaf indices.
    """
    d = as_square_matrix(distances, "distance matrix")
    check_symmetric(d, "distance matrix")
    if linkage not in _LINKAGES:
        raise AnalysisError(f"linkage must be one of {_LINKAGES}, got {linkage!r}")
    n = d.shape[0]
    if labels is None:
        labels = tuple(str(i) for i in range(n))
    else:
        labels = tuple(str(x) for x in labels)
        if len(labels) != n:
            raise AnalysisError(f"{len(labels)} labels for {n} leaves")
    if n == 0:
        raise AnalysisError("cannot cluster an empty distance matrix")

    # active cluster id -> (smallest leaf, size); distances live in `d`
    # indexed by position; positions map to cluster ids via `ids`.
    ids = list(range(n))
    key = {i: i for i in range(n)}
    size = {i: 1 for i in range(n)}
    merges: list[Merge] = []
    work = d.copy()
    for step in range(n - 1):
        rows_iu, cols_iu = np.triu_indices(len(ids), k=1)
        vals = work[rows_iu, cols_iu]
        ties = np.flatnonzero(vals == vals.min())
        a, b = min(
            ((min(key[ids[rows_iu[c]]], key[ids[cols_iu[c]]]),
              max(key[ids[rows_iu[c]]], key[ids[cols_iu[c]]]),
              int(rows_iu[c]), int(cols_iu[c]))
             for c in ties)
        )[2:]
        i, j = ids[a], ids[b]
        if key[j] < key[i]:
            i, j = j, i
            a, b = b, a
        height = float(work[a, b])
        new = n + step
        row = np.zeros(len(ids))
        for c in range(len(ids)):
            if c in (a, b):
                continue
            if linkage == "average":
                row[c] = (size[i] * work[a, c] + size[j] * work[b, c]) / (
                    size[i] + size[j])
            elif linkage == "single":
                row[c] = min(work[a, c], work[b, c])
            else:
                row[c] = max(work[a, c], work[b, c])
        merges.append(Merge(left=i, right=j, height=height, size=size[i] + size[j]))
        key[new] = min(key[i], key[j])
        size[new] = size[i] + size[j]
        # replace position a with the merged cluster, drop position b
        keep = [c for c in range(len(ids)) if c != b]
        work[a, :] = row
        work[:, a] = row
        work = work[np.ix_(keep, keep)]
        ids[a] = new
        del ids[b]
    return Dendrogram(labels=labels, merges=tuple(merges))


def adjusted_rand(a, b) -> float:
    """Adjusted Rand index between two partitions of the same items."""
    a = np.asarray(a).ravel()
    b = np.asarray(b).ravel()
    if a.shape != b.shape:
        raise AnalysisError(f"partition lengths differ: {a.size} vs {b.size}")
    n = a.size
    if n == 0:
        raise AnalysisError("cannot compare empty partitions")
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    table = np.zeros((ai.max() + 1, bi.max() + 1), dtype=np.int64)
    np.add.at(table, (ai, bi), 1)
    sum_cells = sum(comb(int(v), 2) for v in table.ravel())
    sum_rows = sum(comb(int(v), 2) for v in table.sum(axis=1))
    sum_cols = sum(comb(int(v), 2) for v in table.sum(axis=0))
    expected = sum_rows * sum_cols / comb(n, 2)
    maximum = (sum_rows + sum_cols) / 2.0
    if maximum == expected:
        return 1.0
    return float((sum_cells - expected) / (maximum - expected))
