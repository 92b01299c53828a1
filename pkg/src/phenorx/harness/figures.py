"""Figure rendering for report outputs.

Every report stage writes delimited text first and then renders a PNG of
the same data alongside it; the CSV stays the source of truth and the
figures are purely additive. Rendering uses the Agg backend with pinned
metadata so identical inputs produce identical PNG bytes.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

_SAVE_KWARGS = {"dpi": 110, "metadata": {"Software": "phenorx"}}


def _finish(fig, path: str | Path) -> Path:
    path = Path(path)
    fig.savefig(path, **_SAVE_KWARGS)
    plt.close(fig)
    return path


def training_curve_png(path: str | Path, curve: Sequence) -> Path:
    """Loss curves plus primary-head accuracy from classifier EpochStats."""
    epochs = [c.epoch for c in curve]
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.plot(epochs, [c.train_loss for c in curve], label="train loss")
    ax.plot(epochs, [c.test_loss for c in curve], label="test loss")
    ax.set_xlabel("epoch")
    ax.set_ylabel("loss")
    twin = ax.twinx()
    twin.plot(epochs, [c.head_accuracy[0] for c in curve], color="tab:green",
              linestyle="--", label="primary accuracy")
    twin.set_ylabel("primary accuracy")
    twin.set_ylim(0.0, 1.0)
    lines = ax.get_lines() + twin.get_lines()
    ax.legend(lines, [line.get_label() for line in lines], loc="center right")
    ax.set_title("classifier training")
    fig.tight_layout()
    return _finish(fig, path)


def perplexity_png(path: str | Path, curve: Sequence) -> Path:
    """Train/test perplexity per epoch with per-bucket test curves."""
    epochs = [c.epoch for c in curve]
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.plot(epochs, [c.train for c in curve], label="train")
    ax.plot(epochs, [c.test for c in curve], label="test")
    buckets = sorted({b for c in curve for b, _ in c.test_by_bucket})
    for bucket in buckets:
        series = [dict(c.test_by_bucket).get(bucket, np.nan) for c in curve]
        ax.plot(epochs, series, linewidth=0.8, alpha=0.6,
                label=f"test bucket {bucket}")
    ax.set_yscale("log")
    ax.set_xlabel("epoch")
    ax.set_ylabel("perplexity")
    ax.legend(fontsize="small")
    ax.set_title("translator perplexity")
    fig.tight_layout()
    return _finish(fig, path)


def matrix_png(path: str | Path, matrix: np.ndarray, title: str,
               xlabel: str = "", ylabel: str = "") -> Path:
    """Heatmap of any matrix (confusion counts, probe probabilities, ...)."""
    matrix = np.asarray(matrix, dtype=np.float64)
    fig, ax = plt.subplots(figsize=(6.0, 5.0))
    image = ax.imshow(matrix, aspect="auto", cmap="viridis",
                      interpolation="nearest")
    fig.colorbar(image, ax=ax, shrink=0.85)
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    fig.tight_layout()
    return _finish(fig, path)


def eigenvalues_png(path: str | Path, eigenvalues: np.ndarray) -> Path:
    eigenvalues = np.asarray(eigenvalues, dtype=np.float64)
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    ax.plot(np.arange(eigenvalues.size), eigenvalues, marker="o",
            markersize=3, linewidth=1.0)
    ax.set_xlabel("index")
    ax.set_ylabel("eigenvalue")
    ax.set_title("Laplacian spectrum")
    fig.tight_layout()
    return _finish(fig, path)


def scatter_png(path: str | Path, coords: np.ndarray,
                groups: Sequence[str] | None = None, title: str = "") -> Path:
    """2-D or 3-D scatter of embedding coordinates, colored by group."""
    coords = np.asarray(coords, dtype=np.float64)
    if coords.shape[1] == 1:
        coords = np.column_stack([coords[:, 0], np.zeros(coords.shape[0])])
    three_d = coords.shape[1] >= 3
    fig = plt.figure(figsize=(6.0, 5.0))
    ax = fig.add_subplot(projection="3d" if three_d else None)
    if groups is None:
        groups = ["all"] * coords.shape[0]
    groups = list(groups)
    for name in sorted(set(groups)):
        mask = np.array([g == name for g in groups])
        points = coords[mask]
        columns = (points[:, 0], points[:, 1], points[:, 2]) if three_d else (
            points[:, 0], points[:, 1])
        ax.scatter(*columns, s=12, label=name)
    if len(set(groups)) > 1:
        ax.legend(fontsize="small")
    ax.set_title(title)
    fig.tight_layout()
    return _finish(fig, path)


def bars_png(path: str | Path, names: Sequence[str], values: Sequence[float],
             title: str, ylabel: str) -> Path:
    fig, ax = plt.subplots(figsize=(max(4.0, 0.5 * len(names) + 2.0), 3.6))
    ax.bar(np.arange(len(names)), list(values))
    ax.set_xticks(np.arange(len(names)))
    ax.set_xticklabels(names, rotation=90 if len(names) > 12 else 0,
                       fontsize="small")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    fig.tight_layout()
    return _finish(fig, path)


def dendrogram_png(path: str | Path, dendrogram) -> Path:
    """Classic U-link rendering of an agglomerative merge tree."""
    n = dendrogram.n_leaves
    merges = dendrogram.merges
    children = {n + t: (m.left, m.right) for t, m in enumerate(merges)}
    heights = {i: 0.0 for i in range(n)}
    heights.update({n + t: m.height for t, m in enumerate(merges)})

    order: list[int] = []
    stack = [n + len(merges) - 1] if merges else list(range(n))
    while stack:
        node = stack.pop()
        if node < n:
            order.append(node)
        else:
            left, right = children[node]
            stack.append(right)
            stack.append(left)
    position = {leaf: i for i, leaf in enumerate(order)}

    def x_of(node: int) -> float:
        if node < n:
            return float(position[node])
        left, right = children[node]
        return (x_of(left) + x_of(right)) / 2.0

    fig, ax = plt.subplots(figsize=(max(4.0, 0.35 * n + 1.5), 4.2))
    for t, merge in enumerate(merges):
        xl, xr = x_of(merge.left), x_of(merge.right)
        hl, hr = heights[merge.left], heights[merge.right]
        h = merge.height
        ax.plot([xl, xl, xr, xr], [hl, h, h, hr], color="tab:blue",
                linewidth=1.0)
    ax.set_xticks(np.arange(n))
    ax.set_xticklabels([dendrogram.labels[leaf] for leaf in order],
                       rotation=90, fontsize="small")
    ax.set_ylabel("merge height")
    ax.set_title("hierarchical clustering")
    fig.tight_layout()
    return _finish(fig, path)
