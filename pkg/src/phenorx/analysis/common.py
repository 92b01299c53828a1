"""Shared error type and delimited-output helpers for the analysis toolkit."""
from __future__ import annotations

import csv
from pathlib import Path
from typing import Sequence

import numpy as np


class AnalysisError(ValueError):
    """Invalid input to an analysis operation."""


def as_square_matrix(matrix, name: str) -> np.ndarray:
    """Validate and return a float64 square matrix copy."""
    m = np.array(matrix, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise AnalysisError(f"{name} must be square, got shape {m.shape}")
    return m


def check_symmetric(m: np.ndarray, name: str, tol: float = 1e-9) -> None:
    gap = np.abs(m - m.T).max() if m.size else 0.0
    if gap > tol:
        raise AnalysisError(f"{name} asymmetric by {gap:.3g} (tolerance {tol:g})")


def write_labeled_csv(path: str | Path, matrix: np.ndarray,
                      row_labels: Sequence, col_labels: Sequence,
                      corner: str = "") -> Path:
    """Matrix as CSV with a header row and one label column."""
    matrix = np.asarray(matrix)
    if matrix.shape != (len(row_labels), len(col_labels)):
        raise AnalysisError(
            f"matrix shape {matrix.shape} does not match "
            f"{len(row_labels)} row / {len(col_labels)} column labels"
        )
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([corner, *col_labels])
        for label, row in zip(row_labels, matrix):
            writer.writerow([label, *(f"{v:.10g}" for v in row)])
    return path
