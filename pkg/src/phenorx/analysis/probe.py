"""Single-component probes of a trained classifier.

Feeding the classifier a synthetic prescription containing exactly one
component (5 g, schedule 1, 7 days) reads out which primary conditions
that component is evidence for. Components whose probability rows are
close play interchangeable roles; clustering the rows therefore recovers
the component families the corpus was built from.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..corpus import Prescription, encode_prescription
from .cluster import Dendrogram, hierarchical_cluster
from .common import AnalysisError

__all__ = ["ProbeResult", "single_component_probe"]

PROBE_DOSE_G = 5.0
PROBE_SCHEDULE = 1
PROBE_DURATION_DAYS = 7


@dataclass(frozen=True)
class ProbeResult:
    """Per-component primary-condition probabilities and their clustering."""

    component_ids: tuple[int, ...]
    matrix: np.ndarray
    dendrogram: Dendrogram


def single_component_probe(model, component_ids, linkage: str = "average") -> ProbeResult:
    """Probe each component alone and cluster the probability rows.

    matrix[i] is the primary-condition softmax for a prescription holding
    only component_ids[i] at 5 g; rows are clustered by Euclidean distance.
    """
    component_ids = tuple(int(c) for c in component_ids)
    if not component_ids:
        raise AnalysisError("need at least one component to probe")
    rows = []
    for cid in component_ids:
        prescription = Prescription(
            components=((cid, PROBE_DOSE_G),),
            schedule=PROBE_SCHEDULE,
            duration_days=PROBE_DURATION_DAYS,
        )
        vector = encode_prescription(prescription)
        rows.append(model.forward(vector).heads[0].astype(np.float64))
    matrix = np.stack(rows)
    n = len(component_ids)
    distances = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d = float(np.linalg.norm(matrix[i] - matrix[j]))
            distances[i, j] = distances[j, i] = d
    dendrogram = hierarchical_cluster(
        distances, labels=[str(c) for c in component_ids], linkage=linkage
    )
    return ProbeResult(component_ids=component_ids, matrix=matrix,
                       dendrogram=dendrogram)
