"""Structure discovery over trained models.

Three complementary views of how conditions and components relate:
spectral embeddings of the classifier's symmetrized confusion matrix,
hierarchical clusterings with Newick output, and t-SNE projections of the
translator's decoder embeddings. Single-component probes connect the two
model families so their clusterings can be compared (adjusted Rand).
"""
from .common import AnalysisError, write_labeled_csv
from .spectral import (
    category_distances,
    eigendecompose,
    spectral_embed,
    symmetrize,
    unnormalized_laplacian,
)
from .cluster import Dendrogram, Merge, adjusted_rand, hierarchical_cluster
from .tsne import TsneResult, conditional_affinities, tsne
from .probe import (
    PROBE_DOSE_G,
    PROBE_DURATION_DAYS,
    PROBE_SCHEDULE,
    ProbeResult,
    single_component_probe,
)

__all__ = [
    "AnalysisError",
    "write_labeled_csv",
    "symmetrize",
    "unnormalized_laplacian",
    "eigendecompose",
    "spectral_embed",
    "category_distances",
    "Merge",
    "Dendrogram",
    "hierarchical_cluster",
    "adjusted_rand",
    "TsneResult",
    "conditional_affinities",
    "tsne",
    "PROBE_DOSE_G",
    "PROBE_SCHEDULE",
    "PROBE_DURATION_DAYS",
    "ProbeResult",
    "single_component_probe",
]
