"""Outlier-resistant clustering of sparse multivariate functional data.

Curves observed on irregular, subject-specific time grids are aligned onto a
standard grid, compared with the elastic time distance (ETD) and clustered
with the robust two-layer partition (RTLP), which also flags outliers.
"""
from .core import (AlignedDataset, AlignedSample, DataError, SparseSample, StandardGrid,
                   align, align_dataset, build_standard_grid, normalize_time)
from .etd import DistanceMatrix, distance_matrix, quantile
from .rtlp import ClusteringResult, Partition, RtlpConfig, cluster
from .baselines import BaselineConfig, hierarchical, kmedoids, select_k
from .metrics import OUTLIER, ari, evaluate
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = [
    "AlignedDataset", "AlignedSample", "DataError", "SparseSample", "StandardGrid",
    "align", "align_dataset", "build_standard_grid", "normalize_time",
    "DistanceMatrix", "distance_matrix", "quantile",
    "ClusteringResult", "Partition", "RtlpConfig", "cluster",
    "BaselineConfig", "hierarchical", "kmedoids", "select_k",
    "OUTLIER", "ari", "evaluate", "BACKEND",
]
