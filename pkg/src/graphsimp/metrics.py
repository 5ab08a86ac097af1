"""Quality metrics for simplified clouds."""

from __future__ import annotations

import numpy as np

from graphsimp.core import PointCloud
from graphsimp.graph import DEFAULT_K, build_knn_graph


def edge_retention(labels, kept) -> float:
    """Fraction of labelled edge points that survive."""
    labels = np.asarray(labels, dtype=bool)
    total = int(labels.sum())
    if total == 0:
        return 0.0
    return float(labels[np.asarray(kept, dtype=np.int64)].sum()) / total


def feature_mass_retained(f, kept) -> float:
    f = np.asarray(f, dtype=np.float64)
    total = float(f.sum())
    if total == 0.0:
        return 1.0
    return float(f[np.asarray(kept, dtype=np.int64)].sum()) / total


def output_degree_variance(cloud: PointCloud, k: int = DEFAULT_K) -> float:
    """Variance of the weighted degrees of ``cloud``'s own k-NN graph (sigma auto).

    Uniformly spaced clouds give nearly equal degrees; clusters and gaps spread them.
    """
    k = min(k, len(cloud) - 1)
    if k < 1:
        return 0.0
    return float(np.var(build_knn_graph(cloud, k).degrees))
