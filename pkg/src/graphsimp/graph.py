"""Exact k-NN graphs with Gaussian edge weights and the normalized Laplacian filter."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.spatial import cKDTree

from graphsimp.core import PointCloud

DEFAULT_K = 10
_DENSE_LIMIT = 2000


@dataclass(frozen=True, eq=False)
class KnnGraph:
    """Directed k-NN graph: row i lists the k nearest other points of point i.

    ``neighbors`` and ``distances`` are (N, k), ordered by (distance, index).
    ``norm_weights`` holds the row-normalized weights W_ij / D_ii, computed with
    a per-row exponent shift so they stay exact when the raw weights underflow.
    """

    k: int
    neighbors: np.ndarray
    distances: np.ndarray
    sigma: float
    weights: np.ndarray
    degrees: np.ndarray
    norm_weights: np.ndarray

    @property
    def n(self) -> int:
        return self.neighbors.shape[0]


def _sorted_candidates(pts, idx, rows):
    """Recompute squared distances for candidate lists and order them by (d2, index), self last."""
    diff = pts[idx] - pts[rows][:, None, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    is_self = idx == rows[:, None]
    d2 = np.where(is_self, np.inf, d2)
    order = np.lexsort((np.where(is_self, np.iinfo(np.int64).max, idx), d2), axis=-1)
    return np.take_along_axis(idx, order, axis=1), np.take_along_axis(d2, order, axis=1)


def _query_block(tree, points, rows, m, workers):
    _, cand = tree.query(points[rows], k=m, workers=workers)
    cand = np.asarray(cand, dtype=np.int64).reshape(rows.size, m)
    return _sorted_candidates(points, cand, rows)


def knn_search(points: np.ndarray, k: int, workers: int = 1):
    """Exact k nearest other points for every row, ties broken by smaller index.

    Returns (indices, squared distances), both (N, k).
    """
    n = points.shape[0]
    if n <= k:
        raise ValueError(f"need more points than neighbors: N={n}, k={k}")
    tree = cKDTree(points)
    out_idx = np.empty((n, k), dtype=np.int64)
    out_d2 = np.empty((n, k), dtype=np.float64)
    rows = np.arange(n)
    m = min(n, k + 1 + max(4, k // 2))
    while rows.size:
        # bound the (rows x m) candidate block when escalating for heavy ties
        chunk = max(1, 4_000_000 // m)
        parts = [_query_block(tree, points, rows[s:s + chunk], m, workers) for s in range(0, rows.size, chunk)]
        idx = np.concatenate([p[0] for p in parts])
        d2 = np.concatenate([p[1] for p in parts])
        if m >= n:
            safe = np.ones(rows.size, dtype=bool)
        else:
            # every point at or below the k-th distance must be among the candidates
            finite_max = np.where(np.isfinite(d2), d2, -np.inf).max(axis=1)
            kth = d2[:, k - 1]
            safe = kth < finite_max * (1.0 - 1e-12) - 1e-300
        out_idx[rows[safe]] = idx[safe, :k]
        out_d2[rows[safe]] = d2[safe, :k]
        rows = rows[~safe]
        m = min(n, 2 * m)
    return out_idx, out_d2


def build_knn_graph(cloud: PointCloud, k: int = DEFAULT_K, sigma: float | None = None, workers: int = 1) -> KnnGraph:
    """Build the k-NN graph of ``cloud`` with weights exp(-d^2 / sigma^2).

    When ``sigma`` is None it defaults to the mean distance to the k-th neighbor.
    """
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    pts = cloud.points
    nbr, d2 = knn_search(pts, k, workers=workers)
    dist = np.sqrt(d2)
    if sigma is None:
        sigma = float(dist[:, -1].mean())
        if not sigma > 0.0:
            sigma = 1.0  # every point coincides with its neighbors; weights are 1 for any sigma
    elif not sigma > 0.0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    s2 = sigma * sigma
    weights = np.exp(-d2 / s2)
    degrees = weights.sum(axis=1)
    shifted = np.exp(-(d2 - d2[:, :1]) / s2)
    norm_weights = shifted / shifted.sum(axis=1, keepdims=True)
    for a in (nbr, dist, weights, degrees, norm_weights):
        a.setflags(write=False)
    return KnnGraph(k, nbr, dist, float(sigma), weights, degrees, norm_weights)


def laplacian_apply(g: KnnGraph, cloud: PointCloud) -> np.ndarray:
    """Rows x_i - sum_j (W_ij / D_ii) x_j, i.e. (I - D^-1 W) X."""
    if len(cloud) != g.n:
        raise ValueError(f"graph has {g.n} vertices but cloud has {len(cloud)} points")
    x = cloud.points
    return x - np.einsum("ik,ikj->ij", g.norm_weights, x[g.neighbors])


def rows_to_csr(row_cols: np.ndarray, n_cols: int) -> sp.csr_matrix:
    """Binary CSR matrix from an (R, k) array of column indices, columns sorted per row."""
    r, k = row_cols.shape
    indices = np.sort(row_cols, axis=1).ravel()
    indptr = np.arange(0, r * k + 1, k, dtype=np.int64)
    return sp.csr_matrix((np.ones(r * k), indices, indptr), shape=(r, n_cols))


def binary_adjacency(g: KnnGraph) -> sp.csr_matrix:
    """A[i, j] = 1 iff j is one of the k nearest neighbors of i (not symmetric in general)."""
    return rows_to_csr(g.neighbors, g.n)


def dense_adjacency(g: KnnGraph) -> np.ndarray:
    if g.n > _DENSE_LIMIT:
        raise MemoryError(f"refusing to densify a {g.n}-vertex graph (limit {_DENSE_LIMIT})")
    return binary_adjacency(g).toarray()


def kept_neighbor_counts(g: KnnGraph, kept) -> np.ndarray:
    """For every vertex, how many of its k neighbors survive in ``kept``."""
    mask = np.zeros(g.n, dtype=bool)
    mask[np.asarray(kept, dtype=np.int64)] = True
    return mask[g.neighbors].sum(axis=1)


def degree_variance(g: KnnGraph, kept) -> float:
    """Variance over all vertices of the surviving-neighbor count; low means uniform density."""
    return float(np.var(kept_neighbor_counts(g, kept)))
