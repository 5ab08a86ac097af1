"""Comparison simplifiers: voxel-grid uniform subsampling and the feature-only (lambda=0) mode."""

from __future__ import annotations

import math
from dataclasses import replace

import numpy as np

from graphsimp.core import PointCloud, SelectionMask, target_count
from graphsimp.partition import SimplifyParams, simplify

_BISECTION_STEPS = 20


def _voxel_keys(pts: np.ndarray, origin: np.ndarray, edge: float) -> np.ndarray:
    cells = np.floor((pts - origin) / edge).astype(np.int64)
    span = cells.max(axis=0) + 1
    return cells[:, 0] + span[0] * (cells[:, 1] + span[1] * cells[:, 2])


def _voxel_count(pts, origin, edge) -> int:
    return int(np.unique(_voxel_keys(pts, origin, edge)).size)


def _voxel_representatives(pts, origin, edge):
    """Per nonempty voxel, the point nearest the voxel's point centroid.

    Returns (representative indices, distance of every point to its voxel centroid).
    """
    _, inv, counts = np.unique(_voxel_keys(pts, origin, edge), return_inverse=True, return_counts=True)
    inv = inv.ravel()
    centroid = np.zeros((counts.size, 3))
    np.add.at(centroid, inv, pts)
    centroid /= counts[:, None]
    dist = np.linalg.norm(pts - centroid[inv], axis=1)
    order = np.lexsort((np.arange(len(pts)), dist, inv))
    first = np.ones(order.size, dtype=bool)
    first[1:] = inv[order[1:]] != inv[order[:-1]]
    return np.sort(order[first]), dist


def uniform_voxel(cloud: PointCloud, alpha: float) -> SelectionMask:
    """Voxel-grid subsampling returning exactly round(alpha * N) original points.

    The voxel edge is bisected (in log scale) toward the target count; the
    remaining mismatch is trimmed or padded by distance to the voxel centroid.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    n = len(cloud)
    target = target_count(alpha, n)
    if target >= n:
        return SelectionMask(np.arange(n), alpha, n)
    if target == 0:
        return SelectionMask(np.array([], dtype=np.int64), alpha, n)
    pts = cloud.points
    origin = pts.min(axis=0)
    extent = float((pts.max(axis=0) - origin).max())
    if extent == 0.0:
        return SelectionMask(np.arange(target), alpha, n)

    lo, hi = math.log(extent * 1e-5), math.log(extent * 1.01)
    best_edge, best_key = math.exp(hi), None
    for _ in range(_BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        count = _voxel_count(pts, origin, math.exp(mid))
        key = (abs(count - target), count < target)
        if best_key is None or key < best_key:
            best_edge, best_key = math.exp(mid), key
        if count == target:
            break
        if count > target:
            lo = mid
        else:
            hi = mid

    reps, dist = _voxel_representatives(pts, origin, best_edge)
    if reps.size > target:
        rank = np.lexsort((reps, dist[reps]))
        reps = reps[rank[:target]]
    elif reps.size < target:
        rest = np.setdiff1d(np.arange(n), reps)
        rank = np.lexsort((rest, dist[rest]))
        reps = np.concatenate([reps, rest[rank[: target - reps.size]]])
    return SelectionMask(np.sort(reps), alpha, n)


def contour_only(cloud: PointCloud, params: SimplifyParams) -> SelectionMask:
    """The proposed pipeline with the uniformity weight switched off."""
    return simplify(cloud, replace(params, lam=0.0))
