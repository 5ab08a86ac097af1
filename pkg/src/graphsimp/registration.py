"""Point-to-point ICP and the shift-and-rotate registration experiment."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from graphsimp.baseline import contour_only, uniform_voxel
from graphsimp.core import PointCloud, RigidTransform, SelectionMask, apply_transform, rmse, select
from graphsimp.partition import SimplifyParams, simplify

METHODS = ("original", "uniform", "proposed", "contour")


class DegenerateAlignment(ValueError):
    pass


@dataclass(frozen=True)
class IcpConfig:
    max_iters: int = 100
    trans_tol: float = 1e-8

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if not self.trans_tol > 0:
            raise ValueError("trans_tol must be positive")


def _points(c) -> np.ndarray:
    return c.points if isinstance(c, PointCloud) else np.asarray(c, dtype=np.float64)


def best_rigid_transform(source, target) -> RigidTransform:
    """Least-squares R, t with R @ source[i] + t ~ target[i] (Kabsch, reflection-corrected)."""
    src, dst = _points(source), _points(target)
    if src.shape != dst.shape or src.ndim != 2 or src.shape[1] != 3:
        raise ValueError(f"paired point sets must share shape (N, 3): {src.shape} vs {dst.shape}")
    if src.shape[0] < 3:
        raise ValueError("need at least 3 correspondences")
    cs, cd = src.mean(axis=0), dst.mean(axis=0)
    h = (src - cs).T @ (dst - cd)
    u, s, vt = np.linalg.svd(h)
    if s[0] == 0.0 or s[1] <= 1e-12 * s[0]:
        raise DegenerateAlignment("cross-covariance has rank < 2; rotation is not determined")
    d = np.sign(np.linalg.det(vt.T @ u.T)) or 1.0
    r = vt.T @ np.diag([1.0, 1.0, d]) @ u.T
    return RigidTransform(r, cd - r @ cs)


def icp(source, target, config: IcpConfig | None = None, trace: list | None = None):
    """Align ``source`` onto ``target``; returns (transform, final mean squared correspondence error).

    If ``trace`` is given, the correspondence error of every iteration is appended to it.
    """
    config = config or IcpConfig()
    src, dst = _points(source), _points(target)
    if len(src) < 3 or len(dst) < 3:
        raise ValueError("both clouds need at least 3 points")
    tree = cKDTree(dst)
    current = RigidTransform.identity()
    for _ in range(config.max_iters):
        moved = src @ current.rotation.T + current.translation
        dist, idx = tree.query(moved)
        if trace is not None:
            trace.append(float(np.mean(dist**2)))
        updated = best_rigid_transform(src, dst[idx])
        delta = np.linalg.norm(updated.matrix() - current.matrix())
        current = updated
        if delta < config.trans_tol:
            break
    dist, _ = tree.query(src @ current.rotation.T + current.translation)
    return current, float(np.mean(dist**2))


def simplify_with(method: str, cloud: PointCloud, params: SimplifyParams) -> SelectionMask:
    if method == "original":
        return SelectionMask(np.arange(len(cloud)), 1.0, len(cloud))
    if method == "uniform":
        return uniform_voxel(cloud, params.alpha)
    if method == "proposed":
        return simplify(cloud, params)
    if method == "contour":
        return contour_only(cloud, params)
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


def registration_experiment(
    cloud: PointCloud,
    transform: RigidTransform,
    method: str,
    alpha: float | None = None,
    params: SimplifyParams | None = None,
    icp_config: IcpConfig | None = None,
    original_mask: SelectionMask | None = None,
) -> float:
    """Perturb ``cloud`` by ``transform``, simplify both copies, register, and score.

    ICP runs on the simplified pair; the estimate is applied to the full
    transformed cloud and compared index-by-index against the full original.
    ``original_mask`` lets sweeps reuse the simplification of the unperturbed cloud.
    """
    if params is None:
        params = SimplifyParams(alpha=alpha if alpha is not None else 0.1)
    elif alpha is not None:
        params = SimplifyParams(**{**params.__dict__, "alpha": alpha})
    moved = apply_transform(cloud, transform)
    if original_mask is None:
        original_mask = simplify_with(method, cloud, params)
    moved_mask = simplify_with(method, moved, params)
    estimate, _ = icp(select(moved, moved_mask), select(cloud, original_mask), icp_config)
    return rmse(apply_transform(moved, estimate), cloud)
