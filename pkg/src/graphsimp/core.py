"""Point cloud data model, rigid transforms and error metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PointCloud:
    """An ordered set of 3D points, row ``i`` being the point with index ``i``.

    Coordinates are always held as a read-only float64 ``(N, 3)`` array.
    """

    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64, copy=True)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise ValueError(f"points must have shape (N, 3), got {pts.shape}")
        if pts.shape[0] < 1:
            raise ValueError("a point cloud needs at least one point")
        if not np.all(np.isfinite(pts)):
            bad = int(np.argmin(np.isfinite(pts).all(axis=1)))
            raise ValueError(f"non-finite coordinate at point {bad}")
        object.__setattr__(self, "points", _frozen(pts))

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def n(self) -> int:
        return self.points.shape[0]

    def bbox_diagonal(self) -> float:
        return float(np.linalg.norm(self.points.max(axis=0) - self.points.min(axis=0)))


def target_count(alpha: float, n: int) -> int:
    """round(alpha * n) with halves rounded up."""
    return int(math.floor(alpha * n + 0.5))


@dataclass(frozen=True, eq=False)
class SelectionMask:
    kept: np.ndarray
    rate: float
    n: int | None = None

    def __post_init__(self):
        if not 0.0 < self.rate <= 1.0:
            raise ValueError(f"rate must lie in (0, 1], got {self.rate}")
        kept = np.unique(np.asarray(self.kept, dtype=np.int64))
        if kept.size and kept[0] < 0:
            raise IndexError(f"negative index {kept[0]} in selection")
        if self.n is not None and kept.size and kept[-1] >= self.n:
            raise IndexError(f"index {kept[-1]} out of range for {self.n} points")
        object.__setattr__(self, "kept", _frozen(kept))

    def __len__(self) -> int:
        return self.kept.size


@dataclass(frozen=True, eq=False)
class RigidTransform:
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        r = np.array(self.rotation, dtype=np.float64, copy=True).reshape(3, 3)
        t = np.array(self.translation, dtype=np.float64, copy=True).reshape(3)
        if np.abs(r.T @ r - np.eye(3)).max() > 1e-9 or abs(np.linalg.det(r) - 1.0) > 1e-9:
            raise ValueError("rotation must be orthonormal with determinant +1")
        object.__setattr__(self, "rotation", _frozen(r))
        object.__setattr__(self, "translation", _frozen(t))

    @classmethod
    def identity(cls) -> RigidTransform:
        return cls()

    @classmethod
    def from_axis_angle(cls, axis, angle: float, translation=(0.0, 0.0, 0.0)) -> RigidTransform:
        axis = np.asarray(axis, dtype=np.float64)
        axis = axis / np.linalg.norm(axis)
        kx = np.array([[0.0, -axis[2], axis[1]], [axis[2], 0.0, -axis[0]], [-axis[1], axis[0], 0.0]])
        r = np.eye(3) + math.sin(angle) * kx + (1.0 - math.cos(angle)) * (kx @ kx)
        # re-orthonormalize to keep the 1e-9 invariant under roundoff
        u, _, vt = np.linalg.svd(r)
        return cls(u @ vt, translation)

    @classmethod
    def random(cls, rng: np.random.Generator, max_angle: float, max_shift: float) -> RigidTransform:
        """Uniform random axis, angle in [0, max_angle], shift of norm at most max_shift."""
        axis = rng.normal(size=3)
        angle = rng.uniform(0.0, max_angle)
        direction = rng.normal(size=3)
        direction /= np.linalg.norm(direction)
        return cls.from_axis_angle(axis, angle, direction * rng.uniform(0.0, max_shift))

    def inverse(self) -> RigidTransform:
        rt = self.rotation.T
        u, _, vt = np.linalg.svd(rt)
        return RigidTransform(u @ vt, -rt @ self.translation)

    def compose(self, other: RigidTransform) -> RigidTransform:
        """self ∘ other: apply ``other`` first."""
        r = self.rotation @ other.rotation
        u, _, vt = np.linalg.svd(r)
        return RigidTransform(u @ vt, self.rotation @ other.translation + self.translation)

    def matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    def angle(self) -> float:
        c = (np.trace(self.rotation) - 1.0) / 2.0
        return float(math.acos(min(1.0, max(-1.0, c))))


def apply_transform(cloud: PointCloud, t: RigidTransform) -> PointCloud:
    return PointCloud(cloud.points @ t.rotation.T + t.translation)


def rmse(estimated: PointCloud, reference: PointCloud) -> float:
    """Root mean square distance between same-index points of two clouds."""
    if len(estimated) != len(reference):
        raise ValueError(f"point counts differ: {len(estimated)} vs {len(reference)}")
    d = estimated.points - reference.points
    return float(np.sqrt(np.mean(np.einsum("ij,ij->i", d, d))))


def select(cloud: PointCloud, mask: SelectionMask) -> PointCloud:
    kept = mask.kept
    if kept.size and kept[-1] >= len(cloud):
        raise IndexError(f"index {kept[-1]} out of range for {len(cloud)} points")
    if kept.size == 0:
        raise ValueError("selection is empty")
    return PointCloud(cloud.points[kept])
