"""Synthetic test shapes: labelled cube surface, sphere, and a slotted block."""

from __future__ import annotations

import numpy as np

from graphsimp.core import PointCloud

SHAPES = ("cube", "sphere", "block")
DEFAULT_SIZE = 100.0
DEFAULT_BAND = 0.0125  # fraction of the shape size


def _rect(origin, u, v, creases=(True, True, True, True)):
    return np.asarray(origin, float), np.asarray(u, float), np.asarray(v, float), creases


def _cube_rects(size=1.0):
    s = size
    e = np.eye(3) * s
    rects = []
    for axis in range(3):
        a, b = e[(axis + 1) % 3], e[(axis + 2) % 3]
        rects.append(_rect(np.zeros(3), a, b))
        rects.append(_rect(e[axis], a, b))
    return rects


def _block_rects():
    # 2 x 1 x 0.6 block with a 0.4-wide, 0.3-deep slot running along y on the top face
    x0, x1, x2, x3 = 0.0, 0.8, 1.2, 2.0
    z0, z1, z2 = 0.0, 0.3, 0.6
    ey = np.array([0.0, 1.0, 0.0])
    rects = [
        _rect([x0, 0, z0], [x3, 0, 0], ey),            # bottom
        _rect([x0, 0, z2], [x1, 0, 0], ey),            # top, left of slot
        _rect([x2, 0, z2], [x3 - x2, 0, 0], ey),       # top, right of slot
        _rect([x1, 0, z1], [x2 - x1, 0, 0], ey),       # slot floor
        _rect([x1, 0, z1], [0, 0, z2 - z1], ey),       # slot walls
        _rect([x2, 0, z1], [0, 0, z2 - z1], ey),
        _rect([x0, 0, z0], [0, 0, z2], ey),            # end faces
        _rect([x3, 0, z0], [0, 0, z2], ey),
    ]
    for y in (0.0, 1.0):
        # U-shaped side faces, split into rectangles; creases listed as (u=0, u=1, v=0, v=1)
        rects += [
            _rect([x0, y, z0], [x1, 0, 0], [0, 0, z1], (True, False, True, False)),
            _rect([x0, y, z1], [x1, 0, 0], [0, 0, z2 - z1], (True, True, False, True)),
            _rect([x1, y, z0], [x2 - x1, 0, 0], [0, 0, z1], (False, False, True, True)),
            _rect([x2, y, z0], [x3 - x2, 0, 0], [0, 0, z1], (False, True, True, False)),
            _rect([x2, y, z1], [x3 - x2, 0, 0], [0, 0, z2 - z1], (True, True, False, True)),
        ]
    return rects


def _apportion(weights, n):
    quota = n * np.asarray(weights) / np.sum(weights)
    out = np.floor(quota).astype(int)
    order = np.argsort(-(quota - out), kind="stable")
    out[order[: n - out.sum()]] += 1
    return out


def _sample_rect(rect, count, rng, jitter, band):
    origin, u, v, creases = rect
    lu, lv = np.linalg.norm(u), np.linalg.norm(v)
    if count == 0:
        return np.empty((0, 3)), np.empty(0, bool)
    h = np.sqrt(lu * lv / count)
    nu = max(1, int(round(lu / h)))
    nv = max(1, int(np.ceil(count / nu)))
    cells = rng.choice(nu * nv, size=count, replace=False) if nu * nv > count else np.arange(count)
    iu, iv = cells % nu, cells // nu
    s = (iu + 0.5 + jitter * (rng.random(count) - 0.5)) / nu
    t = (iv + 0.5 + jitter * (rng.random(count) - 0.5)) / nv
    pts = origin + s[:, None] * u + t[:, None] * v
    du = np.stack([s * lu, (1 - s) * lu, t * lv, (1 - t) * lv], axis=1)
    near = (du < band) & np.array(creases)[None, :]
    return pts, near.any(axis=1)


def _sample_rects(rects, n, rng, jitter, band):
    areas = [np.linalg.norm(np.cross(r[1], r[2])) for r in rects]
    counts = _apportion(areas, n)
    parts = [_sample_rect(r, c, rng, jitter, band) for r, c in zip(rects, counts)]
    pts = np.concatenate([p for p, _ in parts])
    labels = np.concatenate([lab for _, lab in parts])
    perm = rng.permutation(n)
    return pts[perm], labels[perm]


def generate(
    shape: str,
    n: int,
    seed: int = 0,
    size: float = DEFAULT_SIZE,
    jitter: float = 1.0,
    band: float = DEFAULT_BAND,
):
    """Return (cloud, edge labels) for a named synthetic shape.

    Surfaces are sampled on per-face jittered grids.  ``size`` is the cube edge
    (block length is 2*size, sphere diameter is size).  A point is labelled
    as an edge point when it lies within ``band * size`` of a crease.

    Loss magnitudes scale with size**2, so lambda values are only comparable
    between clouds of similar point spacing.
    """
    if n < 1:
        raise ValueError("point count must be positive")
    rng = np.random.default_rng(seed)
    if shape == "cube":
        pts, labels = _sample_rects(_cube_rects(), n, rng, jitter, band)
    elif shape == "block":
        pts, labels = _sample_rects(_block_rects(), n, rng, jitter, band)
    elif shape == "sphere":
        # Fibonacci lattice with tangential jitter
        i = np.arange(n) + 0.5
        z = 1 - 2 * i / n
        phi = np.pi * (1 + 5**0.5) * i
        r = np.sqrt(1 - z * z)
        pts = np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)
        pts += jitter * 0.5 * np.sqrt(4 * np.pi / n) * (rng.random((n, 3)) - 0.5)
        pts /= np.linalg.norm(pts, axis=1, keepdims=True)
        labels = np.zeros(n, dtype=bool)
    else:
        raise ValueError(f"unknown shape {shape!r}; expected one of {SHAPES}")
    if shape == "sphere":
        pts = pts * (0.5 * size)
    else:
        pts = pts * size
    return PointCloud(pts), labels
