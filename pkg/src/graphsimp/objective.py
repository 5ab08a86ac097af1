"""Feature and uniformity losses of a (relaxed) resampling vector psi."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from graphsimp.core import PointCloud
from graphsimp.graph import KnnGraph, binary_adjacency, laplacian_apply


@dataclass(frozen=True, eq=False)
class SimplificationProblem:
    """Data of one relaxed QP.

    ``f`` holds squared norms of the Laplacian-filtered coordinates and
    ``adjacency`` is the binary k-NN adjacency, every row summing to ``k``
    (boundary rows carry the missing degree on the diagonal).
    """

    f: np.ndarray
    adjacency: sp.csr_matrix
    k: int
    alpha: float
    lam: float
    adjacency_t: sp.csr_matrix = field(init=False, repr=False)

    def __post_init__(self):
        f = np.asarray(self.f, dtype=np.float64)
        if f.ndim != 1 or not np.all(np.isfinite(f)) or np.any(f < 0):
            raise ValueError("f must be a finite nonnegative vector")
        a = sp.csr_matrix(self.adjacency, dtype=np.float64)
        if a.shape != (f.size, f.size):
            raise ValueError(f"adjacency shape {a.shape} does not match {f.size} points")
        rows = np.asarray(a.sum(axis=1)).ravel()
        if not np.array_equal(rows, np.full(f.size, float(self.k))):
            raise ValueError(f"every adjacency row must sum to k={self.k}")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not self.lam >= 0.0:
            raise ValueError(f"lambda must be nonnegative, got {self.lam}")
        f.setflags(write=False)
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "adjacency", a)
        object.__setattr__(self, "adjacency_t", a.T.tocsr())

    @property
    def n(self) -> int:
        return self.f.size

    @property
    def target_degree(self) -> float:
        return self.alpha * self.k

    @classmethod
    def from_graph(cls, g: KnnGraph, cloud: PointCloud, alpha: float, lam: float) -> SimplificationProblem:
        return cls(feature_vector(g, cloud), binary_adjacency(g), g.k, alpha, lam)


def feature_vector(g: KnnGraph, cloud: PointCloud) -> np.ndarray:
    """Per-point squared norm of the Laplacian-filtered coordinates."""
    lx = laplacian_apply(g, cloud)
    return np.einsum("ij,ij->i", lx, lx)


def _check(problem: SimplificationProblem, psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=np.float64)
    if psi.shape != (problem.n,):
        raise ValueError(f"psi has shape {psi.shape}, expected ({problem.n},)")
    return psi


def feature_loss(problem: SimplificationProblem, psi) -> float:
    psi = _check(problem, psi)
    return float(np.dot((psi - 1.0) ** 2, problem.f))


def uniformity_residual(problem: SimplificationProblem, psi) -> np.ndarray:
    return problem.adjacency @ psi - problem.target_degree


def uniformity_loss(problem: SimplificationProblem, psi) -> float:
    r = uniformity_residual(problem, _check(problem, psi))
    return float(np.dot(r, r))


def total_loss(problem: SimplificationProblem, psi) -> float:
    return feature_loss(problem, psi) + problem.lam * uniformity_loss(problem, psi)


def gradient(problem: SimplificationProblem, psi) -> np.ndarray:
    psi = _check(problem, psi)
    g = 2.0 * problem.f * (psi - 1.0)
    if problem.lam:
        g += (2.0 * problem.lam) * (problem.adjacency_t @ uniformity_residual(problem, psi))
    return g


def hessian_apply(problem: SimplificationProblem, v) -> np.ndarray:
    """Action of the (constant) Hessian 2F + 2*lam*A^T A on ``v``."""
    v = _check(problem, v)
    out = 2.0 * problem.f * v
    if problem.lam:
        out += (2.0 * problem.lam) * (problem.adjacency_t @ (problem.adjacency @ v))
    return out
