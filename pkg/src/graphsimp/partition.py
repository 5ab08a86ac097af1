"""Cube partitioning of large clouds and the end-to-end simplification pipeline."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from graphsimp.core import PointCloud, SelectionMask, target_count
from graphsimp.graph import DEFAULT_K, KnnGraph, build_knn_graph, rows_to_csr
from graphsimp.objective import SimplificationProblem, feature_vector, uniformity_loss
from graphsimp.solver import ResampleSolution, SolverConfig, select_top, solve_relaxed

DEFAULT_SIZE_LIMITS = (3000, 8000)
_MAX_DEPTH = 48


@dataclass(frozen=True, eq=False)
class CubePartition:
    cubes: list
    bounds: list
    size_limits: tuple = DEFAULT_SIZE_LIMITS

    def __len__(self) -> int:
        return len(self.cubes)

    @property
    def sizes(self) -> np.ndarray:
        return np.array([c.size for c in self.cubes], dtype=np.int64)


@dataclass(frozen=True, eq=False)
class CubeProblem:
    interior: np.ndarray
    problem: SimplificationProblem
    budget: int
    in_cube_degree: np.ndarray


@dataclass(frozen=True)
class SimplifyParams:
    alpha: float
    lam: float = 1e-3
    k: int = DEFAULT_K
    sigma: float | None = None
    size_limits: tuple = DEFAULT_SIZE_LIMITS
    solver: SolverConfig = field(default_factory=SolverConfig)
    workers: int = 1

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not self.lam >= 0.0:
            raise ValueError(f"lambda must be nonnegative, got {self.lam}")
        if self.k < 1:
            raise ValueError(f"k must be positive, got {self.k}")
        lo, hi = self.size_limits
        if not 1 <= lo <= hi:
            raise ValueError(f"bad cube size limits {self.size_limits}")


@dataclass
class SimplifyResult:
    mask: SelectionMask
    graph: KnnGraph
    f: np.ndarray
    partition: CubePartition
    cube_problems: list
    solutions: list

    @property
    def psi(self) -> np.ndarray:
        """Relaxed confidences scattered back to global indices."""
        out = np.empty(self.graph.n)
        for cp, sol in zip(self.cube_problems, self.solutions):
            out[cp.interior] = sol.psi
        return out


def _chunk(idx: np.ndarray, max_size: int) -> list:
    parts = math.ceil(idx.size / max_size)
    return [c for c in np.array_split(idx, parts)]


def _merge_siblings(groups: list, min_size: int, max_size: int) -> list:
    out = []
    cur = None
    for g in groups:
        if cur is None:
            cur = g
        elif cur.size + g.size <= max_size and (cur.size < min_size or g.size < min_size):
            cur = np.concatenate([cur, g])
        else:
            out.append(cur)
            cur = g
    if cur is not None:
        out.append(cur)
    return out


def build_partition(cloud: PointCloud, size_limits=DEFAULT_SIZE_LIMITS) -> CubePartition:
    """Octree split of the bounding box until every leaf holds at most max_size points.

    Sibling leaves are merged greedily while the union stays within max_size and
    one side is below min_size.  Leaves whose points cannot be separated
    geometrically fall back to index-order chunks.
    """
    min_size, max_size = size_limits
    if not 1 <= min_size <= max_size:
        raise ValueError(f"bad size limits {size_limits}")
    pts = cloud.points

    def split(idx, lo, hi, depth):
        if idx.size <= max_size:
            return [idx]
        if depth >= _MAX_DEPTH or not np.any(hi > lo):
            return _chunk(idx, max_size)
        mid = 0.5 * (lo + hi)
        p = pts[idx]
        code = (p >= mid).astype(np.int64) @ np.array([1, 2, 4])
        groups = []
        for octant in range(8):
            sub = idx[code == octant]
            if sub.size == 0:
                continue
            bits = np.array([(octant >> a) & 1 for a in range(3)], dtype=bool)
            clo = np.where(bits, mid, lo)
            chi = np.where(bits, hi, mid)
            groups.extend(split(sub, clo, chi, depth + 1))
        return _merge_siblings(groups, min_size, max_size)

    lo, hi = pts.min(axis=0), pts.max(axis=0)
    cubes = [np.sort(c) for c in split(np.arange(len(cloud)), lo, hi, 0)]
    bounds = [(pts[c].min(axis=0), pts[c].max(axis=0)) for c in cubes]
    return CubePartition(cubes, bounds, (min_size, max_size))


def single_cube_partition(cloud: PointCloud) -> CubePartition:
    pts = cloud.points
    return CubePartition([np.arange(len(cloud))], [(pts.min(axis=0), pts.max(axis=0))], (1, len(cloud)))


def allocate_budgets(partition: CubePartition, alpha: float) -> np.ndarray:
    """Largest-remainder apportionment of round(alpha * N) over cubes by size."""
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    sizes = partition.sizes
    n = int(sizes.sum())
    total = target_count(alpha, n)
    quota = total * sizes / n
    budgets = np.floor(quota).astype(np.int64)
    budgets = np.minimum(budgets, sizes)
    short = total - int(budgets.sum())
    order = np.lexsort((np.arange(sizes.size), -(quota - budgets)))
    for c in order:
        if short == 0:
            break
        if budgets[c] < sizes[c]:
            budgets[c] += 1
            short -= 1
    return budgets


def cube_adjacency(graph: KnnGraph, interior: np.ndarray):
    """Interior-restricted binary adjacency with the missing degree k - d_i on the diagonal.

    Returns (csr matrix, in-cube degrees d).
    """
    n = graph.n
    local = np.full(n, -1, dtype=np.int64)
    local[interior] = np.arange(interior.size)
    cols = local[graph.neighbors[interior]]
    inside = cols >= 0
    d = inside.sum(axis=1)
    if np.all(inside):
        return rows_to_csr(cols, interior.size), d
    k = graph.k
    rows = np.repeat(np.arange(interior.size), k)[inside.ravel()]
    cols_in = cols[inside]
    vals = np.ones(cols_in.size)
    boundary = np.flatnonzero(d < k)
    rows = np.concatenate([rows, boundary])
    cols_in = np.concatenate([cols_in, boundary])
    vals = np.concatenate([vals, (k - d[boundary]).astype(np.float64)])
    a = sp.csr_matrix((vals, (rows, cols_in)), shape=(interior.size, interior.size))
    a.sum_duplicates()
    a.sort_indices()
    return a, d


def build_cube_problems(
    cloud: PointCloud,
    partition: CubePartition,
    k: int = DEFAULT_K,
    sigma: float | None = None,
    alpha: float = 0.1,
    lam: float = 1e-3,
    graph: KnnGraph | None = None,
    f: np.ndarray | None = None,
) -> list:
    """Per-cube problems sharing one exact global k-NN graph.

    Features come from the global graph, so every interior point sees its full
    neighborhood regardless of the cube boundary.
    """
    if graph is None:
        graph = build_knn_graph(cloud, k, sigma)
    if f is None:
        f = feature_vector(graph, cloud)
    budgets = allocate_budgets(partition, alpha)
    out = []
    for interior, budget in zip(partition.cubes, budgets):
        a, d = cube_adjacency(graph, interior)
        problem = SimplificationProblem(f[interior], a, graph.k, alpha, lam)
        out.append(CubeProblem(interior, problem, int(budget), d))
    return out


def _solve_cube(cp: CubeProblem, config: SolverConfig) -> ResampleSolution:
    return solve_relaxed(cp.problem, float(cp.budget), config)


def simplify_detailed(cloud: PointCloud, params: SimplifyParams, partition: CubePartition | None = None) -> SimplifyResult:
    graph = build_knn_graph(cloud, params.k, params.sigma, workers=params.workers)
    f = feature_vector(graph, cloud)
    if partition is None:
        partition = build_partition(cloud, params.size_limits)
    problems = build_cube_problems(cloud, partition, alpha=params.alpha, lam=params.lam, graph=graph, f=f)
    if params.workers > 1 and len(problems) > 1:
        with ThreadPoolExecutor(params.workers) as ex:
            solutions = list(ex.map(lambda cp: _solve_cube(cp, params.solver), problems))
    else:
        solutions = [_solve_cube(cp, params.solver) for cp in problems]
    kept = np.concatenate([cp.interior[sol.kept] for cp, sol in zip(problems, solutions)])
    mask = SelectionMask(np.sort(kept), params.alpha, len(cloud))
    return SimplifyResult(mask, graph, f, partition, problems, solutions)


def simplify(cloud: PointCloud, params: SimplifyParams) -> SelectionMask:
    """Keep round(alpha * N) points balancing feature preservation and uniform density."""
    return simplify_detailed(cloud, params).mask


def simplify_unpartitioned(cloud: PointCloud, params: SimplifyParams) -> SelectionMask:
    """Solve one problem over the whole cloud with no cube machinery."""
    graph = build_knn_graph(cloud, params.k, params.sigma, workers=params.workers)
    problem = SimplificationProblem.from_graph(graph, cloud, params.alpha, params.lam)
    budget = target_count(params.alpha, len(cloud))
    sol = solve_relaxed(problem, float(budget), params.solver)
    return SelectionMask(select_top(sol.psi, budget, problem.f), params.alpha, len(cloud))


def audit(result: SimplifyResult, cloud: PointCloud) -> dict:
    """Structural checks on a finished run; every value should be True."""
    n = len(cloud)
    part = result.partition
    allidx = np.concatenate(part.cubes)
    min_size, max_size = part.size_limits
    alpha = result.mask.rate
    fresh_f = feature_vector(result.graph, cloud)
    checks = {
        "partition_cover": allidx.size == n and np.array_equal(np.sort(allidx), np.arange(n)),
        "partition_max_size": bool(np.all(part.sizes <= max_size)),
        "budget_sum": int(sum(cp.budget for cp in result.cube_problems)) == target_count(alpha, n),
        "kept_count": len(result.mask) == target_count(alpha, n),
        "row_sums_k": all(
            np.array_equal(np.asarray(cp.problem.adjacency.sum(axis=1)).ravel(), np.full(cp.interior.size, float(cp.problem.k)))
            for cp in result.cube_problems
        ),
        "halo_features": all(np.array_equal(cp.problem.f, fresh_f[cp.interior]) for cp in result.cube_problems),
        "uniform_start_zero_loss": all(
            uniformity_loss(cp.problem, np.full(cp.interior.size, alpha)) <= 1e-20 * cp.interior.size
            for cp in result.cube_problems
        ),
        "solutions_feasible": all(
            np.all((s.psi >= 0) & (s.psi <= 1)) and abs(s.psi.sum() - cp.budget) <= 1e-8 * cp.interior.size
            for cp, s in zip(result.cube_problems, result.solutions)
        ),
    }
    return {k: bool(v) for k, v in checks.items()}


def with_lambda(params: SimplifyParams, lam: float) -> SimplifyParams:
    return replace(params, lam=lam)
