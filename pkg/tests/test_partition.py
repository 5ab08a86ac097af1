import numpy as np
import pytest

from graphsimp.core import PointCloud, target_count
from graphsimp.graph import build_knn_graph, knn_search
from graphsimp.objective import SimplificationProblem, feature_vector, uniformity_loss
from graphsimp.partition import (
    CubePartition,
    SimplifyParams,
    allocate_budgets,
    audit,
    build_cube_problems,
    build_partition,
    simplify,
    simplify_detailed,
    simplify_unpartitioned,
    single_cube_partition,
)
from graphsimp.synth import generate


def uniform_cube(n, seed=0):
    return PointCloud(np.random.default_rng(seed).uniform(size=(n, 3)))


def check_partition(part, n):
    allidx = np.concatenate(part.cubes)
    assert allidx.size == n and np.array_equal(np.sort(allidx), np.arange(n))
    assert np.all(part.sizes <= part.size_limits[1])


def test_small_cloud_single_cube():
    part = build_partition(uniform_cube(5000))
    assert len(part) == 1 and part.cubes[0].size == 5000


def test_20k_uniform_cube_partition():
    part = build_partition(uniform_cube(20_000))
    check_partition(part, 20_000)
    assert 3 <= len(part) <= 8


def test_coincident_points_fall_back_to_chunks():
    c = PointCloud(np.ones((10_000, 3)))
    part = build_partition(c)
    check_partition(part, 10_000)
    assert len(part) == 2


def test_near_coincident_mass():
    rng = np.random.default_rng(3)
    pts = np.concatenate([1.0 + 1e-300 * rng.random((9000, 3)), rng.uniform(size=(500, 3))])
    part = build_partition(PointCloud(pts), (100, 1000))
    check_partition(part, 9500)


def test_budgets():
    one = CubePartition([np.arange(1000)], [None])
    assert allocate_budgets(one, 0.1).tolist() == [100]
    two = CubePartition([np.arange(500), np.arange(500, 1000)], [None, None])
    assert allocate_budgets(two, 0.2).tolist() == [100, 100]
    uneven = CubePartition([np.arange(3000), np.arange(3000, 8000)], [None, None])
    assert allocate_budgets(uneven, 0.1).tolist() == [300, 500]


def test_budget_apportionment_properties(rng):
    for _ in range(200):
        sizes = rng.integers(1, 50, size=rng.integers(1, 12))
        edges = np.concatenate([[0], np.cumsum(sizes)])
        part = CubePartition([np.arange(edges[i], edges[i + 1]) for i in range(sizes.size)], [None] * sizes.size)
        alpha = rng.uniform(0.01, 1.0)
        b = allocate_budgets(part, alpha)
        assert b.sum() == target_count(alpha, edges[-1])
        assert np.all((b >= 0) & (b <= sizes))


def test_single_cube_problem_equals_unpartitioned(rng):
    c = uniform_cube(600)
    g = build_knn_graph(c, 10)
    [cp] = build_cube_problems(c, single_cube_partition(c), alpha=0.1, lam=1e-3, graph=g)
    ref = SimplificationProblem.from_graph(g, c, 0.1, 1e-3)
    assert np.array_equal(cp.problem.f, ref.f)
    assert (cp.problem.adjacency != ref.adjacency).nnz == 0
    assert np.all(cp.in_cube_degree == 10)


def test_line_split_boundary_complement():
    c = PointCloud([[float(x), 0.0, 0.0] for x in range(10)])
    part = CubePartition([np.arange(5), np.arange(5, 10)], [None, None], (1, 5))
    left, right = build_cube_problems(c, part, k=2, alpha=0.5, lam=1.0)
    # point 4's neighbors are 3 and 5; only 3 lies in its cube
    assert left.in_cube_degree.tolist() == [2, 2, 2, 2, 1]
    assert left.problem.adjacency.toarray()[4, 4] == 1.0
    assert right.problem.adjacency.toarray()[0, 0] == 1.0
    for cp in (left, right):
        assert np.all(np.asarray(cp.problem.adjacency.sum(axis=1)).ravel() == 2)
        assert uniformity_loss(cp.problem, np.full(5, 0.5)) == 0.0


def test_halo_features_match_enlarged_cube_graph():
    cloud, _ = generate("block", 12_000, seed=5)
    part = build_partition(cloud, (1000, 3000))
    assert len(part) > 1
    g = build_knn_graph(cloud, 10)
    problems = build_cube_problems(cloud, part, alpha=0.1, lam=1e-3, graph=g)
    pts = cloud.points
    for cp in problems[:4]:
        # literal halo: every point within the largest interior k-NN radius of the cube box
        margin = g.distances[cp.interior, -1].max() * 1.001
        lo, hi = pts[cp.interior].min(axis=0) - margin, pts[cp.interior].max(axis=0) + margin
        region = np.flatnonzero(np.all((pts >= lo) & (pts <= hi), axis=1))
        nbr, _ = knn_search(pts[region], 10)
        pos = {int(j): i for i, j in enumerate(region)}
        local_rows = [pos[int(i)] for i in cp.interior]
        assert np.array_equal(region[nbr[local_rows]], g.neighbors[cp.interior])
        assert np.array_equal(cp.problem.f, feature_vector(g, cloud)[cp.interior])
        assert np.all(np.asarray(cp.problem.adjacency.sum(axis=1)).ravel() == 10)


def test_alpha_one_keeps_everything():
    c = uniform_cube(3000)
    for lam in (0.0, 1e-3, 10.0):
        assert len(simplify(c, SimplifyParams(alpha=1.0, lam=lam, size_limits=(200, 800)))) == 3000


def test_single_cube_pipeline_equals_unpartitioned():
    cloud, _ = generate("cube", 4000, seed=2)
    params = SimplifyParams(alpha=0.1, lam=1e-3)
    a = simplify(cloud, params)
    b = simplify_unpartitioned(cloud, params)
    assert np.array_equal(a.kept, b.kept)


def test_determinism_and_audit():
    cloud, _ = generate("block", 9000, seed=1)
    params = SimplifyParams(alpha=0.05, lam=1e-2, size_limits=(1000, 2500))
    r1 = simplify_detailed(cloud, params)
    r2 = simplify_detailed(cloud, SimplifyParams(**{**params.__dict__, "workers": 3}))
    assert np.array_equal(r1.mask.kept, r2.mask.kept)
    assert all(audit(r1, cloud).values())


def test_params_validation():
    with pytest.raises(ValueError):
        SimplifyParams(alpha=0.0)
    with pytest.raises(ValueError):
        SimplifyParams(alpha=0.1, lam=-1.0)
    with pytest.raises(ValueError):
        SimplifyParams(alpha=0.1, size_limits=(10, 5))
    with pytest.raises(ValueError):
        simplify(PointCloud(np.zeros((5, 3))), SimplifyParams(alpha=0.5, k=10))
