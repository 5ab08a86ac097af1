import numpy as np
import pytest

from graphsimp.baseline import contour_only, uniform_voxel
from graphsimp.core import PointCloud, target_count
from graphsimp.metrics import edge_retention, output_degree_variance
from graphsimp.core import select
from graphsimp.partition import SimplifyParams, simplify
from graphsimp.synth import generate


def test_voxel_alpha_one():
    c = PointCloud(np.random.default_rng(0).normal(size=(300, 3)))
    assert len(uniform_voxel(c, 1.0)) == 300


def test_voxel_grid_eighth_is_coarser_grid():
    g = np.stack(np.meshgrid(*[np.arange(4.0)] * 3, indexing="ij"), axis=-1).reshape(-1, 3)
    kept = PointCloud(g).points[uniform_voxel(PointCloud(g), 1 / 8).kept]
    assert len(kept) == 8
    for axis in range(3):
        vals = np.unique(kept[:, axis])
        assert vals.size == 2 and vals[1] - vals[0] == 2.0


@pytest.mark.parametrize("seed", range(5))
def test_voxel_exact_count(seed):
    rng = np.random.default_rng(seed)
    c = PointCloud(rng.normal(size=(int(rng.integers(50, 3000)), 3)) * rng.uniform(0.1, 100))
    alpha = rng.uniform(0.01, 1.0)
    m = uniform_voxel(c, alpha)
    assert len(m) == target_count(alpha, len(c))
    assert np.array_equal(uniform_voxel(c, alpha).kept, m.kept)


def test_voxel_degenerate_cloud():
    assert len(uniform_voxel(PointCloud(np.zeros((40, 3))), 0.25)) == 10


def test_contour_is_lambda_zero():
    cloud, _ = generate("cube", 6000, seed=4)
    params = SimplifyParams(alpha=0.1, lam=1e-2)
    assert np.array_equal(contour_only(cloud, params).kept, simplify(cloud, SimplifyParams(alpha=0.1, lam=0.0)).kept)


def test_contour_vs_proposed_vs_voxel_on_labelled_cube():
    cloud, labels = generate("cube", 20_000, seed=7)
    params = SimplifyParams(alpha=0.1, lam=1e-1)
    contour = contour_only(cloud, params)
    proposed = simplify(cloud, params)
    voxel = uniform_voxel(cloud, 0.1)
    assert edge_retention(labels, contour.kept) >= edge_retention(labels, proposed.kept)
    assert output_degree_variance(select(cloud, contour)) >= output_degree_variance(select(cloud, voxel))
