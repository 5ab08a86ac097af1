import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from graphsimp.core import PointCloud
from graphsimp.graph import build_knn_graph, dense_adjacency, laplacian_apply
from graphsimp.objective import (
    SimplificationProblem,
    feature_loss,
    feature_vector,
    gradient,
    total_loss,
    uniformity_loss,
)
from oracles import dense_losses, enumerate_binary_uniformity


def random_instance(rng, n, k, lam=None, alpha=None):
    pts = rng.normal(size=(n, 3))
    c = PointCloud(pts)
    g = build_knn_graph(c, k=k)
    alpha = rng.uniform(0.05, 1.0) if alpha is None else alpha
    lam = 10 ** rng.uniform(-3, 1) if lam is None else lam
    return c, g, SimplificationProblem.from_graph(g, c, alpha, lam)


def test_feature_vector_flat_grid_interior_vs_edge():
    xs, ys = np.meshgrid(np.arange(12.0), np.arange(12.0))
    c = PointCloud(np.stack([xs.ravel(), ys.ravel(), np.zeros(144)], axis=1))
    f = feature_vector(build_knn_graph(c, k=4), c)
    interior = (xs.ravel() > 0) & (xs.ravel() < 11) & (ys.ravel() > 0) & (ys.ravel() < 11)
    assert f[interior].max() < 1e-6 * f[~interior].max()


def test_feature_vector_outlier_and_pair():
    c = PointCloud([[0.0, 0, 0], [1.0, 0, 0], [2.0, 0, 0], [3.0, 0, 0], [10.0, 0, 0]])
    g = build_knn_graph(c, k=2, sigma=1.0)
    assert feature_vector(g, c)[4] == pytest.approx(np.sum(laplacian_apply(g, c)[4] ** 2), rel=1e-15)
    assert feature_vector(g, c)[4] == pytest.approx((7.0 + 1.0 / (1.0 + np.exp(15.0))) ** 2, rel=1e-12)
    pair = PointCloud([[0.0, 0, 0], [1.0, 2, 2]])
    np.testing.assert_allclose(feature_vector(build_knn_graph(pair, k=1), pair), [9.0, 9.0], rtol=1e-15)


def test_feature_loss_endpoints(rng):
    _, _, p = random_instance(rng, 20, 3)
    assert feature_loss(p, np.ones(20)) == 0.0
    assert feature_loss(p, np.zeros(20)) == pytest.approx(p.f.sum(), rel=1e-14)
    with pytest.raises(ValueError):
        feature_loss(p, np.ones(19))


def test_feature_loss_matches_quadratic_form(rng):
    _, _, p = random_instance(rng, 15, 3)
    psi = rng.uniform(size=15)
    quad = psi @ np.diag(p.f) @ psi - 2 * p.f @ psi + p.f.sum()
    assert feature_loss(p, psi) == pytest.approx(quad, rel=1e-12)


def test_uniformity_zero_cases(rng):
    _, _, p = random_instance(rng, 30, 4, alpha=0.25)
    assert uniformity_loss(p, np.full(30, 0.25)) == 0.0
    _, _, p1 = random_instance(rng, 30, 4, alpha=1.0)
    assert uniformity_loss(p1, np.ones(30)) == 0.0


def test_uniformity_hand_enumeration():
    pts = np.array([[0, 0, 0], [1, 0, 0], [2.5, 0, 0], [0, 3, 0], [0, 4.2, 0], [5, 5, 5]], float)
    c = PointCloud(pts)
    g = build_knn_graph(c, k=2)
    p = SimplificationProblem.from_graph(g, c, 0.5, 1.0)
    keep = {0, 2, 4}
    psi = np.array([1.0 if i in keep else 0.0 for i in range(6)])
    expected = enumerate_binary_uniformity(dense_adjacency(g), keep, 0.5, 2)
    assert uniformity_loss(p, psi) == pytest.approx(expected, rel=1e-15)


def test_total_loss_definition(rng):
    _, _, p = random_instance(rng, 25, 3)
    psi = rng.uniform(size=25)
    assert total_loss(p, psi) == pytest.approx(feature_loss(p, psi) + p.lam * uniformity_loss(p, psi), rel=1e-12)
    assert total_loss(p, np.ones(25)) == pytest.approx(p.lam * uniformity_loss(p, np.ones(25)))
    _, _, p0 = random_instance(rng, 25, 3, lam=0.0)
    assert total_loss(p0, psi) == feature_loss(p0, psi)
    _, _, p1 = random_instance(rng, 25, 3, alpha=1.0)
    assert total_loss(p1, np.ones(25)) == 0.0


def test_gradient_at_all_ones(rng):
    _, g, p = random_instance(rng, 20, 3)
    a = dense_adjacency(g)
    expected = 2 * p.lam * p.k * (1 - p.alpha) * (a.T @ np.ones(20))
    np.testing.assert_allclose(gradient(p, np.ones(20)), expected, rtol=1e-12)
    _, _, p0 = random_instance(rng, 20, 3, lam=0.0)
    assert np.all(gradient(p0, np.ones(20)) == 0.0)


def central_difference(p, psi, h=1e-5):
    out = np.empty_like(psi)
    for i in range(psi.size):
        e = np.zeros_like(psi)
        e[i] = h
        out[i] = (total_loss(p, psi + e) - total_loss(p, psi - e)) / (2 * h)
    return out


def test_gradient_finite_difference_n8(rng):
    _, _, p = random_instance(rng, 8, 2)
    psi = rng.uniform(size=8)
    fd = central_difference(p, psi)
    assert np.max(np.abs(gradient(p, psi) - fd)) <= 1e-5 * max(1.0, np.abs(fd).max())


def test_problem_validation():
    a = sp.csr_matrix(np.array([[0, 1.0], [0, 0]]))
    with pytest.raises(ValueError, match="sum to k"):
        SimplificationProblem(np.ones(2), a, 1, 0.5, 1.0)
    with pytest.raises(ValueError):
        SimplificationProblem(-np.ones(2), sp.csr_matrix(np.array([[0, 1.0], [1, 0]])), 1, 0.5, 1.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(6, 60))
def test_losses_match_dense_oracle_and_convexity(seed, n):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(1, 5))
    c, g, p = random_instance(rng, n, k)
    psi = rng.uniform(size=n)
    lf, le, lt = dense_losses(laplacian_apply(g, c), dense_adjacency(g), psi, p.alpha, k, p.lam)
    assert feature_loss(p, psi) == pytest.approx(lf, rel=1e-10, abs=1e-14)
    assert uniformity_loss(p, psi) == pytest.approx(le, rel=1e-10, abs=1e-14)
    assert total_loss(p, psi) == pytest.approx(lt, rel=1e-10, abs=1e-14)
    q, t = rng.uniform(size=n), rng.uniform()
    mix = total_loss(p, t * psi + (1 - t) * q)
    assert mix <= t * total_loss(p, psi) + (1 - t) * total_loss(p, q) + 1e-9
