import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spectral_coarsen.cluster import (
    centroid_cost,
    coarse_cluster_pipeline,
    kmeans,
    kmeans_cost,
    lift_alignment_error,
    match_labels,
    refine,
    relative_error,
    spectral_embed,
)
from spectral_coarsen.coarsen import CoarseningMap, coarsen_laplacian, coarsening_matrix
from spectral_coarsen.eigen import sym_eig
from spectral_coarsen.analysis import sintheta, sintheta_canonical
from spectral_coarsen.graph import SBM, Graph, build_laplacian, generate, generate_sbm

from oracles import brute_min_kmeans


def two_cliques(n=5, bridge=False):
    edges = [(i, j, 1.0) for i in range(n) for j in range(i + 1, n)]
    edges += [(i + n, j + n, 1.0) for i in range(n) for j in range(i + 1, n)]
    if bridge:
        edges.append((n - 1, n, 1.0))
    return Graph(2 * n, edges)


def test_embed_examples(p3):
    L = build_laplacian(p3)
    psi = spectral_embed(L, 1)
    np.testing.assert_allclose(psi[:, 0], np.full(3, 1 / math.sqrt(3)))
    psi = spectral_embed(L, 2)
    np.testing.assert_allclose(psi[:, 1], np.array([1, 0, -1]) / math.sqrt(2), atol=1e-12)
    rows = np.round(spectral_embed(build_laplacian(two_cliques()), 2), 10)
    assert len(np.unique(rows, axis=0)) == 2
    with pytest.raises(ValueError):
        spectral_embed(L, 4)


def test_cost_examples():
    assert kmeans_cost(np.ones((4, 2)), np.zeros(4, dtype=int)) == 0.0
    assert kmeans_cost(np.array([0.0, 2.0]), np.array([0, 0])) == pytest.approx(2.0)
    pts = np.array([[0.0, 0], [1, 0], [10, 10], [10, 12]])
    labels = np.array([0, 0, 1, 1])
    assert kmeans_cost(pts, labels) == pytest.approx(0.5 + 2.0)
    # an unused label contributes nothing
    assert kmeans_cost(pts, np.array([0, 0, 2, 2])) == pytest.approx(2.5)


@given(st.integers(1, 40), st.integers(1, 5), st.integers(1, 6), st.integers(0, 9999))
def test_pairwise_equals_centroid(N, d, K, seed):
    rng = np.random.default_rng(seed)
    psi = rng.normal(size=(N, d))
    labels = rng.integers(0, K, N)
    assert kmeans_cost(psi, labels) == pytest.approx(centroid_cost(psi, labels), abs=1e-10)


def test_kmeans_examples():
    rng = np.random.default_rng(0)
    pts = rng.normal(size=(6, 2))
    assert kmeans(pts, 6).cost == pytest.approx(0, abs=1e-20)
    psi = spectral_embed(build_laplacian(two_cliques()), 2)
    res = kmeans(psi, 2, seed=1)
    assert res.cost < 1e-20
    assert len(set(res.labels[:5])) == 1 and res.labels[0] != res.labels[5]
    with pytest.raises(ValueError):
        kmeans(pts, 7)


@given(st.integers(4, 8), st.integers(2, 3), st.integers(0, 9999))
def test_kmeans_near_exhaustive_minimum(N, K, seed):
    rng = np.random.default_rng(seed)
    psi = rng.normal(size=(N, 2))
    best = brute_min_kmeans(psi, K)
    got = kmeans(psi, K, seed=seed, restarts=20).cost
    assert got >= best - 1e-10
    assert got <= 1.5 * best + 1e-10


def test_kmeans_recovers_sbm():
    g, truth = generate_sbm(SBM(300, 5, 0.3, 0.01), 3)
    res = kmeans(spectral_embed(build_laplacian(g), 5), 5, seed=0, restarts=20)
    assert match_labels(res.labels, truth) >= 0.95
    again = kmeans(spectral_embed(build_laplacian(g), 5), 5, seed=0, restarts=20)
    assert np.array_equal(res.labels, again.labels)


def test_refine():
    g = generate(SBM(60, 3, 0.5, 0.05), 0)
    L = build_laplacian(g)
    eig = sym_eig(L)
    X = np.array(eig.vectors[:, :3])
    np.testing.assert_array_equal(refine(X, L, 0, eig.values[-1]), X)
    out = refine(X, L, 5, eig.values[-1])
    np.testing.assert_allclose(np.abs(out.T @ X), np.eye(3), atol=1e-10)  # directions preserved
    rng = np.random.default_rng(1)
    Y = rng.normal(size=(60, 3))
    out = refine(Y, L, 3, eig.values[-1])
    np.testing.assert_allclose(out.T @ out, np.eye(3), atol=1e-10)
    np.testing.assert_allclose(out[:, 0], 1 / math.sqrt(60))
    with pytest.raises(ValueError):
        refine(X, L, 1, 0.0)
    with pytest.raises(ValueError):
        refine(X, L, -1, 1.0)


def test_lift_alignment_examples(p3, p3_map):
    L = build_laplacian(p3)
    C = coarsening_matrix(p3_map)
    eL, eC = sym_eig(L), sym_eig(coarsen_laplacian(L, C))
    assert lift_alignment_error(eL, eC, C, 1) == pytest.approx(0, abs=1e-12)
    I = coarsening_matrix(CoarseningMap.identity(3))
    assert lift_alignment_error(eL, eL, I, 3) == pytest.approx(0, abs=1e-7)


@given(st.integers(0, 9999))
def test_procrustes_optimal_and_principal_angle_inequality(seed):
    from spectral_coarsen.rec import rec_coarsen_fast

    g = generate(SBM(60, 3, 0.5, 0.05), seed)
    if not g.is_connected():
        return
    L = build_laplacian(g)
    cmap = rec_coarsen_fast(g, ratio=0.3, seed=seed, neighborhood="incident").cmap
    C = coarsening_matrix(cmap)
    eL, eC = sym_eig(L), sym_eig(coarsen_laplacian(L, C))
    K = 3
    gamma = lift_alignment_error(eL, eC, C, K)
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.normal(size=(K, K)))
    X, Y = eL.vectors[:, :K], C.T @ eC.vectors[:, :K]
    assert gamma <= np.linalg.norm(X - Y @ Q) + 1e-12
    assert gamma**2 <= 2 * sintheta_canonical(eL, eC, C, K) + 1e-8


def test_alignment_inequality_with_summed_form_can_fail():
    """gamma^2 <= 2 theta needs principal angles; the summed form misses the out-of-range mass."""
    from spectral_coarsen.rec import rec_coarsen_fast

    g = generate(SBM(100, 5, 0.5, 0.05), 1)
    L = build_laplacian(g)
    eL = sym_eig(L)
    fails = 0
    for seed in range(10):
        cmap = rec_coarsen_fast(g, ratio=0.3, seed=seed).cmap
        C = coarsening_matrix(cmap)
        eC = sym_eig(coarsen_laplacian(L, C))
        gamma = lift_alignment_error(eL, eC, C, 5)
        fails += gamma**2 > 2 * sintheta(eL, eC, C, 5) + 1e-8
        assert gamma**2 <= 2 * sintheta_canonical(eL, eC, C, 5) + 1e-8
    assert fails > 0


def test_pipeline_identity_and_json():
    g = generate(SBM(90, 3, 0.5, 0.02), 2)
    rep = coarse_cluster_pipeline(g, 3, 0.0, seed=0, restarts=10)
    assert rep.r_realized == 0.0 and rep.gamma == pytest.approx(0, abs=1e-7)
    assert rep.gap == pytest.approx(0, abs=1e-12) and rep.relative_error == pytest.approx(0, abs=1e-9)
    data = json.loads(rep.to_json())
    assert {"seed", "r_realized", "costs", "gap", "relative_error", "refinement_curve"} <= set(data)


def test_pipeline_cliques_with_bridge():
    g = two_cliques(8, bridge=True)
    rep = coarse_cluster_pipeline(g, 2, 0.1, seed=0, restarts=10, neighborhood="incident")
    assert rep.gap == pytest.approx(0, abs=1e-6)


def test_pipeline_sbm_costs_ordered():
    g = generate(SBM(300, 5, 0.3, 0.01), 3)
    L = build_laplacian(g)
    eig = sym_eig(L)
    for seed in range(3):
        rep = coarse_cluster_pipeline(g, 5, 0.3, seed=seed, restarts=20, refine_steps=(0, 10), eig_L=eig, L=L)
        assert rep.cost_coarse >= rep.cost_original - 1e-9
        assert rep.cost_gap_holds()


def test_relative_error():
    assert relative_error(2.0, 1.0) == 1.0
    assert relative_error(0.0, 0.0) == 0.0
    assert relative_error(1.0, 0.0) == math.inf


def test_reduced_K_lower_bound():
    g = generate(SBM(150, 4, 0.4, 0.02), 5)
    psi = spectral_embed(build_laplacian(g), 4)
    for kappa in range(1, 4):
        assert kmeans(psi, kappa, seed=0).cost >= 4 - kappa - 1e-9
