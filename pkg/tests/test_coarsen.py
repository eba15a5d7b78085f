import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spectral_coarsen.coarsen import (
    CoarseningError,
    CoarseningMap,
    coarsen_laplacian,
    coarsening_frame,
    coarsening_matrix,
    downsample,
    lift,
    map_from_matching,
    project,
    projection_matrix,
    projection_rank,
    renormalized_laplacian,
)
from spectral_coarsen.graph import ErdosRenyi, Graph, build_laplacian, generate
from spectral_coarsen.rec import rec_coarsen_fast

from conftest import SQ2, SQ3, random_matching, star


def test_toy_coarsening_matrix(toy_map):
    C = coarsening_matrix(toy_map)
    expected_T = np.array([
        [1 / SQ3, 0, 0],
        [1 / SQ3, 0, 0],
        [1 / SQ3, 0, 0],
        [0, 1, 0],
        [0, 0, 1],
    ])
    np.testing.assert_allclose(C.T, expected_T, atol=1e-12)


def test_toy_coarsened_laplacian(toy_graph, toy_map):
    Lc = coarsen_laplacian(build_laplacian(toy_graph), coarsening_matrix(toy_map))
    expected = np.array([
        [2 / 3, -1 / SQ3, -1 / SQ3],
        [-1 / SQ3, 1, 0],
        [-1 / SQ3, 0, 1],
    ])
    np.testing.assert_allclose(Lc, expected, atol=1e-12)


def test_toy_lc_ignores_internal_wiring(toy_graph, toy_map):
    # dropping the internal edge 0-1 leaves the gray set connected and L_c unchanged
    sparser = Graph(5, [e for e in toy_graph.edges() if (e[0], e[1]) != (0, 1)])
    C = coarsening_matrix(toy_map)
    np.testing.assert_allclose(
        coarsen_laplacian(build_laplacian(sparser), C), coarsen_laplacian(build_laplacian(toy_graph), C), atol=1e-12
    )


def test_map_from_matching(p3):
    assert map_from_matching(p3, []).n == 3
    cmap = map_from_matching(p3, [(0, 1)])
    assert cmap.groups == ((0, 1), (2,)) and cmap.n == 2
    with pytest.raises(CoarseningError, match="not a matching"):
        map_from_matching(star(), [(0, 1), (0, 2)])
    with pytest.raises(CoarseningError):
        map_from_matching(p3, [(0, 2)])


def test_small_matrices(p3_map):
    np.testing.assert_array_equal(coarsening_matrix(CoarseningMap.identity(3)), np.eye(3))
    C = coarsening_matrix(CoarseningMap.from_groups(2, [[0, 1]]))
    np.testing.assert_allclose(C, [[1 / SQ2, 1 / SQ2]])


def test_p3_coarsened(p3, p3_map):
    Lc = coarsen_laplacian(build_laplacian(p3), coarsening_matrix(p3_map))
    np.testing.assert_allclose(Lc, [[0.5, -1 / SQ2], [-1 / SQ2, 1]], atol=1e-12)
    np.testing.assert_allclose(np.linalg.eigvalsh(Lc), [0, 1.5], atol=1e-12)


def test_identity_coarsening_is_noop(toy_graph):
    L = build_laplacian(toy_graph)
    C = coarsening_matrix(CoarseningMap.identity(5))
    np.testing.assert_array_equal(coarsen_laplacian(L, C), L)
    x = np.arange(5.0)
    np.testing.assert_array_equal(project(C, x), x)


def test_project_examples(p3_map):
    C = coarsening_matrix(p3_map)
    np.testing.assert_allclose(project(C, np.ones(3)), np.ones(3))
    x = np.array([1, 0, -1]) / SQ2
    np.testing.assert_allclose(project(C, x), [1 / (2 * SQ2), 1 / (2 * SQ2), -1 / SQ2])


def test_dimension_errors(p3_map):
    C = coarsening_matrix(p3_map)
    with pytest.raises(CoarseningError):
        downsample(C, np.ones(4))
    with pytest.raises(CoarseningError):
        lift(C, np.ones(3))
    with pytest.raises(CoarseningError):
        coarsen_laplacian(np.eye(4), C)


def test_projection_blocks():
    P, Pp = projection_matrix(coarsening_matrix(CoarseningMap.from_groups(2, [[0, 1]])))
    np.testing.assert_allclose(P, [[0.5, 0.5], [0.5, 0.5]])
    np.testing.assert_allclose(P + Pp, np.eye(2))
    P, _ = projection_matrix(coarsening_matrix(CoarseningMap.identity(4)))
    np.testing.assert_array_equal(P, np.eye(4))


def test_renormalized(p3, p3_map, toy_graph, toy_map):
    C = coarsening_matrix(p3_map)
    Lr, Q = renormalized_laplacian(coarsen_laplacian(build_laplacian(p3), C), C)
    np.testing.assert_allclose(Q, np.diag([SQ2, 1]))
    np.testing.assert_allclose(Lr, [[1, -1], [-1, 1]], atol=1e-12)
    C = coarsening_matrix(toy_map)
    Lc = coarsen_laplacian(build_laplacian(toy_graph), C)
    Lr, Q = renormalized_laplacian(Lc, C)
    np.testing.assert_allclose(np.diag(Q), [SQ3, 1, 1])
    assert np.max(np.abs(Lr.sum(axis=1))) < 1e-12
    assert np.all(Lr[~np.eye(3, dtype=bool)] <= 1e-15)
    xc = np.array([0.3, -1.0, 2.0])
    y = np.linalg.solve(Q, xc)
    assert abs(xc @ Lc @ xc - y @ Lr @ y) < 1e-12
    Lr, Q = renormalized_laplacian(build_laplacian(toy_graph), np.eye(5))
    np.testing.assert_array_equal(Q, np.eye(5))


def test_frames(toy_graph, toy_map, p3, p3_map):
    assert coarsening_frame(toy_graph, CoarseningMap.identity(5)).vertices == ()
    fr = coarsening_frame(toy_graph, toy_map)
    assert fr.vertices == (0, 1, 2) and len(fr.edges) == 3 and not fr.is_matching()
    fr = coarsening_frame(p3, p3_map)
    assert fr.edges == ((0, 1, 1.0),) and fr.is_matching()


def test_map_json_roundtrip(toy_map):
    text = toy_map.to_json()
    assert json.loads(text) == {"n": 3, "groups": [[0, 1, 2], [3], [4]]}
    assert CoarseningMap.from_json(text) == toy_map


@pytest.mark.parametrize("groups", [[[0, 1], [1, 2]], [[0], [1]], [[0, 1, 2], []], [[0, 5], [1, 2]]])
def test_map_validation(groups):
    with pytest.raises(CoarseningError):
        CoarseningMap.from_groups(3, groups)


def test_groups_sorted_by_smallest_member():
    cmap = CoarseningMap.from_groups(4, [[3], [2, 0], [1]])
    assert cmap.groups == ((0, 2), (1,), (3,))
    assert list(cmap.group_of) == [0, 1, 0, 2]


@given(st.integers(0, 5000))
def test_rec_projection_properties(seed):
    g = generate(ErdosRenyi(50, 0.1), seed)
    cmap = rec_coarsen_fast(g, ratio=0.3, seed=seed).cmap
    C = coarsening_matrix(cmap)
    P, _ = projection_matrix(C)
    assert np.max(np.abs(P @ P - P)) <= 1e-12
    assert abs(np.trace(P) - cmap.n) <= 1e-12
    assert projection_rank(P) == cmap.n
    assert np.max(np.abs(C @ C.T - np.eye(cmap.n))) <= 1e-12


@given(st.integers(0, 5000), st.integers(2, 40))
def test_quadratic_form_chain(seed, N):
    rng = np.random.default_rng(seed)
    g = generate(ErdosRenyi(N, 0.3), seed)
    L = build_laplacian(g)
    cmap = map_from_matching(g, random_matching(g, rng))
    C = coarsening_matrix(cmap)
    P, _ = projection_matrix(C)
    x = rng.normal(size=N)
    xc = C @ x
    lhs = xc @ coarsen_laplacian(L, C) @ xc
    rhs = (P @ x) @ L @ (P @ x)
    assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(rhs))
    assert rhs >= -1e-12


def test_internal_edges_do_not_affect_lc():
    g_without = Graph(4, [(0, 1, 1.0), (1, 2, 0.5), (2, 3, 1.0)])
    g_with = Graph(4, [(0, 1, 1.0), (0, 2, 0.3), (1, 2, 0.5), (2, 3, 1.0)])
    C = coarsening_matrix(CoarseningMap.from_groups(4, [[0, 1, 2], [3]]))
    np.testing.assert_allclose(
        coarsen_laplacian(build_laplacian(g_with), C), coarsen_laplacian(build_laplacian(g_without), C), atol=1e-15
    )
