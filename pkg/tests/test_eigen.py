import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spectral_coarsen.eigen import EigenError, jacobi_eigh, sym_eig
from spectral_coarsen.graph import ErdosRenyi, build_laplacian, generate


def test_identity():
    eig = sym_eig(np.eye(3))
    np.testing.assert_array_equal(eig.values, [1, 1, 1])


def test_p3_values(p3):
    np.testing.assert_allclose(sym_eig(build_laplacian(p3)).values, [0, 1, 3], atol=1e-12)
    np.testing.assert_allclose(sym_eig(build_laplacian(p3), method="jacobi").values, [0, 1, 3], atol=1e-12)


def test_two_by_two_trace_det():
    s = 1 / np.sqrt(2)
    np.testing.assert_allclose(sym_eig(np.array([[0.5, -s], [-s, 1.0]])).values, [0, 1.5], atol=1e-12)


@pytest.mark.parametrize("A", [np.array([[1.0, 2.0], [0.0, 1.0]]), np.array([[np.nan, 0], [0, 1.0]]), np.ones((2, 3))])
def test_rejects_bad_input(A):
    with pytest.raises(EigenError):
        sym_eig(A)


def test_sign_convention_and_constant_vector():
    g = generate(ErdosRenyi(30, 0.3), 2)
    eig = sym_eig(build_laplacian(g))
    assert abs(eig.values[0]) <= 1e-9
    np.testing.assert_allclose(eig.vectors[:, 0], np.full(30, 1 / np.sqrt(30)), atol=1e-10)
    for c in range(eig.dim):
        col = eig.vectors[:, c]
        assert col[np.flatnonzero(np.abs(col) > 1e-12)[0]] > 0


def test_deterministic():
    A = build_laplacian(generate(ErdosRenyi(25, 0.3), 8))
    a, b = sym_eig(A), sym_eig(A.copy())
    assert np.array_equal(a.values, b.values) and np.array_equal(a.vectors, b.vectors)


def test_clusters_and_simple():
    eig = sym_eig(np.diag([0.0, 1.0, 1.0, 2.0]))
    assert list(eig.clusters()) == [0, 1, 1, 2]
    assert eig.is_simple(0) and not eig.is_simple(1) and eig.is_simple(3)


@given(st.integers(2, 14), st.integers(0, 10_000))
def test_invariants_and_jacobi_oracle(n, seed):
    rng = np.random.default_rng(seed)
    M = rng.normal(size=(n, n))
    A = M + M.T
    for method in ("lapack", "jacobi"):
        eig = sym_eig(A, method=method)
        X, w = eig.vectors, eig.values
        assert np.all(np.diff(w) >= 0)
        assert np.max(np.abs(X.T @ X - np.eye(n))) <= 1e-10
        res = np.linalg.norm(A @ X - X * w, axis=0)
        assert np.all(res <= 1e-8 * max(1.0, abs(w).max()))
        assert np.linalg.norm(X @ np.diag(w) @ X.T - A) <= 1e-8 * np.linalg.norm(A)
    # independent routes agree on eigenvalues
    np.testing.assert_allclose(sym_eig(A).values, jacobi_eigh(A)[0], atol=1e-10 * max(1, np.abs(A).max()))


def test_jacobi_matches_lapack_vectors_on_simple_spectrum():
    rng = np.random.default_rng(0)
    Q, _ = np.linalg.qr(rng.normal(size=(12, 12)))
    A = Q @ np.diag(np.arange(12.0)) @ Q.T
    a, b = sym_eig(A), sym_eig(A, method="jacobi")
    np.testing.assert_allclose(a.vectors, b.vectors, atol=1e-9)
