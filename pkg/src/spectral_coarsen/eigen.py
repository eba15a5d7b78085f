"""Dense symmetric eigendecomposition with a fixed sign convention."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import DEFAULT_TOLERANCES, Tolerances


class EigenError(ValueError):
    pass


@dataclass(frozen=True)
class EigenBasis:
    """Ascending eigenvalues and orthonormal eigenvector columns."""

    values: np.ndarray
    vectors: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.values)

    def __len__(self) -> int:
        return len(self.values)

    def clusters(self, gap: float = DEFAULT_TOLERANCES.degenerate_gap) -> np.ndarray:
        """Cluster id per eigenvalue; neighbours closer than ``gap`` share an id."""
        if self.dim == 0:
            return np.zeros(0, dtype=int)
        return np.concatenate([[0], np.cumsum(np.diff(self.values) >= gap)])

    def is_simple(self, k: int, gap: float = DEFAULT_TOLERANCES.degenerate_gap) -> bool:
        """Whether the 0-based eigenvalue ``k`` is separated from both neighbours."""
        v = self.values
        left = k == 0 or v[k] - v[k - 1] >= gap
        right = k == self.dim - 1 or v[k + 1] - v[k] >= gap
        return bool(left and right)


def _fix_signs(X: np.ndarray, thresh: float = 1e-12) -> np.ndarray:
    X = X.copy()
    for c in range(X.shape[1]):
        nz = np.flatnonzero(np.abs(X[:, c]) > thresh)
        if len(nz) and X[nz[0], c] < 0:
            X[:, c] = -X[:, c]
    return X


def _validate(A: np.ndarray, tol: Tolerances) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise EigenError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise EigenError("matrix has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(A)))) if A.size else 1.0
    if A.size and np.max(np.abs(A - A.T)) > tol.symmetric * scale:
        raise EigenError("matrix is not symmetric")
    return 0.5 * (A + A.T)


def sym_eig(A: np.ndarray, method: str = "lapack", tol: Tolerances = DEFAULT_TOLERANCES) -> EigenBasis:
    """Full eigendecomposition of a symmetric matrix.

    ``method="lapack"`` calls ``numpy.linalg.eigh``; ``method="jacobi"`` runs
    the cyclic Jacobi sweep below. Both return the same sign convention: the
    first entry of each eigenvector above ``1e-12`` in magnitude is positive.
    """
    A = _validate(A, tol)
    if method == "lapack":
        w, X = np.linalg.eigh(A)
    elif method == "jacobi":
        w, X = jacobi_eigh(A)
    else:
        raise ValueError(f"unknown method {method!r}")
    w = np.ascontiguousarray(w)
    X = _fix_signs(X)
    w.setflags(write=False)
    X.setflags(write=False)
    return EigenBasis(w, X)


def jacobi_eigh(A: np.ndarray, rtol: float = 1e-12, max_sweeps: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi rotations until the off-diagonal mass is below ``rtol * ||A||_F``."""
    A = np.array(A, dtype=float)
    n = A.shape[0]
    V = np.eye(n)
    norm = np.linalg.norm(A)
    if norm == 0.0 or n == 1:
        return np.diag(A).copy(), V
    for _ in range(max_sweeps):
        off = np.linalg.norm(A - np.diag(np.diag(A)))
        if off < rtol * norm:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) < 1e-300:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0)) if theta != 0 else 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # A <- J^T A J on rows/cols p, q
                ap, aq = A[:, p].copy(), A[:, q].copy()
                A[:, p] = c * ap - s * aq
                A[:, q] = s * ap + c * aq
                rp, rq = A[p, :].copy(), A[q, :].copy()
                A[p, :] = c * rp - s * rq
                A[q, :] = s * rp + c * rq
                vp, vq = V[:, p].copy(), V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    else:
        raise EigenError("Jacobi iteration did not converge")
    w = np.diag(A).copy()
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order]
