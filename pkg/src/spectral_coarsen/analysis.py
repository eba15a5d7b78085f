"""Measured spectral relations between a Laplacian and its coarsened version.

Indices ``k`` in the public functions are 1-based, matching the usual
``lambda_1 <= lambda_2 <= ...`` numbering; arrays stored in reports are
0-based (entry ``k-1`` belongs to eigenpair ``k``).
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np

from .coarsen import CoarseningMap, projection_matrix
from .config import DEFAULT_TOLERANCES, Tolerances
from .eigen import EigenBasis
from .graph import Graph, weighted_degrees


class AnalysisError(ValueError):
    pass


def _edges_from_laplacian(L: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    iu, ju = np.nonzero(np.triu(L < 0, k=1))
    return iu, ju, -L[iu, ju]


def lambda_threshold(L: np.ndarray) -> float:
    """``0.5 * min_ij ((deg_i + deg_j)/2 + w_ij)``; eigenvalues below it make the RSS distortion one-sided."""
    iu, ju, w = _edges_from_laplacian(L)
    if len(w) == 0:
        return math.inf
    deg = np.diag(L)
    return float(0.5 * np.min((deg[iu] + deg[ju]) / 2.0 + w))


@dataclass(frozen=True)
class RssReport:
    """Per-eigenpair distortion of the Laplacian quadratic form under coarsening.

    ``epsilon[k-1] = q_k / lambda_k - 1`` is signed; ``rss_constant`` is its
    absolute value, the smallest ``eps`` with
    ``(1 - eps) lambda_k <= q_k <= (1 + eps) lambda_k``.
    """

    K: int
    eigenvalues: np.ndarray
    quad_forms: np.ndarray
    epsilon: np.ndarray
    perp_norms: np.ndarray
    ok: np.ndarray
    basis_dependent: np.ndarray
    threshold: float

    @property
    def rss_constant(self) -> np.ndarray:
        return np.abs(self.epsilon)

    def rows(self) -> list[dict]:
        return [
            {
                "k": k + 1,
                "lambda": float(self.eigenvalues[k]),
                "quad_form": float(self.quad_forms[k]),
                "epsilon": float(self.epsilon[k]),
                "perp_norm": float(self.perp_norms[k]),
                "ok": bool(self.ok[k]),
                "basis_dependent": bool(self.basis_dependent[k]),
            }
            for k in range(self.K)
        ]

    def to_csv(self) -> str:
        buf = io.StringIO()
        rows = self.rows()
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({"K": self.K, "threshold": self.threshold, "rows": self.rows()})


def rss_measure(
    L: np.ndarray, C: np.ndarray, eig: EigenBasis, K: int, tol: Tolerances = DEFAULT_TOLERANCES
) -> RssReport:
    n = C.shape[0]
    if K > n:
        raise AnalysisError(f"K={K} exceeds coarse dimension n={n}")
    if K < 1:
        raise AnalysisError("K must be positive")
    lam = np.asarray(eig.values[:K])
    if K >= 2 and lam[1] <= tol.zero_eigenvalue:
        raise AnalysisError("lambda_k division ill-posed: graph is disconnected (lambda_2 ~ 0)")
    X = eig.vectors[:, :K]
    Xc = C @ X
    PX = C.T @ Xc
    q = np.einsum("ik,ij,jk->k", PX, L, PX)
    eps = np.zeros(K)
    eps[1:] = q[1:] / lam[1:] - 1.0
    perp = np.clip(np.sum((X - PX) ** 2, axis=0), 0.0, 1.0)
    thr = lambda_threshold(L)
    ok = lam <= thr
    clusters = eig.clusters(tol.degenerate_gap)
    counts = np.bincount(clusters)
    basis_dep = counts[clusters[:K]] > 1
    return RssReport(K, lam, q, eps, perp, ok, basis_dep, thr)


def interlacing_check(eig_L: EigenBasis, eig_Lc: EigenBasis, tol: float = DEFAULT_TOLERANCES.interlacing) -> np.ndarray:
    """``lambda_k <= lambda~_k + tol`` for every ``k <= n``."""
    n = eig_Lc.dim
    return eig_L.values[:n] <= eig_Lc.values + tol


def alignment(eig_L: EigenBasis, eig_Lc: EigenBasis, C: np.ndarray) -> np.ndarray:
    """Matrix of inner products ``x~_j^T C x_i`` (rows ``j`` coarse, columns ``i`` fine)."""
    return eig_Lc.vectors.T @ (C @ eig_L.vectors)


@dataclass(frozen=True)
class EigenvalueBound:
    coarse_value: float
    bound: float
    alignment_mass: float
    holds: bool
    vanishing_mass: bool


def eigenvalue_upper_bound(
    eig_L: EigenBasis,
    eig_Lc: EigenBasis,
    C: np.ndarray,
    rss: RssReport,
    k: int,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> EigenvalueBound:
    """Sandwich ``lambda_k <= lambda~_k <= max(lambda~_{k-1}, (1+eps_k) lambda_k / mass)``.

    ``mass = sum_{i >= k} (x~_i^T C x_k)^2``; a vanishing mass gives an infinite bound.
    """
    if not 1 <= k <= rss.K:
        raise AnalysisError(f"k={k} outside 1..{rss.K}")
    lam = float(eig_L.values[k - 1])
    coarse = float(eig_Lc.values[k - 1])
    col = eig_Lc.vectors[:, k - 1 :].T @ (C @ eig_L.vectors[:, k - 1])
    mass = float(col @ col)
    if k == 1:
        # lambda_1 = 0 and eps_1 := 0
        bound = lam / mass if mass > tol.alignment_mass else math.inf
    elif mass <= tol.alignment_mass:
        bound = math.inf
    else:
        bound = max(float(eig_Lc.values[k - 2]), (1.0 + float(rss.epsilon[k - 1])) * lam / mass)
    holds = lam <= coarse + tol.bound and coarse <= bound + tol.bound
    return EigenvalueBound(coarse, bound, mass, holds, mass <= tol.alignment_mass)


def sintheta(eig_L: EigenBasis, eig_Lc: EigenBasis, C: np.ndarray, k: int) -> float:
    """Squared Frobenius sin-theta distance between ``X_k`` and the lifted ``C^T X~_k``.

    Computed as ``sum_{i<=k} sum_{j>k} (x~_j^T C x_i)^2``.
    """
    if not 1 <= k <= eig_Lc.dim:
        raise AnalysisError(f"k={k} outside 1..n={eig_Lc.dim}")
    block = eig_Lc.vectors[:, k:].T @ (C @ eig_L.vectors[:, :k])
    return float(np.sum(block**2))


def canonical_angles(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Principal angles between the column spans of orthonormal ``X`` and ``Y``."""
    s = np.linalg.svd(X.T @ Y, compute_uv=False)
    return np.arccos(np.clip(s, -1.0, 1.0))


def sintheta_canonical(eig_L: EigenBasis, eig_Lc: EigenBasis, C: np.ndarray, k: int) -> float:
    """``sum sin^2`` of the principal angles between ``X_k`` and ``C^T X~_k``.

    Exceeds ``sintheta`` by ``sum_{i<=k} ||Pi_perp x_i||^2``: the lifted
    coarse basis spans only part of the space, so the fine vectors' mass off
    the lift range also counts as misalignment here.
    """
    if not 1 <= k <= eig_Lc.dim:
        raise AnalysisError(f"k={k} outside 1..n={eig_Lc.dim}")
    theta = canonical_angles(eig_L.vectors[:, :k], C.T @ eig_Lc.vectors[:, :k])
    return float(np.sum(np.sin(theta) ** 2))


def chance_sintheta(k: int, n: int, N: int) -> float:
    """Expected misalignment of ``X_k`` against a uniformly random ``n``-dimensional subspace."""
    return k * (N - n) / N


@dataclass(frozen=True)
class SinThetaReport:
    k: int
    value: float
    bound_gap: float
    bound_fiedler: float
    baseline: float
    canonical: float = math.nan

    @property
    def bound(self) -> float:
        return min(self.bound_gap, self.bound_fiedler)


def sintheta_bounds(rss: RssReport, eig_L: EigenBasis, eig_Lc: EigenBasis, k: int) -> tuple[float, float]:
    """The two eigenspace-misalignment bounds for ``k``.

    ``bound_gap = sum_{2<=i<=k} (eps_i lambda_i + lambda_k s_i)/(lambda~_{k+1} - lambda_k)``
    ``bound_fiedler = sum_{2<=i<=k} ((1+eps_i) lambda_i - lambda_2 (1 - s_i))/(lambda~_{k+1} - lambda_2)``
    A non-positive denominator makes that branch ``inf``.
    """
    if not 1 <= k <= rss.K:
        raise AnalysisError(f"k={k} outside 1..{rss.K}")
    if k + 1 > eig_Lc.dim:
        raise AnalysisError(f"k+1={k + 1} exceeds n={eig_Lc.dim}")
    lam = rss.eigenvalues
    eps = rss.epsilon
    s = rss.perp_norms
    nxt = float(eig_Lc.values[k])
    lam_k = float(lam[k - 1])
    lam_2 = float(eig_L.values[1])
    idx = slice(1, k)
    den_a = nxt - lam_k
    den_b = nxt - lam_2
    num_a = float(np.sum(eps[idx] * lam[idx] + lam_k * s[idx]))
    num_b = float(np.sum((1.0 + eps[idx]) * lam[idx] - lam_2 * (1.0 - s[idx])))
    bound_a = num_a / den_a if den_a > 0 else math.inf
    bound_b = num_b / den_b if den_b > 0 else math.inf
    return bound_a, bound_b


def sintheta_report(rss: RssReport, eig_L: EigenBasis, eig_Lc: EigenBasis, C: np.ndarray, k: int) -> SinThetaReport:
    a, b = sintheta_bounds(rss, eig_L, eig_Lc, k)
    return SinThetaReport(
        k, sintheta(eig_L, eig_Lc, C, k), a, b, chance_sintheta(k, C.shape[0], C.shape[1]),
        sintheta_canonical(eig_L, eig_Lc, C, k),
    )


@dataclass(frozen=True)
class MatchingIdentities:
    """Direct values and closed forms of the terms splitting ``x^T Pi L Pi x - lambda``."""

    k: int
    condition: bool
    direct: dict
    closed: dict

    @property
    def residuals(self) -> dict:
        return {key: abs(self.direct[key] - self.closed[key]) for key in self.closed}


def verify_matching_identities(g: Graph, cmap: CoarseningMap, eig_L: EigenBasis, k: int) -> MatchingIdentities:
    """Check the edge-wise closed forms of the perturbation for a pair coarsening.

    With ``y = Pi_perp x_k`` and pairs ``E_F``:
      ``within  = sum_{E_F} w (y_i - y_j)^2           = sum_{E_F} w (x_i - x_j)^2``
      ``boundary = sum_{i in V_F, j not in V_F} w y_i^2 = sum_{E_F} w (x_i - x_j)^2 (d_i + d_j - 2w)/(4w)``
      ``perp    = ||y||^2                             = sum_{E_F} (x_i - x_j)^2 / 2``
      ``x^T Pi L Pi x - lambda = 1/4 sum_{E_F} w (x_i - x_j)^2 (d_i + d_j + 2(w - 2 lambda))/w``
    The ``split`` entry compares ``y^T L y`` with ``within + boundary``.
    """
    if not cmap.is_pairing():
        raise AnalysisError("identities require matching: a group has more than two vertices")
    x = eig_L.vectors[:, k - 1]
    lam = float(eig_L.values[k - 1])
    deg, _ = weighted_degrees(g)
    in_frame = np.zeros(g.n_vertices, dtype=bool)
    pairs = cmap.pairs()
    for i, j in pairs:
        in_frame[[i, j]] = True
    y = x.copy()
    y[~in_frame] = 0.0
    for i, j in pairs:
        m = 0.5 * (x[i] + x[j])
        y[i] -= m
        y[j] -= m

    pi_idx = np.array([p[0] for p in pairs], dtype=int)
    pj_idx = np.array([p[1] for p in pairs], dtype=int)
    w_f = np.array([g.weight[g.edge_index(i, j)] for i, j in pairs])
    dx2 = (x[pi_idx] - x[pj_idx]) ** 2 if len(pairs) else np.zeros(0)

    src, dst, w = g.src, g.dst, g.weight
    cross_s = in_frame[src] & ~in_frame[dst]
    cross_d = in_frame[dst] & ~in_frame[src]
    boundary_direct = float(np.sum(w[cross_s] * y[src[cross_s]] ** 2) + np.sum(w[cross_d] * y[dst[cross_d]] ** 2))
    within_direct = float(np.sum(w_f * (y[pi_idx] - y[pj_idx]) ** 2)) if len(pairs) else 0.0
    yLy = float(np.sum(w * (y[src] - y[dst]) ** 2))

    xP = x.copy()
    for i, j in pairs:
        xP[i] = xP[j] = 0.5 * (x[i] + x[j])
    qform = float(np.sum(w * (xP[src] - xP[dst]) ** 2))

    d_sum = deg[pi_idx] + deg[pj_idx] if len(pairs) else np.zeros(0)
    closed = {
        "within": float(np.sum(w_f * dx2)),
        "boundary": float(np.sum(w_f * dx2 * (d_sum - 2 * w_f) / (4 * w_f))),
        "perp": float(np.sum(dx2 / 2.0)),
        "combined": float(0.25 * np.sum(w_f * dx2 * (d_sum + 2 * (w_f - 2 * lam)) / w_f)),
        "split": within_direct + boundary_direct,
    }
    direct = {
        "within": within_direct,
        "boundary": boundary_direct,
        "perp": float(y @ y),
        "combined": qform - lam,
        "split": yLy,
    }
    condition = bool(np.all(d_sum + 2 * (w_f - 2 * lam) > 0)) if len(pairs) else True
    cond_graph = lam <= 0.5 * float(np.min((deg[src] + deg[dst]) / 2 + w)) if g.n_edges else True
    return MatchingIdentities(k, condition and cond_graph, direct, closed)


def perturbed_quadratic_form(L: np.ndarray, C: np.ndarray, x: np.ndarray) -> tuple[float, float]:
    """``(Cx)^T L_c (Cx)`` and ``x^T Pi L Pi x``: equal by construction, kept as a cross-check."""
    xc = C @ x
    P, _ = projection_matrix(C)
    Px = P @ x
    return float(xc @ (C @ L @ C.T) @ xc), float(Px @ L @ Px)
