"""Closed-form guarantees for REC coarsenings.

Probability lower bounds are returned raw and clamped: a negative raw value
is a vacuous (but meaningful) output, not an error. Every calculator that
has a validity hypothesis on ``lambda_k`` either raises ``HypothesisError``
(``strict=True``) or evaluates the formula verbatim and flags the violation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analysis import lambda_threshold
from .eigen import EigenBasis
from .graph import Graph, build_laplacian, weighted_degrees
from .rec import Potential, neighborhoods, potential_weights


class HypothesisError(ValueError):
    pass


@dataclass(frozen=True)
class BoundConstants:
    N: int
    c1: float
    c2: float
    chi: np.ndarray
    P: np.ndarray
    P_max: float
    nbhd_weight: np.ndarray
    weight: np.ndarray
    rho_min: float
    rho_max: float
    deg_avg: float
    w_max: float
    threshold: float
    neighborhood: str

    def growth(self, T: float) -> float:
        """``1 - exp(-c1 T / N)``; equals 1 for ``T = inf``."""
        if math.isinf(T):
            return 1.0
        return -math.expm1(-self.c1 * T / self.N)

    def max_term(self, lam: float, extra: float = 0.0) -> float:
        """``max_ij chi_ij (sum_{N_ij} w / w_ij + 3 - (4 lam - extra)/w_ij)``."""
        return float(np.max(self.chi * (self.nbhd_weight / self.weight + 3.0 - (4.0 * lam - extra) / self.weight)))

    def as_dict(self) -> dict:
        return {
            "N": self.N, "c1": self.c1, "c2": self.c2, "P_max": self.P_max,
            "chi_min": float(self.chi.min()), "chi_max": float(self.chi.max()),
            "rho_min": self.rho_min, "rho_max": self.rho_max, "deg_avg": self.deg_avg,
            "w_max": self.w_max, "lambda_threshold": self.threshold, "neighborhood": self.neighborhood,
        }


def bound_constants(g: Graph, pot: Potential | str = Potential.HEAVY, neighborhood: str = "induced") -> BoundConstants:
    nbhd = neighborhoods(g, neighborhood)
    phi = potential_weights(g, pot, neighborhood)
    p = phi / phi.sum()
    P = np.array([p[nb].sum() for nb in nbhd])
    phi_n = np.array([phi[nb].sum() for nb in nbhd])
    w_n = np.array([g.weight[nb].sum() for nb in nbhd])
    deg, deg_avg = weighted_degrees(g)
    rho = (deg[g.src] + deg[g.dst] - g.weight) / (2.0 * deg_avg)
    N = g.n_vertices
    P_max = float(P.max())
    return BoundConstants(
        N=N,
        c1=N * P_max,
        c2=P_max / -math.expm1(-P_max),
        chi=phi / phi_n,
        P=P,
        P_max=P_max,
        nbhd_weight=w_n,
        weight=g.weight.astype(float),
        rho_min=float(rho.min()),
        rho_max=float(rho.max()),
        deg_avg=deg_avg,
        w_max=float(g.weight.max()),
        threshold=lambda_threshold(build_laplacian(g)),
        neighborhood=neighborhood,
    )


@dataclass(frozen=True)
class ProbabilityEstimate:
    value: float
    raw: float
    hypothesis_ok: bool
    negative_term: bool = False


def _clamp(raw: float) -> float:
    return min(1.0, max(0.0, raw))


def _check(lam: float, const: BoundConstants, strict: bool) -> bool:
    ok = lam <= const.threshold
    if strict and not ok:
        raise HypothesisError(f"lambda_k condition fails: {lam:.6g} > threshold {const.threshold:.6g}")
    return ok


def rss_success_probability(
    g: Graph,
    pot: Potential | str,
    T: float,
    lam: float,
    eps: float,
    neighborhood: str = "induced",
    strict: bool = True,
    constants: BoundConstants | None = None,
) -> ProbabilityEstimate:
    """Lower bound on ``P[lambda_k <= x_k^T Pi L Pi x_k <= (1 + eps) lambda_k]``."""
    const = constants or bound_constants(g, pot, neighborhood)
    ok = _check(lam, const, strict)
    if eps <= 0:
        raise ValueError("eps must be positive")
    term = const.max_term(lam)
    raw = 1.0 - const.c2 * const.growth(T) / (4.0 * eps) * term if math.isfinite(eps) else 1.0
    return ProbabilityEstimate(_clamp(raw), raw, ok, term < 0)


def rss_epsilon_bound(
    g: Graph,
    pot: Potential | str,
    T: float,
    lam: float,
    p_s: float,
    neighborhood: str = "induced",
    strict: bool = True,
    constants: BoundConstants | None = None,
) -> float:
    """Smallest ``eps`` for which ``rss_success_probability`` reaches ``p_s``."""
    if not 0.0 < p_s < 1.0:
        raise ValueError("p_s must lie in (0, 1)")
    const = constants or bound_constants(g, pot, neighborhood)
    _check(lam, const, strict)
    return const.c2 * const.growth(T) * const.max_term(lam) / (4.0 * (1.0 - p_s))


def perp_norm_tail_bound(
    g: Graph, pot: Potential | str, T: float, eps: float, neighborhood: str = "induced",
    constants: BoundConstants | None = None,
) -> float:
    """Upper bound on ``P[||Pi_perp x_k||^2 >= eps lambda_k]``."""
    const = constants or bound_constants(g, pot, neighborhood)
    return const.c2 * const.growth(T) / (2.0 * eps) * float(np.max(const.chi / const.weight))


@dataclass(frozen=True)
class HeavyEdgeEstimate:
    probability: ProbabilityEstimate
    perp_tail: float
    large_n: bool


def heavy_edge_probability(
    g: Graph, T: float, lam: float, eps: float, neighborhood: str = "induced",
    constants: BoundConstants | None = None,
) -> HeavyEdgeEstimate:
    """Large-``N`` simplification for the heavy-edge potential.

    ``1 - (1 - e^{-4 rho_max T/N})/(4 eps) (1 + (1.5 - 2 lam)/(deg_avg rho_min))``
    plus the tail ``(1 - e^{-4 rho_max T/N}) / (2 eps rho_min deg_avg)``.
    ``large_n`` reports whether ``c2`` is within 1% of its limit 1.
    """
    const = constants or bound_constants(g, Potential.HEAVY, neighborhood)
    grow = 1.0 if math.isinf(T) else -math.expm1(-4.0 * const.rho_max * T / const.N)
    dr = const.deg_avg * const.rho_min
    raw = 1.0 - grow / (4.0 * eps) * (1.0 + (1.5 - 2.0 * lam) / dr)
    tail = grow / (2.0 * eps * dr)
    return HeavyEdgeEstimate(
        ProbabilityEstimate(_clamp(raw), raw, lam <= const.threshold), tail, const.c2 < 1.01
    )


def regular_graph_probability(d: int, r: float, lam: float, eps: float) -> float:
    """Raw closed form for a ``d``-regular equal-weight graph:
    ``1 - r (1 - 1/(2d))/eps * (1 + (1.5 - lam)/(d - 0.5))``."""
    return 1.0 - r * (1.0 - 1.0 / (2.0 * d)) / eps * (1.0 + (1.5 - lam) / (d - 0.5))


def regular_graph_iterations(N: int, d: int, r: float) -> float:
    """``N/(2(2 - 1/d)) log(1/(1 - 2(2 - 1/d) r))``; ``inf`` once the log argument is non-positive."""
    c = 2.0 * (2.0 - 1.0 / d)
    if r * c >= 1.0:
        return math.inf
    return N / c * -math.log1p(-c * r)


@dataclass(frozen=True)
class FiedlerBound:
    factor: float
    probability: ProbabilityEstimate
    regular_probability: float | None


def fiedler_value_bound(
    g: Graph, T: float, r: float, eps: float, lambda2: float | None = None,
    neighborhood: str = "induced", constants: BoundConstants | None = None,
) -> FiedlerBound:
    """``lambda~_2 <= factor * lambda_2`` with ``factor = (1 + r eps)/(1 - lambda_2 r eps)``.

    The probability is ``1 - c3/(4 eps) (1 + (1.5 w_max + 2(1 - lambda_2))/(deg_avg rho_min))``
    with ``c3 = r (1 - e^{-4 rho_max T/N})``. For regular graphs the simpler
    ``1 - (1 + (3 - lambda_2)/d)/eps`` is also returned.
    """
    const = constants or bound_constants(g, Potential.HEAVY, neighborhood)
    if lambda2 is None:
        lambda2 = float(np.linalg.eigvalsh(build_laplacian(g))[1])
    den = 1.0 - lambda2 * r * eps
    if den <= 0:
        raise ValueError("factor undefined: 1 - lambda_2 r eps <= 0")
    factor = (1.0 + r * eps) / den
    grow = 1.0 if math.isinf(T) else -math.expm1(-4.0 * const.rho_max * T / const.N)
    c3 = r * grow
    raw = 1.0 - c3 / (4.0 * eps) * (1.0 + (1.5 * const.w_max + 2.0 * (1.0 - lambda2)) / (const.deg_avg * const.rho_min))
    deg, _ = weighted_degrees(g)
    regular = None
    if np.allclose(deg, deg[0]) and np.allclose(g.weight, g.weight[0]):
        regular = 1.0 - (1.0 + (3.0 - lambda2) / deg[0]) / eps
    return FiedlerBound(factor, ProbabilityEstimate(_clamp(raw), raw, lambda2 <= const.threshold), regular)


@dataclass(frozen=True)
class ClusteringBound:
    gap_bound: float
    probability: ProbabilityEstimate
    spectral_gap: float
    K: int

    def relaxed(self, kappa: int) -> float:
        """Bound on the squared cost gap relative to ``F_kappa(Psi, S*)``, ``kappa < K``."""
        if not 0 < kappa < self.K:
            raise ValueError("need 0 < kappa < K")
        return self.gap_bound / (self.K - kappa)


def clustering_bound(
    eig_L: EigenBasis, K: int, r: float, eps: float, constants: BoundConstants, spectral_gap_tol: float = 1e-12
) -> ClusteringBound:
    """Cost-gap bound ``sum_{k=2..K} 8 eps r lambda_k / delta_K`` for coarse spectral clustering.

    Probability ``1 - (rho_max/eps)(1 + (6 + 4 lambda_K - 8 c3)/(deg_avg rho_min))`` with
    ``c3 = sum lambda_k^2 / sum lambda_k`` over ``k = 2..K``.
    """
    lam = eig_L.values
    if K + 1 > len(lam):
        raise ValueError("K + 1 exceeds the number of eigenvalues")
    delta = float(lam[K] - lam[K - 1])
    if delta <= spectral_gap_tol:
        raise ValueError("no spectral gap: lambda_{K+1} - lambda_K <= tolerance")
    head = lam[1:K]
    gap_bound = float(np.sum(8.0 * eps * r * head / delta))
    c3 = float(np.sum(head**2) / np.sum(head)) if K > 1 and np.sum(head) > 0 else 0.0
    raw = 1.0 - constants.rho_max / eps * (
        1.0 + (6.0 + 4.0 * lam[K - 1] - 8.0 * c3) / (constants.deg_avg * constants.rho_min)
    )
    ok = bool(lam[K - 1] <= constants.threshold)
    return ClusteringBound(gap_bound, ProbabilityEstimate(_clamp(raw), raw, ok), delta, K)
