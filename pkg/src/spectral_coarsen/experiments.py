"""Multi-seed sweeps behind the command-line tables.

Each sweep fans trials out over a process pool (``jobs > 1``). A trial is a
pure function of ``(graph, config, base_seed + trial)``, and results are
sorted by trial index before aggregation, so outputs do not depend on
scheduling.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .analysis import (
    AnalysisError,
    eigenvalue_upper_bound,
    interlacing_check,
    rss_measure,
    sintheta_report,
    verify_matching_identities,
)
from .bounds import bound_constants, clustering_bound, rss_epsilon_bound
from .cluster import coarse_cluster_pipeline
from .coarsen import CoarseningMap, coarsen_laplacian, coarsening_frame, coarsening_matrix
from .config import DEFAULT_TOLERANCES, Tolerances, trial_seed
from .eigen import EigenBasis, sym_eig
from .graph import Graph, build_laplacian
from .rec import InfeasibleRatio, Potential, iterations_for_ratio, rec_coarsen, rec_coarsen_fast


@dataclass
class CoarseningPlan:
    """How each trial obtains its coarsening map.

    ``T`` runs the fixed-distribution sampler for ``T`` iterations; otherwise
    the live-candidate sampler runs until ``ratio`` (or exhaustion). A fixed
    ``cmap`` skips sampling altogether.
    """

    pot: str = "heavy"
    ratio: float | None = None
    T: float | None = None
    neighborhood: str = "induced"
    cmap: CoarseningMap | None = None

    def draw(self, g: Graph, seed: int) -> CoarseningMap:
        if self.cmap is not None:
            return self.cmap
        if self.T is not None:
            return rec_coarsen(g, self.T, self.pot, seed, self.neighborhood).cmap
        if self.ratio is None or self.ratio <= 0:
            return CoarseningMap.identity(g.n_vertices)
        return rec_coarsen_fast(g, ratio=self.ratio, pot=self.pot, seed=seed, neighborhood=self.neighborhood).cmap

    def bound_iterations(self, g: Graph, c1: float) -> float:
        """Iteration count fed to the probability bounds.

        The explicit ``T`` if given; for a ratio target the count from
        ``iterations_for_ratio`` when feasible, else ``inf`` (run to exhaustion).
        """
        if self.T is not None:
            return float(self.T)
        if self.cmap is not None or not self.ratio:
            return 0.0
        try:
            return float(iterations_for_ratio(g.n_vertices, c1, self.ratio))
        except InfeasibleRatio:
            return math.inf


@dataclass
class Violations:
    """Per-realization check failures, keyed by check name."""

    items: dict[str, list[str]] = field(default_factory=dict)

    def add(self, check: str, detail: str) -> None:
        self.items.setdefault(check, []).append(detail)

    def merge(self, other: "Violations") -> None:
        for key, vals in other.items.items():
            self.items.setdefault(key, []).extend(vals)

    @property
    def count(self) -> int:
        return sum(len(v) for v in self.items.values())

    def summary(self) -> str:
        return "; ".join(f"{k}: {len(v)}" for k, v in sorted(self.items.items()))


def realization_checks(
    g: Graph,
    L: np.ndarray,
    eig_L: EigenBasis,
    cmap: CoarseningMap,
    K: int,
    tol: Tolerances = DEFAULT_TOLERANCES,
    label: str = "",
) -> tuple[Violations, EigenBasis, np.ndarray]:
    """Interlacing, the eigenvalue sandwich, the sin-theta bounds and the matching identities.

    The identities are checked only when the coarsening frame is a matching.
    """
    v = Violations()
    C = coarsening_matrix(cmap)
    eig_Lc = sym_eig(coarsen_laplacian(L, C))
    bad = np.flatnonzero(~interlacing_check(eig_L, eig_Lc, tol.interlacing))
    for k in bad.tolist():
        v.add("interlacing", f"{label} k={k + 1}")
    K = min(K, cmap.n)
    if g.n_edges == 0 or (K >= 2 and eig_L.values[1] <= tol.zero_eigenvalue):
        return v, eig_Lc, C
    rss = rss_measure(L, C, eig_L, K, tol)
    for k in range(1, K + 1):
        if not eigenvalue_upper_bound(eig_L, eig_Lc, C, rss, k, tol).holds:
            v.add("eigenvalue_bound", f"{label} k={k}")
        if k + 1 <= eig_Lc.dim:
            rep = sintheta_report(rss, eig_L, eig_Lc, C, k)
            if rep.value > rep.bound + tol.bound:
                v.add("sintheta_bound", f"{label} k={k}")
    # the closed forms assume the frame itself is a matching (no edges between pairs)
    if cmap.is_pairing() and cmap.n < cmap.n_vertices and coarsening_frame(g, cmap).is_matching():
        for k in range(2, K + 1):
            ident = verify_matching_identities(g, cmap, eig_L, k)
            scale = max(1.0, max(abs(x) for x in ident.direct.values()))
            if max(ident.residuals.values()) > tol.identity * scale:
                v.add("matching_identities", f"{label} k={k}")
    return v, eig_Lc, C


def _run(fn: Callable, args: Sequence[tuple], jobs: int) -> list:
    if jobs <= 1 or len(args) <= 1:
        return [fn(*a) for a in args]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(fn, *a) for a in args]
        return [f.result() for f in futures]


# --- RSS -------------------------------------------------------------------


@dataclass
class RssSweep:
    ks: list[int]
    eigenvalues: np.ndarray
    epsilon: np.ndarray  # trials x len(ks), signed
    ratios: np.ndarray
    bounds: dict[float, np.ndarray]  # p_s -> per-k epsilon bound
    bound_T: float
    hypothesis_ok: np.ndarray
    violations: Violations

    @property
    def rss_constant(self) -> np.ndarray:
        return np.abs(self.epsilon)

    def coverage(self, p_s: float) -> np.ndarray:
        """Fraction of trials with ``|eps_k|`` at or below the bound, per ``k``."""
        return np.mean(self.rss_constant <= self.bounds[p_s][None, :], axis=0)

    def rows(self) -> list[dict]:
        out = []
        for j, k in enumerate(self.ks):
            row = {
                "k": k,
                "lambda": float(self.eigenvalues[j]),
                "eps_mean": float(self.epsilon[:, j].mean()),
                "eps_std": float(self.epsilon[:, j].std(ddof=1)) if len(self.epsilon) > 1 else 0.0,
                "abs_eps_mean": float(self.rss_constant[:, j].mean()),
            }
            for p_s, b in sorted(self.bounds.items()):
                row[f"bound_p{int(round(100 * p_s))}"] = float(b[j])
            row["hypothesis_ok"] = bool(self.hypothesis_ok[j])
            out.append(row)
        return out


def _rss_trial(g, L, eig_L, plan, ks, seed, tol):
    cmap = plan.draw(g, seed)
    K = max(ks)
    viol, _, C = realization_checks(g, L, eig_L, cmap, K, tol, label=f"seed={seed}")
    rss = rss_measure(L, C, eig_L, K, tol)
    return seed, rss.epsilon[np.asarray(ks) - 1], cmap.ratio, viol


def rss_sweep(
    g: Graph,
    ks: Sequence[int],
    plan: CoarseningPlan,
    trials: int = 10,
    base_seed: int = 0,
    p_levels: Sequence[float] = (0.5, 0.7),
    jobs: int = 1,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> RssSweep:
    """Distortion ``eps_k`` across seeds next to the probabilistic bound at each ``p_s``.

    The bound is evaluated even where ``lambda_k`` exceeds the validity
    threshold; ``hypothesis_ok`` marks those rows.
    """
    ks = sorted(int(k) for k in ks)
    L = build_laplacian(g)
    eig_L = sym_eig(L)
    if ks[-1] > g.n_vertices:
        raise AnalysisError(f"K={ks[-1]} exceeds N={g.n_vertices}")
    results = _run(_rss_trial, [(g, L, eig_L, plan, ks, trial_seed(base_seed, t), tol) for t in range(trials)], jobs)
    results.sort(key=lambda r: r[0])
    const = bound_constants(g, plan.pot, plan.neighborhood)
    T = plan.bound_iterations(g, const.c1)
    lam = np.array([eig_L.values[k - 1] for k in ks])
    bounds = {}
    for p_s in p_levels:
        b = [rss_epsilon_bound(g, plan.pot, T, float(x), p_s, plan.neighborhood, strict=False, constants=const)
             if k > 1 else 0.0 for k, x in zip(ks, lam)]
        bounds[float(p_s)] = np.array(b)
    viol = Violations()
    for r in results:
        viol.merge(r[3])
    return RssSweep(
        ks=ks,
        eigenvalues=lam,
        epsilon=np.array([r[1] for r in results]),
        ratios=np.array([r[2] for r in results]),
        bounds=bounds,
        bound_T=T,
        hypothesis_ok=lam <= const.threshold,
        violations=viol,
    )


# --- sin-theta -------------------------------------------------------------


@dataclass
class SinThetaSweep:
    ks: list[int]
    values: np.ndarray  # trials x len(ks); nan where k+1 > n
    canonical: np.ndarray
    bounds: np.ndarray
    baselines: np.ndarray
    ratios: np.ndarray
    violations: Violations

    def rows(self) -> list[dict]:
        out = []
        for j, k in enumerate(self.ks):
            col = self.values[:, j]
            valid = ~np.isnan(col)
            flagged = not valid.all()
            vals, can, bnd, base = col[valid], self.canonical[valid, j], self.bounds[valid, j], self.baselines[valid, j]
            n = len(vals)
            out.append({
                "k": k,
                "theta_mean": float(vals.mean()) if n else math.nan,
                "theta_std": float(vals.std(ddof=1)) if n > 1 else 0.0 if n else math.nan,
                "theta_canonical_mean": float(can.mean()) if n else math.nan,
                "bound_mean": float(bnd.mean()) if n else math.nan,
                "baseline_mean": float(base.mean()) if n else math.nan,
                "flagged": flagged,
            })
        return out

    def per_k_mean(self, canonical: bool = False) -> np.ndarray:
        src = self.canonical if canonical else self.values
        return np.nanmean(src, axis=0) / np.asarray(self.ks)


def _sintheta_trial(g, L, eig_L, plan, ks, seed, tol):
    cmap = plan.draw(g, seed)
    viol, eig_Lc, C = realization_checks(g, L, eig_L, cmap, max(ks), tol, label=f"seed={seed}")
    K = min(max(ks), cmap.n)
    rss = rss_measure(L, C, eig_L, K, tol)
    vals, can, bnd, base = [], [], [], []
    for k in ks:
        if k + 1 > cmap.n:
            vals.append(math.nan); can.append(math.nan); bnd.append(math.nan); base.append(math.nan)
            continue
        rep = sintheta_report(rss, eig_L, eig_Lc, C, k)
        vals.append(rep.value); can.append(rep.canonical); bnd.append(rep.bound); base.append(rep.baseline)
    return seed, vals, can, bnd, base, cmap.ratio, viol


def sintheta_sweep(
    g: Graph,
    ks: Sequence[int],
    plan: CoarseningPlan,
    trials: int = 10,
    base_seed: int = 0,
    jobs: int = 1,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> SinThetaSweep:
    ks = sorted(int(k) for k in ks)
    L = build_laplacian(g)
    eig_L = sym_eig(L)
    args = [(g, L, eig_L, plan, ks, trial_seed(base_seed, t), tol) for t in range(trials)]
    results = sorted(_run(_sintheta_trial, args, jobs), key=lambda r: r[0])
    viol = Violations()
    for r in results:
        viol.merge(r[6])
    return SinThetaSweep(
        ks=ks,
        values=np.array([r[1] for r in results], dtype=float),
        canonical=np.array([r[2] for r in results], dtype=float),
        bounds=np.array([r[3] for r in results], dtype=float),
        baselines=np.array([r[4] for r in results], dtype=float),
        ratios=np.array([r[5] for r in results]),
        violations=viol,
    )


# --- clustering ------------------------------------------------------------


@dataclass
class ClusterSweep:
    K: int
    ratios: list[float]
    steps: list[int]
    reports: dict[float, list]  # r -> PipelineReport per trial
    gap_bound: dict[float, float]
    gap_probability: dict[float, float]
    eps: float

    def rel_err(self, r: float, t: int) -> np.ndarray:
        return np.array([dict(rep.refinement_curve)[t] for rep in self.reports[r]])

    def rows(self) -> list[dict]:
        out = []
        for r in self.ratios:
            gaps = np.array([rep.gap for rep in self.reports[r]])
            realized = np.array([rep.r_realized for rep in self.reports[r]])
            for t in self.steps:
                err = self.rel_err(r, t)
                out.append({
                    "r": r,
                    "r_realized_mean": float(realized.mean()),
                    "t": t,
                    "rel_err_mean": float(err.mean()),
                    "rel_err_std": float(err.std(ddof=1)) if len(err) > 1 else 0.0,
                    "gap_mean": float(gaps.mean()),
                    "gap_bound": self.gap_bound[r],
                    "gap_bound_probability": self.gap_probability[r],
                })
        return out


def _cluster_trial(g, L, eig_L, K, r, pot, seed, restarts, steps, neighborhood):
    rep = coarse_cluster_pipeline(g, K, r, pot, seed, restarts, tuple(steps), neighborhood, eig_L=eig_L, L=L)
    return seed, rep


def cluster_sweep(
    g: Graph,
    K: int,
    ratios: Sequence[float],
    steps: Sequence[int] = (0,),
    trials: int = 10,
    base_seed: int = 0,
    pot: Potential | str = "heavy",
    restarts: int = 20,
    neighborhood: str = "induced",
    eps: float = 1.0,
    jobs: int = 1,
) -> ClusterSweep:
    """Relative k-means error of coarse clustering per target ratio and refinement depth.

    ``gap_bound`` is the closed-form cost-gap bound at ``eps`` with its
    (possibly vacuous) probability; ``nan`` when ``lambda_{K+1} = lambda_K``.
    """
    L = build_laplacian(g)
    eig_L = sym_eig(L)
    steps = sorted(set(int(t) for t in steps) | {0})
    const = bound_constants(g, pot, neighborhood)
    reports, gap_bound, gap_prob = {}, {}, {}
    for r in ratios:
        args = [(g, L, eig_L, K, r, pot, trial_seed(base_seed, t), restarts, steps, neighborhood)
                for t in range(trials)]
        reports[r] = [rep for _, rep in sorted(_run(_cluster_trial, args, jobs), key=lambda x: x[0])]
        try:
            cb = clustering_bound(eig_L, K, r, eps, const)
            gap_bound[r], gap_prob[r] = cb.gap_bound, cb.probability.value
        except ValueError:
            gap_bound[r], gap_prob[r] = math.nan, math.nan
    return ClusterSweep(K, list(ratios), steps, reports, gap_bound, gap_prob, eps)
