"""Randomized edge contraction (REC).

Two samplers are provided:

* ``rec_coarsen`` draws, at every iteration, one edge from the fixed
  distribution ``p_ij = phi_ij / Phi`` over *all* edges. Drawing an edge that
  has already left the candidate set is the null outcome, so the null mass
  equals the total probability of removed edges.
* ``rec_coarsen_fast`` samples only among live candidates (a sum tree keeps
  the live potential), so every draw contracts an edge.

When ``e_ij`` is contracted the candidate set loses its edge neighborhood
``N_ij``. With ``neighborhood="induced"`` (the default) this is every edge
with an endpoint adjacent to ``i`` or ``j``; contracted edges then form an
induced matching and their endpoints are pairwise non-adjacent.
``neighborhood="incident"`` removes only the edges sharing an endpoint with
``e_ij``, which yields an ordinary matching and reaches ratios up to 1/2.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache

import numpy as np

from .coarsen import CoarseningMap, map_from_matching
from .config import make_rng
from .graph import Graph, GraphError

NEIGHBORHOODS = ("induced", "incident")


class InfeasibleRatio(ValueError):
    pass


class Potential(str, Enum):
    HEAVY = "heavy"
    UNIFORM = "uniform"
    INV_NBHD = "inv-nbhd"

    @classmethod
    def parse(cls, value: "Potential | str") -> "Potential":
        return value if isinstance(value, Potential) else cls(value)


def _check_mode(neighborhood: str) -> str:
    if neighborhood not in NEIGHBORHOODS:
        raise ValueError(f"neighborhood must be one of {NEIGHBORHOODS}, got {neighborhood!r}")
    return neighborhood


@lru_cache(maxsize=16)
def _neighborhoods(g: Graph, neighborhood: str) -> tuple[np.ndarray, ...]:
    incident = [np.array([e for _, e in g.adjacency[v]], dtype=np.int64) for v in range(g.n_vertices)]
    out = []
    for i, j in zip(g.src.tolist(), g.dst.tolist()):
        if neighborhood == "incident":
            verts = (i, j)
        else:
            # i and j are adjacent, so both are in each other's neighbour list
            verts = set(g.neighbors(i)) | set(g.neighbors(j))
        nb = np.unique(np.concatenate([incident[v] for v in verts]))
        nb.setflags(write=False)
        out.append(nb)
    return tuple(out)


def neighborhoods(g: Graph, neighborhood: str = "induced") -> tuple[np.ndarray, ...]:
    """Edge-index arrays ``N_e`` for every edge ``e`` (cached per graph)."""
    return _neighborhoods(g, _check_mode(neighborhood))


def edge_neighborhood(g: Graph, edge: tuple[int, int], neighborhood: str = "induced") -> set[tuple[int, int]]:
    """The edges removed from the candidate set when ``edge`` is contracted."""
    e = g.edge_index(*edge)
    return {(int(g.src[f]), int(g.dst[f])) for f in neighborhoods(g, neighborhood)[e]}


def potential_weights(g: Graph, pot: Potential | str = Potential.HEAVY, neighborhood: str = "induced") -> np.ndarray:
    pot = Potential.parse(pot)
    if pot is Potential.HEAVY:
        phi = g.weight.astype(float)
    elif pot is Potential.UNIFORM:
        phi = np.ones(g.n_edges)
    else:
        phi = 1.0 / np.array([len(nb) for nb in neighborhoods(g, neighborhood)], dtype=float)
    return phi


@dataclass
class RecResult:
    cmap: CoarseningMap
    contracted: list[tuple[int, int]]
    iterations: int
    p_null: float
    exhausted: bool
    neighborhood: str = "induced"
    meta: dict = field(default_factory=dict)
    steps: list[int] = field(default_factory=list)  # iteration (1-based) of each contraction

    @property
    def ratio(self) -> float:
        return self.cmap.ratio

    def to_json(self) -> str:
        return json.dumps(
            {
                "map": json.loads(self.cmap.to_json()),
                "contracted": [list(e) for e in self.contracted],
                "t": self.iterations,
                "p_null": self.p_null,
                "ratio": self.ratio,
                "exhausted": self.exhausted,
                "neighborhood": self.neighborhood,
                "steps": self.steps,
                **self.meta,
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "RecResult":
        data = json.loads(text)
        return cls(
            cmap=CoarseningMap.from_json(data["map"]),
            contracted=[tuple(e) for e in data["contracted"]],
            iterations=int(data["t"]),
            p_null=float(data["p_null"]),
            exhausted=bool(data["exhausted"]),
            neighborhood=data.get("neighborhood", "induced"),
            steps=[int(x) for x in data.get("steps", [])],
        )


def _result(g, matched, t, p_null, alive_count, neighborhood, meta=None, steps=None) -> RecResult:
    pairs = [(int(g.src[e]), int(g.dst[e])) for e in matched]
    return RecResult(
        cmap=map_from_matching(g, pairs),
        contracted=pairs,
        iterations=t,
        p_null=float(p_null),
        exhausted=alive_count == 0,
        neighborhood=neighborhood,
        meta=meta or {},
        steps=steps if steps is not None else list(range(1, len(pairs) + 1)),
    )


def rec_coarsen(
    g: Graph,
    T: float,
    pot: Potential | str = Potential.HEAVY,
    seed: int | np.random.Generator = 0,
    neighborhood: str = "induced",
) -> RecResult:
    """Run REC for at most ``T`` iterations (``math.inf`` runs until no candidate is left)."""
    if T < 0:
        raise ValueError("T must be non-negative")
    rng = make_rng(seed)
    nbhd = neighborhoods(g, neighborhood)
    phi = potential_weights(g, pot, neighborhood)
    p = phi / phi.sum() if g.n_edges else phi
    cdf = np.cumsum(p)
    alive = np.ones(g.n_edges, dtype=bool)
    alive_count = g.n_edges
    matched: list[int] = []
    steps: list[int] = []
    p_null = 0.0
    t = 0
    last = g.n_edges - 1
    while alive_count > 0 and t < T:
        batch = int(min(T - t, 1024))
        draws = np.searchsorted(cdf, rng.random(batch) * cdf[-1], side="right")
        for e in draws.tolist():
            t += 1
            e = min(e, last)
            if alive[e]:
                nb = nbhd[e]
                newly = nb[alive[nb]]
                alive[newly] = False
                alive_count -= len(newly)
                p_null += float(p[newly].sum())
                matched.append(e)
                steps.append(t)
                if alive_count == 0:
                    break
    return _result(g, matched, t, p_null, alive_count, neighborhood, steps=steps)


class _SumTree:
    """Binary sum tree over non-negative leaf weights; parents are recomputed, never patched."""

    def __init__(self, weights: np.ndarray):
        size = 1
        while size < max(len(weights), 1):
            size *= 2
        self.size = size
        tree = [0.0] * (2 * size)
        tree[size : size + len(weights)] = [float(w) for w in weights]
        for v in range(size - 1, 0, -1):
            tree[v] = tree[2 * v] + tree[2 * v + 1]
        self.tree = tree

    @property
    def total(self) -> float:
        return self.tree[1]

    def zero(self, idx: int) -> None:
        tree = self.tree
        v = idx + self.size
        tree[v] = 0.0
        v //= 2
        while v:
            tree[v] = tree[2 * v] + tree[2 * v + 1]
            v //= 2

    def sample(self, u: float) -> int:
        tree = self.tree
        x = u * tree[1]
        v = 1
        while v < self.size:
            left, right = tree[2 * v], tree[2 * v + 1]
            if right == 0.0 or (x < left and left > 0.0):
                v = 2 * v
            else:
                x -= left
                v = 2 * v + 1
        return v - self.size


def rec_coarsen_fast(
    g: Graph,
    T: float | None = None,
    ratio: float | None = None,
    pot: Potential | str = Potential.HEAVY,
    seed: int | np.random.Generator = 0,
    neighborhood: str = "induced",
) -> RecResult:
    """REC that samples directly from the live candidates.

    Stops once ``T`` contractions were made, once ``(N - n)/N >= ratio``, or
    when no candidate is left. With neither target it runs to exhaustion.
    """
    rng = make_rng(seed)
    T = math.inf if T is None else T
    target = math.inf if ratio is None else ratio * g.n_vertices
    nbhd = neighborhoods(g, neighborhood)
    phi = potential_weights(g, pot, neighborhood)
    tree = _SumTree(phi)
    alive = np.ones(g.n_edges, dtype=bool)
    alive_count = g.n_edges
    matched: list[int] = []
    t = 0
    while alive_count > 0 and t < T and len(matched) < target - 1e-9:
        t += 1
        e = tree.sample(float(rng.random()))
        nb = nbhd[e]
        newly = nb[alive[nb]]
        alive[newly] = False
        alive_count -= len(newly)
        for f in newly.tolist():
            tree.zero(f)
        matched.append(e)
    return _result(g, matched, t, 0.0, alive_count, neighborhood,
                   {"target_ratio": ratio} if ratio is not None else None)


@dataclass(frozen=True)
class InclusionProbability:
    exact: float
    lower: float
    upper: float


def inclusion_terms(
    g: Graph, pot: Potential | str = Potential.HEAVY, neighborhood: str = "induced"
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-edge ``p_ij``, ``P_ij = sum_{N_ij} p`` and ``a_ij = prod_{N_ij} (1 - p)``."""
    nbhd = neighborhoods(g, neighborhood)
    phi = potential_weights(g, pot, neighborhood)
    p = phi / phi.sum()
    P = np.array([p[nb].sum() for nb in nbhd])
    with np.errstate(divide="ignore"):
        log1m = np.log1p(-np.minimum(p, 1.0))
    a = np.array([math.exp(log1m[nb].sum()) if np.all(p[nb] < 1.0) else 0.0 for nb in nbhd])
    return p, P, a


def _one_minus_pow(base: float, T: float) -> float:
    if math.isinf(T):
        return 1.0
    return -math.expm1(T * math.log(base)) if base > 0.0 else (1.0 if T > 0 else 0.0)


def edge_inclusion_probability(
    g: Graph,
    pot: Potential | str,
    T: float,
    edge: tuple[int, int],
    neighborhood: str = "induced",
) -> InclusionProbability:
    """Modelled probability that ``edge`` is contracted within ``T`` iterations, with bracket.

    ``exact = p (1 - a^T)/(1 - a)``; ``lower = p (1 - e^{-T P})/P``;
    ``upper = p (1 - e^{-T P})/(1 - e^{-P})``.
    """
    if T < 0:
        raise ValueError("T must be non-negative")
    e = g.edge_index(*edge)
    p, P, a = inclusion_terms(g, pot, neighborhood)
    pe, Pe, ae = float(p[e]), float(P[e]), float(a[e])
    if ae >= 1.0:
        raise GraphError("degenerate neighborhood mass")
    if T == 0:
        return InclusionProbability(0.0, 0.0, 0.0)
    grow = 1.0 if math.isinf(T) else -math.expm1(-T * Pe)
    exact = pe * _one_minus_pow(ae, T) / (1.0 - ae)
    lower = pe * grow / Pe
    upper = pe * grow / (-math.expm1(-Pe))
    return InclusionProbability(exact, lower, upper)


def iterations_for_ratio(N: int, c1: float, r: float) -> int:
    """Iterations ``ceil((N/c1) log(1/(1 - r c1)))`` that suffice for expected ratio ``r``."""
    if r <= 0:
        return 0
    if r * c1 >= 1.0:
        raise InfeasibleRatio(f"infeasible ratio: r={r} >= 1/c1={1.0 / c1:.6g}")
    return int(math.ceil(N / c1 * -math.log1p(-r * c1)))
