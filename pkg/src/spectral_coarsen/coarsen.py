"""Coarsening maps, the coarsening matrix and the operators derived from it.

A coarsening map partitions the vertex set into ordered groups. Its matrix
``C`` has one row per group holding ``1/sqrt(n_i)`` on that group's columns,
so ``C C^T = I_n`` and ``Pi = C^T C`` is an orthogonal projection.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .graph import Graph


class CoarseningError(ValueError):
    pass


@dataclass(frozen=True)
class CoarseningMap:
    """Partition of ``0..N-1`` into groups ordered by smallest member."""

    n_vertices: int
    groups: tuple[tuple[int, ...], ...]
    group_of: tuple[int, ...]

    @classmethod
    def from_groups(cls, n_vertices: int, groups: Iterable[Sequence[int]]) -> "CoarseningMap":
        groups = [tuple(sorted(int(v) for v in grp)) for grp in groups]
        if any(len(grp) == 0 for grp in groups):
            raise CoarseningError("empty group")
        group_of = [-1] * n_vertices
        for grp in groups:
            for v in grp:
                if not 0 <= v < n_vertices:
                    raise CoarseningError(f"vertex {v} out of range")
                if group_of[v] != -1:
                    raise CoarseningError(f"vertex {v} assigned to two groups")
                group_of[v] = 0
        if -1 in group_of:
            missing = group_of.index(-1)
            raise CoarseningError(f"vertex {missing} not covered by any group")
        groups.sort(key=lambda grp: grp[0])
        for r, grp in enumerate(groups):
            for v in grp:
                group_of[v] = r
        return cls(n_vertices, tuple(groups), tuple(group_of))

    @classmethod
    def identity(cls, n_vertices: int) -> "CoarseningMap":
        return cls.from_groups(n_vertices, ([v] for v in range(n_vertices)))

    @property
    def n(self) -> int:
        return len(self.groups)

    @property
    def sizes(self) -> np.ndarray:
        return np.array([len(grp) for grp in self.groups])

    @property
    def ratio(self) -> float:
        return (self.n_vertices - self.n) / self.n_vertices

    def is_pairing(self) -> bool:
        return all(len(grp) <= 2 for grp in self.groups)

    def pairs(self) -> list[tuple[int, int]]:
        return [grp for grp in self.groups if len(grp) == 2]

    def to_json(self) -> str:
        return json.dumps({"n": self.n, "groups": [list(grp) for grp in self.groups]})

    @classmethod
    def from_json(cls, text: str | dict) -> "CoarseningMap":
        data = json.loads(text) if isinstance(text, str) else text
        groups = data["groups"]
        n_vertices = sum(len(grp) for grp in groups)
        cmap = cls.from_groups(n_vertices, groups)
        if "n" in data and int(data["n"]) != cmap.n:
            raise CoarseningError(f"declared n={data['n']} but {cmap.n} groups given")
        return cmap


def map_from_matching(g: Graph, matching: Iterable[tuple[int, int]]) -> CoarseningMap:
    used: set[int] = set()
    groups = []
    for i, j in matching:
        if not g.has_edge(i, j):
            raise CoarseningError(f"edge ({i}, {j}) not in graph")
        if i in used or j in used:
            raise CoarseningError("not a matching: edges share a vertex")
        used.update((i, j))
        groups.append((i, j))
    groups += [(v,) for v in range(g.n_vertices) if v not in used]
    return CoarseningMap.from_groups(g.n_vertices, groups)


def coarsening_matrix(cmap: CoarseningMap) -> np.ndarray:
    C = np.zeros((cmap.n, cmap.n_vertices))
    for r, grp in enumerate(cmap.groups):
        C[r, list(grp)] = 1.0 / np.sqrt(len(grp))
    C.setflags(write=False)
    return C


def _check_cols(C: np.ndarray, size: int, what: str) -> None:
    if C.shape[1] != size:
        raise CoarseningError(f"dimension mismatch: C is {C.shape}, {what} has size {size}")


def coarsen_laplacian(L: np.ndarray, C: np.ndarray) -> np.ndarray:
    """``L_c = C L C^T``, symmetrized against round-off."""
    _check_cols(C, L.shape[0], "L")
    if L.shape[0] != L.shape[1]:
        raise CoarseningError("L must be square")
    Lc = C @ L @ C.T
    return 0.5 * (Lc + Lc.T)


def downsample(C: np.ndarray, x: np.ndarray) -> np.ndarray:
    _check_cols(C, len(x), "x")
    return C @ x


def lift(C: np.ndarray, xc: np.ndarray) -> np.ndarray:
    if C.shape[0] != len(xc):
        raise CoarseningError(f"dimension mismatch: C is {C.shape}, x_c has size {len(xc)}")
    return C.T @ xc


def project(C: np.ndarray, x: np.ndarray) -> np.ndarray:
    return lift(C, downsample(C, x))


def projection_matrix(C: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(Pi, Pi_perp)`` with ``Pi = C^T C``."""
    P = C.T @ C
    return P, np.eye(C.shape[1]) - P


def projection_rank(P: np.ndarray) -> int:
    # projection eigenvalues are exactly 0 or 1
    return int(np.sum(np.linalg.eigvalsh(0.5 * (P + P.T)) > 0.5))


def renormalized_laplacian(Lc: np.ndarray, C: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``(Q L_c Q, Q)`` with ``Q = diag(C 1)``: the coarse graph in Laplacian form.

    Quadratic forms agree: ``x_c^T L_c x_c == y^T (Q L_c Q) y`` for ``y = Q^{-1} x_c``.
    """
    Q = np.diag(C @ np.ones(C.shape[1]))
    Lr = Q @ Lc @ Q
    return 0.5 * (Lr + Lr.T), Q


@dataclass(frozen=True)
class CoarseningFrame:
    vertices: tuple[int, ...]
    edges: tuple[tuple[int, int, float], ...]

    def is_matching(self) -> bool:
        seen: set[int] = set()
        for i, j, _ in self.edges:
            if i in seen or j in seen:
                return False
            seen.update((i, j))
        return True


def coarsening_frame(g: Graph, cmap: CoarseningMap) -> CoarseningFrame:
    """Subgraph of ``g`` induced by every vertex that shares its group."""
    in_frame = np.zeros(g.n_vertices, dtype=bool)
    for grp in cmap.groups:
        if len(grp) >= 2:
            in_frame[list(grp)] = True
    edges = tuple((i, j, w) for i, j, w in g.edges() if in_frame[i] and in_frame[j])
    return CoarseningFrame(tuple(int(v) for v in np.flatnonzero(in_frame)), edges)
