"""Weighted undirected graphs, Laplacians, synthetic generators and edge-list I/O."""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Union

import numpy as np

from .config import make_rng


class GraphError(ValueError):
    pass


class EdgeListError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class Graph:
    """Immutable weighted undirected graph on vertices ``0..N-1``.

    Edges are stored canonically (``i < j``, sorted lexicographically) in the
    arrays ``src``, ``dst`` and ``weight``; ``adjacency[v]`` lists
    ``(neighbor, edge_index)`` pairs for O(deg) neighborhood queries.
    Weights must lie in ``(0, 1]``.
    """

    __slots__ = ("n_vertices", "src", "dst", "weight", "adjacency", "_edge_index")

    def __init__(self, n_vertices: int, edges: Iterable[tuple[int, int, float]]):
        n_vertices = int(n_vertices)
        if n_vertices <= 0:
            raise GraphError("vertex count must be positive")
        canon: dict[tuple[int, int], float] = {}
        for i, j, w in edges:
            i, j, w = int(i), int(j), float(w)
            if i == j:
                raise GraphError(f"self-loop at vertex {i}")
            if not (0 <= i < n_vertices and 0 <= j < n_vertices):
                raise GraphError(f"edge ({i}, {j}) out of range for N={n_vertices}")
            if not (0.0 < w <= 1.0) or not math.isfinite(w):
                raise GraphError(f"weight outside (0,1]: {w!r} on edge ({i}, {j})")
            key = (i, j) if i < j else (j, i)
            if key in canon:
                raise GraphError(f"duplicate edge {key}")
            canon[key] = w
        keys = sorted(canon)
        self.n_vertices = n_vertices
        self.src = np.array([k[0] for k in keys], dtype=np.int64)
        self.dst = np.array([k[1] for k in keys], dtype=np.int64)
        self.weight = np.array([canon[k] for k in keys], dtype=float)
        for arr in (self.src, self.dst, self.weight):
            arr.setflags(write=False)
        adjacency: list[list[tuple[int, int]]] = [[] for _ in range(n_vertices)]
        for e, (i, j) in enumerate(keys):
            adjacency[i].append((j, e))
            adjacency[j].append((i, e))
        self.adjacency = tuple(tuple(a) for a in adjacency)
        self._edge_index = {k: e for e, k in enumerate(keys)}

    @property
    def n_edges(self) -> int:
        return len(self.weight)

    def edges(self) -> list[tuple[int, int, float]]:
        return [(int(i), int(j), float(w)) for i, j, w in zip(self.src, self.dst, self.weight)]

    def edge_index(self, i: int, j: int) -> int:
        key = (i, j) if i < j else (j, i)
        try:
            return self._edge_index[key]
        except KeyError:
            raise GraphError(f"edge ({i}, {j}) not in graph") from None

    def has_edge(self, i: int, j: int) -> bool:
        return ((i, j) if i < j else (j, i)) in self._edge_index

    def neighbors(self, v: int) -> list[int]:
        return [u for u, _ in self.adjacency[v]]

    def degrees(self) -> np.ndarray:
        return weighted_degrees(self)[0]

    def is_connected(self) -> bool:
        seen = np.zeros(self.n_vertices, dtype=bool)
        stack = [0]
        seen[0] = True
        while stack:
            v = stack.pop()
            for u, _ in self.adjacency[v]:
                if not seen[u]:
                    seen[u] = True
                    stack.append(u)
        return bool(seen.all())

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self.n_vertices == other.n_vertices
            and np.array_equal(self.src, other.src)
            and np.array_equal(self.dst, other.dst)
            and np.array_equal(self.weight, other.weight)
        )

    def __hash__(self):
        return hash((self.n_vertices, self.src.tobytes(), self.dst.tobytes(), self.weight.tobytes()))

    def __repr__(self) -> str:
        return f"Graph(N={self.n_vertices}, M={self.n_edges})"


def weighted_degrees(g: Graph) -> tuple[np.ndarray, float]:
    """Weighted degree of every vertex and the average degree."""
    deg = np.zeros(g.n_vertices)
    np.add.at(deg, g.src, g.weight)
    np.add.at(deg, g.dst, g.weight)
    return deg, float(deg.sum() / g.n_vertices)


def build_laplacian(g: Graph) -> np.ndarray:
    """Dense combinatorial Laplacian ``D - W``."""
    L = np.zeros((g.n_vertices, g.n_vertices))
    L[g.src, g.dst] = -g.weight
    L[g.dst, g.src] = -g.weight
    deg, _ = weighted_degrees(g)
    L[np.diag_indices_from(L)] = deg
    L.setflags(write=False)
    return L


def adjacency_matrix(g: Graph) -> np.ndarray:
    A = np.zeros((g.n_vertices, g.n_vertices))
    A[g.src, g.dst] = g.weight
    A[g.dst, g.src] = g.weight
    return A


# --------------------------------------------------------------------------
# generators

@dataclass(frozen=True)
class Regular:
    N: int
    d: int


@dataclass(frozen=True)
class SBM:
    N: int
    K: int
    p: float
    q: float


@dataclass(frozen=True)
class KnnCloud:
    points: np.ndarray
    k: int
    sigma: float


@dataclass(frozen=True)
class SwissRoll:
    N: int
    k: int
    sigma: float


@dataclass(frozen=True)
class ErdosRenyi:
    N: int
    p: float


GeneratorSpec = Union[Regular, SBM, KnnCloud, SwissRoll, ErdosRenyi]


def generate(spec: GeneratorSpec, seed: int | np.random.Generator) -> Graph:
    """Sample a graph from ``spec``; deterministic for a fixed integer seed."""
    rng = make_rng(seed)
    if isinstance(spec, Regular):
        return _regular(spec, rng)
    if isinstance(spec, SBM):
        return _sbm(spec, rng)[0]
    if isinstance(spec, ErdosRenyi):
        return _erdos_renyi(spec, rng)
    if isinstance(spec, KnnCloud):
        return knn_graph(spec.points, spec.k, spec.sigma)
    if isinstance(spec, SwissRoll):
        return knn_graph(swiss_roll_points(spec.N, rng), spec.k, spec.sigma)
    raise TypeError(f"unknown generator spec {spec!r}")


def generate_sbm(spec: SBM, seed: int | np.random.Generator) -> tuple[Graph, np.ndarray]:
    """SBM graph together with its planted block labels (same draw as ``generate``)."""
    return _sbm(spec, make_rng(seed))


def _upper_pairs(N: int) -> tuple[np.ndarray, np.ndarray]:
    return np.triu_indices(N, k=1)


def _erdos_renyi(spec: ErdosRenyi, rng: np.random.Generator) -> Graph:
    if not 0.0 <= spec.p <= 1.0:
        raise GraphError("ER probability must lie in [0, 1]")
    iu, ju = _upper_pairs(spec.N)
    keep = rng.random(len(iu)) < spec.p
    return Graph(spec.N, zip(iu[keep], ju[keep], np.ones(keep.sum())))


def _sbm(spec: SBM, rng: np.random.Generator) -> tuple[Graph, np.ndarray]:
    if spec.K < 1 or spec.K > spec.N:
        raise GraphError("SBM needs 1 <= K <= N")
    if not (0.0 <= spec.q <= 1.0 and 0.0 <= spec.p <= 1.0):
        raise GraphError("SBM probabilities must lie in [0, 1]")
    labels = rng.integers(0, spec.K, size=spec.N)
    iu, ju = _upper_pairs(spec.N)
    prob = np.where(labels[iu] == labels[ju], spec.p, spec.q)
    keep = rng.random(len(iu)) < prob
    g = Graph(spec.N, zip(iu[keep], ju[keep], np.ones(keep.sum())))
    return g, labels


def _regular(spec: Regular, rng: np.random.Generator, max_rounds: int = 10_000) -> Graph:
    N, d = spec.N, spec.d
    if d < 0 or d >= N or (N * d) % 2:
        raise GraphError(f"infeasible regular spec N={N}, d={d}")
    if d == 0:
        return Graph(N, [])
    stubs = rng.permutation(np.repeat(np.arange(N), d))
    pairs = stubs.reshape(-1, 2).tolist()

    def key(a, b):
        return (a, b) if a < b else (b, a)

    counts: dict[tuple[int, int], int] = {}
    for a, b in pairs:
        counts[key(a, b)] = counts.get(key(a, b), 0) + 1

    def bad(idx):
        a, b = pairs[idx]
        return a == b or counts[key(a, b)] > 1

    # Edge-swap repair: rewire each loop / multi-edge against a random partner.
    for _ in range(max_rounds):
        bad_idx = [i for i in range(len(pairs)) if bad(i)]
        if not bad_idx:
            break
        for i in bad_idx:
            if not bad(i):
                continue
            j = int(rng.integers(len(pairs)))
            if j == i:
                continue
            a, b = pairs[i]
            c, e = pairs[j]
            if rng.random() < 0.5:
                c, e = e, c
            new1, new2 = key(a, c), key(b, e)
            if a == c or b == e or new1 == new2 or counts.get(new1, 0) or counts.get(new2, 0):
                continue
            for old in (key(a, b), key(pairs[j][0], pairs[j][1])):
                counts[old] -= 1
                if not counts[old]:
                    del counts[old]
            pairs[i], pairs[j] = [a, c], [b, e]
            counts[new1] = 1
            counts[new2] = 1
    else:
        raise GraphError("regular generator failed to repair configuration")
    return Graph(N, ((a, b, 1.0) for a, b in pairs))


def swiss_roll_points(N: int, rng: np.random.Generator) -> np.ndarray:
    t = 1.5 * np.pi * (1.0 + 2.0 * rng.random(N))
    h = 21.0 * rng.random(N)
    return np.column_stack([t * np.cos(t), h, t * np.sin(t)])


def knn_graph(points: np.ndarray, k: int, sigma: float) -> Graph:
    """Union-symmetrized k-NN graph with Gaussian weights ``exp(-d^2/sigma^2)``.

    Gaussian weights never exceed 1, so no rescaling is applied.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    N = len(points)
    if k < 1 or k >= N:
        raise GraphError(f"need 1 <= k < N for a k-NN graph (k={k}, N={N})")
    if sigma <= 0:
        raise GraphError("sigma must be positive")
    sq = np.sum((points[:, None, :] - points[None, :, :]) ** 2, axis=-1)
    np.fill_diagonal(sq, np.inf)
    nn = np.argsort(sq, axis=1, kind="stable")[:, :k]
    pairs = {}
    for i in range(N):
        for j in nn[i]:
            key = (i, int(j)) if i < j else (int(j), i)
            pairs[key] = math.exp(-sq[key] / sigma**2)
    if any(w <= 0.0 for w in pairs.values()):
        raise GraphError("Gaussian weight underflowed to zero; increase sigma")
    return Graph(N, ((i, j, w) for (i, j), w in pairs.items()))


# --------------------------------------------------------------------------
# edge-list I/O

def write_edgelist(g: Graph, path: str | Path) -> None:
    lines = [f"{g.n_vertices} {g.n_edges}"]
    lines += [f"{i} {j} {w:.17g}" for i, j, w in g.edges()]
    Path(path).write_text("\n".join(lines) + "\n")


def read_edgelist(path: str | Path) -> Graph:
    """Parse the ``N M`` header plus ``i j w`` lines; ``#`` starts a comment line."""
    header = None
    edges = []
    seen = set()
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if header is None:
                if len(parts) != 2:
                    raise EdgeListError("expected header 'N M'", lineno)
                try:
                    header = (int(parts[0]), int(parts[1]))
                except ValueError:
                    raise EdgeListError("malformed header", lineno) from None
                if header[0] <= 0 or header[1] < 0:
                    raise EdgeListError("header values out of range", lineno)
                continue
            if len(parts) != 3:
                raise EdgeListError("expected 'i j w'", lineno)
            try:
                i, j, w = int(parts[0]), int(parts[1]), float(parts[2])
            except ValueError:
                raise EdgeListError("malformed edge line", lineno) from None
            N = header[0]
            if not (0 <= i < N and 0 <= j < N):
                raise EdgeListError(f"index out of range for N={N}", lineno)
            if i == j:
                raise EdgeListError("self-loop", lineno)
            if not (0.0 < w <= 1.0):
                raise EdgeListError("weight outside (0,1]", lineno)
            key = (min(i, j), max(i, j))
            if key in seen:
                raise EdgeListError(f"duplicate edge {key}", lineno)
            seen.add(key)
            edges.append((i, j, w))
    if header is None:
        raise EdgeListError("missing header")
    if len(edges) != header[1]:
        raise EdgeListError(f"header announces {header[1]} edges, found {len(edges)}")
    return Graph(header[0], edges)
