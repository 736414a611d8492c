"""Weighted undirected graphs, weighted path lengths and the Laplacian.

Edge weights are interaction frequencies (interactions per second). The cost
of traversing an edge is the reciprocal of its weight, so frequently used
links are "short".
"""

from __future__ import annotations

import heapq
import math
from collections.abc import Iterable, Iterator, Sequence
from pathlib import Path as FsPath

import numpy as np

from .errors import ConfigError, InvalidPathError, UnreachableError

__all__ = [
    "WeightedGraph",
    "path_length",
    "shortest_distance",
    "single_source_distances",
    "all_pairs_distances",
    "enumerate_simple_paths",
    "laplacian",
    "is_connected",
    "read_graph",
    "write_graph",
]

Path = tuple[int, ...]


class WeightedGraph:
    """Immutable weighted undirected simple graph on nodes ``0 .. n-1``.

    Weights must be strictly positive; self-loops and duplicate edges are
    rejected.
    """

    __slots__ = ("_n", "_adj", "_edges")

    def __init__(self, n: int, edges: Iterable[tuple[int, int, float]] = ()):
        if n < 0:
            raise ConfigError(f"node count must be nonnegative, got {n}")
        adj: list[dict[int, float]] = [{} for _ in range(n)]
        for i, j, w in edges:
            i, j, w = int(i), int(j), float(w)
            if not (0 <= i < n and 0 <= j < n):
                raise ConfigError(f"edge ({i}, {j}) references a node outside [0, {n})")
            if i == j:
                raise ConfigError(f"self-loop on node {i}")
            if not (w > 0.0 and math.isfinite(w)):
                raise ConfigError(f"edge ({i}, {j}) weight must be positive and finite, got {w}")
            if j in adj[i]:
                raise ConfigError(f"duplicate edge ({i}, {j})")
            adj[i][j] = w
            adj[j][i] = w
        self._n = n
        # neighbour dicts kept sorted so every traversal is deterministic
        self._adj = tuple({k: a[k] for k in sorted(a)} for a in adj)
        self._edges = tuple(
            (i, j, w) for i in range(n) for j, w in self._adj[i].items() if i < j
        )

    @classmethod
    def from_matrix(cls, weights: np.ndarray) -> WeightedGraph:
        """Build from a symmetric weight matrix; zero entries mean no edge."""
        w = np.asarray(weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ConfigError("weight matrix must be square")
        if not np.allclose(w, w.T, rtol=0.0, atol=0.0):
            raise ConfigError("weight matrix must be symmetric")
        ii, jj = np.nonzero(np.triu(w, k=1))
        return cls(w.shape[0], ((int(i), int(j), float(w[i, j])) for i, j in zip(ii, jj)))

    @property
    def n(self) -> int:
        return self._n

    @property
    def edges(self) -> tuple[tuple[int, int, float], ...]:
        """Edges as ``(i, j, weight)`` with ``i < j``, sorted."""
        return self._edges

    def neighbors(self, i: int) -> dict[int, float]:
        return dict(self._adj[i])

    def iter_neighbors(self, i: int) -> Iterator[tuple[int, float]]:
        return iter(self._adj[i].items())

    def has_edge(self, i: int, j: int) -> bool:
        return j in self._adj[i]

    def weight(self, i: int, j: int) -> float:
        try:
            return self._adj[i][j]
        except KeyError:
            raise InvalidPathError(f"nodes {i} and {j} are not adjacent") from None

    def degree(self, i: int) -> int:
        return len(self._adj[i])

    def adjacency_matrix(self) -> np.ndarray:
        a = np.zeros((self._n, self._n))
        for i, j, w in self._edges:
            a[i, j] = a[j, i] = w
        return a

    def scaled(self, factor: float) -> WeightedGraph:
        return WeightedGraph(self._n, ((i, j, w * factor) for i, j, w in self._edges))

    def relabeled(self, perm: Sequence[int]) -> WeightedGraph:
        """Graph with node ``i`` renamed to ``perm[i]``."""
        if sorted(perm) != list(range(self._n)):
            raise ConfigError("relabeling must be a permutation of the node set")
        return WeightedGraph(self._n, ((perm[i], perm[j], w) for i, j, w in self._edges))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, WeightedGraph):
            return NotImplemented
        return self._n == other._n and self._edges == other._edges

    def __hash__(self) -> int:
        return hash((self._n, self._edges))

    def __repr__(self) -> str:
        return f"WeightedGraph(n={self._n}, edges={len(self._edges)})"


def path_length(g: WeightedGraph, path: Sequence[int]) -> float:
    """Weighted length of a path: the sum of reciprocal edge weights."""
    if len(path) < 2:
        raise InvalidPathError("a path needs at least one edge")
    if len(set(path)) != len(path):
        raise InvalidPathError(f"path {tuple(path)} repeats a vertex")
    total = 0.0
    for u, v in zip(path, path[1:]):
        total += 1.0 / g.weight(u, v)
    return total


def single_source_distances(g: WeightedGraph, source: int) -> np.ndarray:
    """Dijkstra distances from ``source`` under edge cost ``1/w``; inf if unreachable."""
    dist = np.full(g.n, math.inf)
    dist[source] = 0.0
    heap = [(0.0, source)]
    done = np.zeros(g.n, dtype=bool)
    while heap:
        d, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        for v, w in g.iter_neighbors(u):
            nd = d + 1.0 / w
            if nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist


def shortest_distance(g: WeightedGraph, i: int, j: int) -> float:
    if i == j:
        return 0.0
    d = single_source_distances(g, i)[j]
    if math.isinf(d):
        raise UnreachableError(f"node {j} is unreachable from node {i}")
    return float(d)


def all_pairs_distances(g: WeightedGraph) -> np.ndarray:
    return np.vstack([single_source_distances(g, s) for s in range(g.n)])


def enumerate_simple_paths(g: WeightedGraph, i: int, j: int, max_hops: int) -> list[Path]:
    """All simple ``i -> j`` paths with at most ``max_hops`` edges, in lexicographic order."""
    if max_hops < 1:
        raise ConfigError(f"max_hops must be >= 1, got {max_hops}")
    if i == j:
        return []
    out: list[Path] = []
    stack = [i]
    on_path = {i}

    def dfs(u: int) -> None:
        for v in g._adj[u]:
            if v in on_path:
                continue
            if v == j:
                out.append(tuple(stack) + (j,))
                continue
            if len(stack) < max_hops:
                stack.append(v)
                on_path.add(v)
                dfs(v)
                on_path.discard(v)
                stack.pop()

    dfs(i)
    return out


def laplacian(g: WeightedGraph) -> np.ndarray:
    """Weighted graph Laplacian ``D - W`` as a dense matrix."""
    a = g.adjacency_matrix()
    lap = -a
    lap[np.diag_indices(g.n)] = a.sum(axis=1)
    return lap


def is_connected(g: WeightedGraph) -> bool:
    if g.n <= 1:
        return True
    seen = {0}
    frontier = [0]
    while frontier:
        u = frontier.pop()
        for v in g._adj[u]:
            if v not in seen:
                seen.add(v)
                frontier.append(v)
    return len(seen) == g.n


def write_graph(g: WeightedGraph, path: str | FsPath) -> None:
    lines = [f"n {g.n}"] + [f"e {i} {j} {w!r}" for i, j, w in g.edges]
    FsPath(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_graph(path: str | FsPath) -> WeightedGraph:
    """Parse the ``n <count>`` / ``e <i> <j> <weight>`` text format."""
    n = None
    edges = []
    for lineno, raw in enumerate(FsPath(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if parts[0] == "n" and len(parts) == 2:
                if n is not None:
                    raise ConfigError("duplicate 'n' header")
                n = int(parts[1])
            elif parts[0] == "e" and len(parts) == 4:
                edges.append((int(parts[1]), int(parts[2]), float(parts[3])))
            else:
                raise ConfigError(f"unrecognised record {line!r}")
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: {exc}") from None
    if n is None:
        raise ConfigError("graph file has no 'n <count>' header")
    return WeightedGraph(n, edges)
