"""Node centrality measures and central-set selection.

Information centrality is computed two ways:

* ``information_exact`` inverts ``L + J`` (Laplacian plus the all-ones
  matrix); the pairwise information measure is the reciprocal of the
  effective resistance between the two nodes.
* ``information_pathsum`` adds up the conductances ``1/len(P)`` of every
  simple path up to a hop cap (parallel-resistor law). It is exact whenever
  the simple paths between every pair are edge-disjoint (trees, single
  cycles) and an approximation otherwise. Enumeration is exponential in the
  hop cap, so this is a cross-validation tool for small graphs.

Every measure returns a :class:`CentralityReport` whose scores follow the
convention "larger is more central".
"""

from __future__ import annotations

import csv
import enum
import heapq
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import TextIO

import numpy as np
import scipy.linalg

from .errors import ConfigError, ConvergenceError, NoPathError, NotConnectedError, NumericalError
from .graph import WeightedGraph, is_connected, laplacian, single_source_distances

__all__ = [
    "Measure",
    "CentralityReport",
    "CentralSet",
    "information_measure_exact",
    "information_measure_pathsum",
    "information_centrality",
    "closeness_centrality",
    "betweenness_centrality",
    "eigenvector_centrality",
    "degree_centrality",
    "compute_centrality",
    "rank_scores",
    "select_central",
    "write_reports_csv",
    "default_pathsum_hops",
]

# relative tolerance under which two scores count as tied when ranking
RANK_RTOL = 1e-9
# absolute tolerance for equal-length geodesics in betweenness
GEODESIC_ATOL = 1e-9


class Measure(str, enum.Enum):
    INFORMATION_EXACT = "information_exact"
    INFORMATION_PATHSUM = "information_pathsum"
    CLOSENESS = "closeness"
    BETWEENNESS = "betweenness"
    EIGENVECTOR = "eigenvector"
    DEGREE = "degree"


def rank_scores(scores: Sequence[float], rtol: float = RANK_RTOL) -> tuple[int, ...]:
    """Node ids by descending score; near-equal scores break ties by ascending id.

    Scores within ``rtol * max|score|`` of their sorted neighbour are grouped
    into one tie block so that floating-point noise cannot reorder nodes whose
    scores are equal in exact arithmetic.
    """
    s = np.asarray(scores, dtype=float)
    if s.size == 0:
        return ()
    finite = s[np.isfinite(s)]
    tol = rtol * (float(np.max(np.abs(finite))) if finite.size else 0.0)
    order = sorted(range(s.size), key=lambda i: (-s[i], i))
    ranking: list[int] = []
    block = [order[0]]
    for prev, cur in zip(order, order[1:]):
        if s[prev] - s[cur] <= tol or s[prev] == s[cur]:
            block.append(cur)
        else:
            ranking.extend(sorted(block))
            block = [cur]
    ranking.extend(sorted(block))
    return tuple(ranking)


@dataclass(frozen=True)
class CentralityReport:
    measure: Measure
    scores: np.ndarray
    ranking: tuple[int, ...] = field(default=())

    def __post_init__(self) -> None:
        scores = np.asarray(self.scores, dtype=float)
        scores.setflags(write=False)
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "measure", Measure(self.measure))
        if not self.ranking:
            object.__setattr__(self, "ranking", rank_scores(scores))

    @property
    def n(self) -> int:
        return int(self.scores.size)

    def rank_of(self) -> np.ndarray:
        """1-based rank position of every node."""
        pos = np.empty(self.n, dtype=int)
        pos[list(self.ranking)] = np.arange(1, self.n + 1)
        return pos


@dataclass(frozen=True)
class CentralSet:
    members: frozenset[int]
    fraction: float
    ordered: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, node: object) -> bool:
        return node in self.members


def central_count(n: int, fraction: float) -> int:
    if not 0.0 < fraction <= 1.0:
        raise ConfigError(f"central fraction must lie in (0, 1], got {fraction}")
    # round first so 0.15 * 200 = 30.000000000000004 does not ceil to 31
    return min(n, math.ceil(round(fraction * n, 9)))


def select_central(report: CentralityReport | Sequence[int], fraction: float) -> CentralSet:
    """Top ``ceil(fraction * n)`` nodes of a ranking."""
    ranking = report.ranking if isinstance(report, CentralityReport) else tuple(report)
    k = central_count(len(ranking), fraction)
    top = tuple(ranking[:k])
    return CentralSet(frozenset(top), fraction, top)


def _require_connected(g: WeightedGraph) -> None:
    if not is_connected(g):
        raise NotConnectedError("centrality requires a connected graph")


def information_measure_exact(g: WeightedGraph) -> np.ndarray:
    """Pairwise information measure ``I_ij = 1 / R_ij`` with ``I_ii = inf``.

    ``C = (L + J)^-1`` and ``R_ij = c_ii + c_jj - 2 c_ij``.
    """
    _require_connected(g)
    n = g.n
    if n == 1:
        return np.full((1, 1), math.inf)
    m = laplacian(g) + 1.0
    try:
        lu, piv = scipy.linalg.lu_factor(m, check_finite=True)
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise NumericalError(f"LU factorisation of L + J failed: {exc}") from None
    if np.min(np.abs(np.diag(lu))) <= np.finfo(float).eps * np.max(np.abs(np.diag(lu))):
        raise NumericalError("L + J is numerically singular")
    c = scipy.linalg.lu_solve((lu, piv), np.eye(n))
    d = np.diag(c)
    resistance = d[:, None] + d[None, :] - 2.0 * c
    resistance = 0.5 * (resistance + resistance.T)
    off = ~np.eye(n, dtype=bool)
    if not np.all(resistance[off] > 0.0):
        raise NumericalError("non-positive effective resistance; weights too ill-conditioned")
    info = np.full((n, n), math.inf)
    info[off] = 1.0 / resistance[off]
    return info


def _pathsum_from(g: WeightedGraph, source: int, max_hops: int) -> np.ndarray:
    """Sum of ``1/len`` over all simple paths from ``source`` to each node."""
    acc = np.zeros(g.n)
    adj = [list(g.iter_neighbors(u)) for u in range(g.n)]
    on_path = [False] * g.n
    on_path[source] = True
    # iterative DFS: (node, accumulated length, hops, neighbour cursor)
    stack = [(source, 0.0, 0, iter(adj[source]))]
    while stack:
        u, length, hops, it = stack[-1]
        advanced = False
        for v, w in it:
            if on_path[v]:
                continue
            vlen = length + 1.0 / w
            acc[v] += 1.0 / vlen
            if hops + 1 < max_hops:
                on_path[v] = True
                stack.append((v, vlen, hops + 1, iter(adj[v])))
                advanced = True
                break
        if not advanced:
            stack.pop()
            on_path[u] = u == source
    return acc


def default_pathsum_hops(n: int) -> int:
    return max(1, min(n - 1, 8))


def information_measure_pathsum(g: WeightedGraph, i: int, j: int, max_hops: int | None = None) -> float:
    """``I_ij`` as the parallel conductance of all simple ``i -> j`` paths within the hop cap."""
    if max_hops is None:
        max_hops = default_pathsum_hops(g.n)
    if max_hops < 1:
        raise ConfigError(f"max_hops must be >= 1, got {max_hops}")
    if i == j:
        return math.inf
    total = float(_pathsum_from(g, i, max_hops)[j])
    if total <= 0.0:
        raise NoPathError(f"no path from {i} to {j} within {max_hops} hops")
    return total


def information_pathsum_table(g: WeightedGraph, max_hops: int | None = None) -> np.ndarray:
    if max_hops is None:
        max_hops = default_pathsum_hops(g.n)
    if max_hops < 1:
        raise ConfigError(f"max_hops must be >= 1, got {max_hops}")
    table = np.vstack([_pathsum_from(g, s, max_hops) for s in range(g.n)])
    off = ~np.eye(g.n, dtype=bool)
    if np.any(table[off] <= 0.0):
        i, j = np.argwhere((table <= 0.0) & off)[0]
        raise NoPathError(f"no path from {i} to {j} within {max_hops} hops")
    table[~off] = math.inf
    return table


def information_centrality(
    g: WeightedGraph,
    method: Measure | str = Measure.INFORMATION_EXACT,
    max_hops: int | None = None,
) -> CentralityReport:
    """Harmonic-mean information centrality ``I_i = n / sum_j 1/I_ij``.

    The self term ``I_ii`` is infinite and contributes nothing to the sum.
    """
    method = Measure(method)
    if method is Measure.INFORMATION_EXACT:
        table = information_measure_exact(g)
    elif method is Measure.INFORMATION_PATHSUM:
        _require_connected(g)
        table = information_pathsum_table(g, max_hops)
    else:
        raise ConfigError(f"{method.value} is not an information-centrality method")
    n = g.n
    with np.errstate(divide="ignore"):
        inv = 1.0 / table
    denom = inv.sum(axis=1)
    scores = np.where(denom > 0.0, n / np.where(denom > 0.0, denom, 1.0), math.inf)
    if n == 1:
        scores = np.zeros(1)
    return CentralityReport(method, scores)


def closeness_centrality(g: WeightedGraph) -> CentralityReport:
    """Reciprocal of the summed weighted distance to every other node."""
    _require_connected(g)
    scores = np.zeros(g.n)
    for i in range(g.n):
        total = single_source_distances(g, i).sum()
        scores[i] = 1.0 / total if total > 0.0 else 0.0
    return CentralityReport(Measure.CLOSENESS, scores)


def betweenness_centrality(g: WeightedGraph) -> CentralityReport:
    """Brandes shortest-path betweenness, unordered pairs, endpoints excluded.

    Geodesics whose weighted lengths agree within ``GEODESIC_ATOL`` share the
    pair's credit equally.
    """
    _require_connected(g)
    n = g.n
    cb = np.zeros(n)
    adj = [list(g.iter_neighbors(u)) for u in range(n)]
    for s in range(n):
        dist = [math.inf] * n
        sigma = [0.0] * n
        preds: list[list[int]] = [[] for _ in range(n)]
        dist[s] = 0.0
        sigma[s] = 1.0
        settled: list[int] = []
        done = [False] * n
        heap = [(0.0, s)]
        while heap:
            d, u = heapq.heappop(heap)
            if done[u]:
                continue
            done[u] = True
            settled.append(u)
            for v, w in adj[u]:
                nd = d + 1.0 / w
                if done[v]:
                    continue
                if nd < dist[v] - GEODESIC_ATOL:
                    dist[v] = nd
                    sigma[v] = sigma[u]
                    preds[v] = [u]
                    heapq.heappush(heap, (nd, v))
                elif abs(nd - dist[v]) <= GEODESIC_ATOL:
                    sigma[v] += sigma[u]
                    preds[v].append(u)
        delta = [0.0] * n
        for w in reversed(settled):
            for v in preds[w]:
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w])
            if w != s:
                cb[w] += delta[w]
    return CentralityReport(Measure.BETWEENNESS, cb / 2.0)


def eigenvector_centrality(g: WeightedGraph, tol: float = 1e-12, max_iter: int = 100_000) -> CentralityReport:
    """Principal eigenvector of the weighted adjacency matrix, unit 2-norm.

    Power iteration runs on ``A + I``: same eigenvectors, but the Perron
    root strictly dominates in modulus, so bipartite graphs converge too.
    """
    _require_connected(g)
    n = g.n
    a = g.adjacency_matrix() + np.eye(n)
    x = np.full(n, 1.0 / math.sqrt(n))
    gap = math.inf
    for _ in range(max_iter):
        y = a @ x
        y /= np.linalg.norm(y)
        gap = float(np.max(np.abs(y - x)))
        x = y
        if gap < tol:
            return CentralityReport(Measure.EIGENVECTOR, np.abs(x))
    raise ConvergenceError(f"power iteration did not converge in {max_iter} iterations", gap)


def degree_centrality(g: WeightedGraph) -> CentralityReport:
    """Weighted degree (strength) of each node."""
    return CentralityReport(Measure.DEGREE, g.adjacency_matrix().sum(axis=1))


def compute_centrality(g: WeightedGraph, measure: Measure | str, **kwargs) -> CentralityReport:
    measure = Measure(measure)
    if measure in (Measure.INFORMATION_EXACT, Measure.INFORMATION_PATHSUM):
        return information_centrality(g, measure, **kwargs)
    return {
        Measure.CLOSENESS: closeness_centrality,
        Measure.BETWEENNESS: betweenness_centrality,
        Measure.EIGENVECTOR: eigenvector_centrality,
        Measure.DEGREE: degree_centrality,
    }[measure](g, **kwargs)


def write_reports_csv(reports: Iterable[CentralityReport], path: str | Path | TextIO) -> None:
    """Write ``node,measure,score,rank`` rows (rank is 1-based) to a path or an open text stream."""
    if hasattr(path, "write"):
        _write_reports(reports, path)
        return
    with open(path, "w", newline="", encoding="utf-8") as fh:
        _write_reports(reports, fh)


def _write_reports(reports: Iterable[CentralityReport], fh: TextIO) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["node", "measure", "score", "rank"])
    for report in reports:
        ranks = report.rank_of()
        for node in range(report.n):
            writer.writerow([node, report.measure.value, repr(float(report.scores[node])), int(ranks[node])])
