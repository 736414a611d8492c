"""Random geometric mesh topologies and static minimum-hop routing tables."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from ..errors import ConfigError, NotConnectedError, TopologyGenerationError
from ..graph import WeightedGraph, is_connected

__all__ = ["Topology", "RoutingTable", "generate_topology", "build_routing", "MAX_ATTEMPTS"]

MAX_ATTEMPTS = 1000


@dataclass(frozen=True)
class Topology:
    positions: np.ndarray  # (n, 2), meters
    side: float
    radio_range: float
    graph: WeightedGraph

    @property
    def n(self) -> int:
        return self.graph.n

    @classmethod
    def from_graph(cls, graph: WeightedGraph) -> Topology:
        """Wrap an explicit graph (positions unknown) so it can be simulated."""
        return cls(np.zeros((graph.n, 2)), 0.0, 0.0, graph)


def _unit_disk_edges(pos: np.ndarray, radio_range: float) -> tuple[np.ndarray, np.ndarray]:
    diff = pos[:, None, :] - pos[None, :, :]
    within = np.einsum("ijk,ijk->ij", diff, diff) <= radio_range * radio_range
    ii, jj = np.nonzero(np.triu(within, k=1))
    return ii, jj


def generate_topology(n: int, side: float, radio_range: float, rng_seed: int) -> Topology:
    """Uniform random node placement, redrawn until the unit-disk graph is connected."""
    if n < 2 or side <= 0 or radio_range <= 0:
        raise ConfigError(f"need n >= 2, side > 0, radio_range > 0 (got {n}, {side}, {radio_range})")
    rng = np.random.default_rng(rng_seed)
    for _ in range(MAX_ATTEMPTS):
        pos = rng.uniform(0.0, side, size=(n, 2))
        ii, jj = _unit_disk_edges(pos, radio_range)
        adj = csr_matrix((np.ones(ii.size), (ii, jj)), shape=(n, n))
        if connected_components(adj, directed=False, return_labels=False) == 1:
            graph = WeightedGraph(n, ((int(i), int(j), 1.0) for i, j in zip(ii, jj)))
            return Topology(pos, float(side), float(radio_range), graph)
    raise TopologyGenerationError(
        f"no connected placement of {n} nodes in {side}x{side} with radio range {radio_range} "
        f"after {MAX_ATTEMPTS} attempts; increase radio_range"
    )


@dataclass(frozen=True)
class RoutingTable:
    """``next_hop[u, d]`` is the neighbour ``u`` forwards to for destination ``d``."""

    next_hop: np.ndarray
    hops: np.ndarray

    @property
    def n(self) -> int:
        return self.next_hop.shape[0]

    def route(self, source: int, destination: int) -> tuple[int, ...]:
        path = [source]
        while path[-1] != destination:
            path.append(int(self.next_hop[path[-1], destination]))
            if len(path) > self.n:
                raise RuntimeError("routing loop")  # unreachable for tables built here
        return tuple(path)


def build_routing(topology: Topology | WeightedGraph) -> RoutingTable:
    """All-pairs minimum-hop next hops; equal-hop choices go to the lowest node id."""
    g = topology.graph if isinstance(topology, Topology) else topology
    if not is_connected(g):
        raise NotConnectedError("routing requires a connected topology")
    n = g.n
    nbrs = [sorted(g.neighbors(u)) for u in range(n)]
    hops = np.full((n, n), -1, dtype=np.int64)
    for d in range(n):
        hops[d, d] = 0
        queue = deque([d])
        while queue:
            u = queue.popleft()
            for v in nbrs[u]:
                if hops[v, d] < 0:
                    hops[v, d] = hops[u, d] + 1
                    queue.append(v)
    next_hop = np.empty((n, n), dtype=np.int64)
    for u in range(n):
        for d in range(n):
            if u == d:
                next_hop[u, d] = u
                continue
            target = hops[u, d] - 1
            next_hop[u, d] = next(v for v in nbrs[u] if hops[v, d] == target)
    return RoutingTable(next_hop, hops)
