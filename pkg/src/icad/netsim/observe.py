"""Quantities derived from a run: the observed communication graph and arrival latencies."""

from __future__ import annotations

import math
from collections.abc import Iterable

import numpy as np

from ..errors import ConfigError
from ..graph import WeightedGraph
from .engine import NodeStats
from .flows import Event, TraceRecord
from .topology import Topology

__all__ = ["EPSILON_WEIGHT", "link_counts_from_trace", "observed_comm_graph", "comm_graph_from_counts", "average_arrival_time"]

EPSILON_WEIGHT = 1e-6


def link_counts_from_trace(trace: Iterable[TraceRecord], n: int, window: tuple[float, float]) -> np.ndarray:
    """Directed per-link packet counts ``[from, to]`` for hops landing inside ``window``.

    A packet's hops are recovered by following its records in emission order:
    each forward or receive moves the packet from its previous node.
    """
    t0, t1 = window
    counts = np.zeros((n, n), dtype=np.int64)
    at: dict[int, int] = {}
    for r in trace:
        if r.event is Event.SEND:
            at[r.packet_id] = r.node
        elif r.event in (Event.FORWARD, Event.RECEIVE):
            prev = at.get(r.packet_id)
            if prev is not None and t0 <= r.time < t1:
                counts[prev, r.node] += 1
            if r.event is Event.FORWARD:
                at[r.packet_id] = r.node
            else:
                at.pop(r.packet_id, None)
    return counts


def comm_graph_from_counts(topology: Topology, counts: np.ndarray, window: tuple[float, float]) -> WeightedGraph:
    t0, t1 = window
    if not t1 > t0:
        raise ConfigError("observation window must have t1 > t0")
    duration = t1 - t0
    both = counts + counts.T
    return WeightedGraph(
        topology.n,
        ((i, j, max(both[i, j] / duration, EPSILON_WEIGHT)) for i, j, _ in topology.graph.edges),
    )


def observed_comm_graph(
    trace: Iterable[TraceRecord] | NodeStats, topology: Topology, window: tuple[float, float]
) -> WeightedGraph:
    """Topology reweighted by packets per second crossing each link during ``window``.

    Links that carried nothing keep a floor weight of ``EPSILON_WEIGHT`` so
    the graph stays connected.
    """
    if not window[1] > window[0]:
        raise ConfigError("observation window must have t1 > t0")
    if isinstance(trace, NodeStats):
        if trace.window != (float(window[0]), float(window[1])):
            raise ConfigError(f"stats were observed over {trace.window}, not {window}")
        counts = trace.link_packets
    else:
        counts = link_counts_from_trace(trace, topology.n, window)
    return comm_graph_from_counts(topology, counts, window)


def average_arrival_time(stats: NodeStats) -> np.ndarray:
    """Mean ``receive_time - origin_time`` per node; ``inf`` for nodes that saw nothing."""
    return stats.mean_latency()


def arrival_time_from_trace(trace: Iterable[TraceRecord], n: int, window: tuple[float, float]) -> np.ndarray:
    total = np.zeros(n)
    count = np.zeros(n, dtype=np.int64)
    for r in trace:
        if r.event in (Event.FORWARD, Event.RECEIVE) and window[0] <= r.time < window[1]:
            total[r.node] += r.time - r.origin_time
            count[r.node] += 1
    out = np.full(n, math.inf)
    out[count > 0] = total[count > 0] / count[count > 0]
    return out
