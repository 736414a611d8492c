"""Deterministic discrete-event mesh network simulator."""

from .engine import ANOMALY_FLOW_BASE, NodeStats, SimResult, interval_index, run_simulation
from .flows import TRACE_HEADER, Event, Flow, Trace, TraceRecord, random_flows, read_trace_csv, write_trace_csv
from .observe import (
    EPSILON_WEIGHT,
    arrival_time_from_trace,
    average_arrival_time,
    comm_graph_from_counts,
    link_counts_from_trace,
    observed_comm_graph,
)
from .topology import RoutingTable, Topology, build_routing, generate_topology

__all__ = [
    "ANOMALY_FLOW_BASE",
    "EPSILON_WEIGHT",
    "Event",
    "Flow",
    "NodeStats",
    "RoutingTable",
    "SimResult",
    "TRACE_HEADER",
    "Topology",
    "Trace",
    "TraceRecord",
    "arrival_time_from_trace",
    "average_arrival_time",
    "build_routing",
    "comm_graph_from_counts",
    "generate_topology",
    "interval_index",
    "link_counts_from_trace",
    "observed_comm_graph",
    "random_flows",
    "read_trace_csv",
    "run_simulation",
    "write_trace_csv",
]
