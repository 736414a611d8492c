"""Packet-level discrete-event simulation of a static multi-hop mesh.

Each node owns one FIFO egress queue served at ``link_rate``; a packet's
service is deterministic, so its departure time is fixed the moment it is
enqueued and only hop arrivals need heap events. Events are processed in
``(time, sequence)`` order, which makes every run fully deterministic.

Infection is tracked per packet: a packet is contaminated once it leaves an
infected node, and a safe node that receives or forwards a contaminated
packet becomes infected. Every infected node then runs an anomalous CBR
flow towards its own target node; the aggregate attack load
``anomaly_rate`` is shared equally by all currently infected senders.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np
from numba import njit

from ..config import SimConfig, interval_count
from ..errors import ConfigError
from .flows import Flow, Trace
from .topology import RoutingTable, Topology

if TYPE_CHECKING:
    from ..threat import AttackPlan

__all__ = ["NodeStats", "SimResult", "run_simulation", "ANOMALY_FLOW_BASE", "interval_index"]

ANOMALY_FLOW_BASE = 1_000_000

_GEN, _ARRIVE, _INFECT = 0, 1, 2
_SEND, _RECEIVE, _DROP, _FORWARD = 0, 1, 2, 3


@njit(cache=True)
def _interval(t, delta):
    m = int(t / delta)
    if (m + 1) * delta <= t:
        m += 1
    elif m * delta > t:
        m -= 1
    return m


def interval_index(t: float, delta: float) -> int:
    """Index ``m`` with ``m * delta <= t < (m + 1) * delta``."""
    return _interval(float(t), float(delta))


@njit(cache=True)
def _record(rec, nrec, code, t, node, pid, size, flow, origin):
    if nrec == rec.shape[0]:
        grown = np.empty((rec.shape[0] * 2, 7))
        grown[:nrec] = rec
        rec = grown
    rec[nrec, 0] = code
    rec[nrec, 1] = t
    rec[nrec, 2] = node
    rec[nrec, 3] = pid
    rec[nrec, 4] = size
    rec[nrec, 5] = flow
    rec[nrec, 6] = origin
    return rec


@njit(cache=True)
def _enqueue(qbuf, qhead, qcount, busy, maxq, u, t, tx, cap):
    """Admit a packet to u's egress queue; returns its departure time or -1 on tail drop."""
    h = qhead[u]
    c = qcount[u]
    while c > 0 and qbuf[u, h] <= t:
        h += 1
        if h == cap:
            h = 0
        c -= 1
    qhead[u] = h
    if c >= cap:
        qcount[u] = c
        return -1.0
    start = busy[u] if busy[u] > t else t
    end = start + tx
    busy[u] = end
    slot = h + c
    if slot >= cap:
        slot -= cap
    qbuf[u, slot] = end
    qcount[u] = c + 1
    if c + 1 > maxq[u]:
        maxq[u] = c + 1
    return end


@njit(cache=True)
def _simulate(
    n, next_hop, f_src, f_dst, f_size, f_gap, f_start, f_stop, n_normal,
    link_rate, prop_delay, queue_cap, sim_time, delta, n_intervals, obs_t0, obs_t1,
    seeds, injection_time, targets, anomaly_rate, attack_on, record,
):
    n_flows = f_src.size
    qbuf = np.empty((n, queue_cap))
    qhead = np.zeros(n, np.int64)
    qcount = np.zeros(n, np.int64)
    busy = np.zeros(n)
    maxq = np.zeros(n, np.int64)

    vol = np.zeros((n, n_intervals), np.int64)
    seen = np.zeros(n, np.int64)
    lat_sum = np.zeros(n)
    link = np.zeros((n, n), np.int64)

    sent = np.zeros(n_flows, np.int64)
    recv = np.zeros(n_flows, np.int64)
    drop = np.zeros(n_flows, np.int64)
    inflight = np.zeros(n_flows, np.int64)

    infected_at = np.full(n, np.inf)
    n_senders = 0

    rec = np.empty((1024 if record else 1, 7))
    nrec = 0

    # (time, seq, kind, node, prev, packet, flow, origin, contaminated)
    heap = [(0.0, 0, 0, 0, 0, 0, 0, 0.0, 0)]
    heap.pop()
    seq = 0
    for f in range(n_normal):
        if f_start[f] < f_stop[f] and f_start[f] < sim_time:
            heapq.heappush(heap, (f_start[f], seq, _GEN, f_src[f], -1, -1, f, f_start[f], 0))
            seq += 1
    if attack_on:
        for s in seeds:
            heapq.heappush(heap, (injection_time, seq, _INFECT, s, -1, -1, -1, injection_time, 0))
            seq += 1

    next_pid = 0
    while len(heap) > 0:
        ev = heapq.heappop(heap)
        t = ev[0]
        kind = ev[2]
        if t >= sim_time:
            if kind == _ARRIVE:
                inflight[ev[6]] += 1
            for e in heap:
                if e[2] == _ARRIVE:
                    inflight[e[6]] += 1
            break

        if kind == _GEN:
            f = ev[6]
            src = f_src[f]
            dst = f_dst[f]
            size = f_size[f]
            pid = next_pid
            next_pid += 1
            sent[f] += 1
            if record:
                rec = _record(rec, nrec, _SEND, t, src, pid, size, f, t)
                nrec += 1
            contam = 1 if infected_at[src] <= t else 0
            end = _enqueue(qbuf, qhead, qcount, busy, maxq, src, t, size * 8.0 / link_rate, queue_cap)
            if end < 0.0:
                drop[f] += 1
                if record:
                    rec = _record(rec, nrec, _DROP, t, src, pid, size, f, t)
                    nrec += 1
            else:
                heapq.heappush(heap, (end + prop_delay, seq, _ARRIVE, next_hop[src, dst], src, pid, f, t, contam))
                seq += 1
            if f >= n_normal:
                gap = size * 8.0 * n_senders / anomaly_rate
            else:
                gap = f_gap[f]
            nt = t + gap
            if nt < f_stop[f] and nt < sim_time:
                heapq.heappush(heap, (nt, seq, _GEN, src, -1, -1, f, nt, 0))
                seq += 1

        elif kind == _ARRIVE:
            v = ev[3]
            u = ev[4]
            pid = ev[5]
            f = ev[6]
            origin = ev[7]
            contam = ev[8]
            size = f_size[f]
            dst = f_dst[f]
            m = _interval(t, delta)
            if m < n_intervals:
                vol[v, m] += size
            if obs_t0 <= t and t < obs_t1:
                seen[v] += 1
                lat_sum[v] += t - origin
                link[u, v] += 1
            if attack_on and contam == 1 and infected_at[v] == np.inf:
                infected_at[v] = t
                if targets[v] >= 0:
                    n_senders += 1
                    heapq.heappush(heap, (t, seq, _GEN, v, -1, -1, n_normal + v, t, 0))
                    seq += 1
            if v == dst:
                recv[f] += 1
                if record:
                    rec = _record(rec, nrec, _RECEIVE, t, v, pid, size, f, origin)
                    nrec += 1
            else:
                if record:
                    rec = _record(rec, nrec, _FORWARD, t, v, pid, size, f, origin)
                    nrec += 1
                if infected_at[v] <= t:
                    contam = 1
                end = _enqueue(qbuf, qhead, qcount, busy, maxq, v, t, size * 8.0 / link_rate, queue_cap)
                if end < 0.0:
                    drop[f] += 1
                    if record:
                        rec = _record(rec, nrec, _DROP, t, v, pid, size, f, origin)
                        nrec += 1
                else:
                    heapq.heappush(heap, (end + prop_delay, seq, _ARRIVE, next_hop[v, dst], v, pid, f, origin, contam))
                    seq += 1

        else:  # seed infection
            v = ev[3]
            if infected_at[v] == np.inf:
                infected_at[v] = t
                if targets[v] >= 0:
                    n_senders += 1
                    heapq.heappush(heap, (t, seq, _GEN, v, -1, -1, n_normal + v, t, 0))
                    seq += 1

    return (rec[:nrec], vol, seen, lat_sum, link, sent, recv, drop, inflight, infected_at, maxq)


@dataclass(frozen=True)
class NodeStats:
    """Per-node observations.

    ``bytes_per_interval`` covers the whole run; packet counts, latency sums
    and link traversal counts cover only the observation ``window``.
    """

    bytes_per_interval: np.ndarray
    packets_seen: np.ndarray
    latency_sum: np.ndarray
    link_packets: np.ndarray  # directed counts [from, to]
    window: tuple[float, float]
    delta: float

    @property
    def n(self) -> int:
        return int(self.packets_seen.size)

    def mean_latency(self) -> np.ndarray:
        """Mean arrival latency per node; ``inf`` where nothing was observed."""
        out = np.full(self.n, math.inf)
        hit = self.packets_seen > 0
        out[hit] = self.latency_sum[hit] / self.packets_seen[hit]
        return out


@dataclass(frozen=True)
class SimResult:
    trace: Trace | None
    stats: NodeStats
    flow_ids: np.ndarray
    sent: np.ndarray
    received: np.ndarray
    dropped: np.ndarray
    in_flight: np.ndarray
    infection_time: np.ndarray
    max_queue: np.ndarray

    def flow_counts(self, flow_id: int) -> dict[str, int]:
        (idx,) = np.nonzero(self.flow_ids == flow_id)
        if idx.size == 0:
            raise KeyError(flow_id)
        i = idx[0]
        return {
            "sent": int(self.sent[i]),
            "received": int(self.received[i]),
            "dropped": int(self.dropped[i]),
            "in_flight": int(self.in_flight[i]),
        }

    def conserved(self) -> bool:
        """Every sent packet was delivered, dropped, or is still in flight, per flow."""
        return bool(np.all(self.sent == self.received + self.dropped + self.in_flight))


def run_simulation(
    config: SimConfig,
    topology: Topology,
    routing: RoutingTable,
    flows: Sequence[Flow],
    attack: AttackPlan | None = None,
    observe_window: tuple[float, float] | None = None,
    record_trace: bool = True,
) -> SimResult:
    """Simulate ``flows`` (plus an optional attack) over ``[0, config.sim_time)``.

    ``observe_window`` bounds the latency and link-count observations and
    defaults to the training window ``[0, config.t_train)``.
    """
    n = topology.n
    if routing.n != n:
        raise ConfigError("routing table and topology disagree on the node count")
    ids = set()
    for fl in flows:
        fl.check(n)
        if fl.anomalous or fl.flow_id >= ANOMALY_FLOW_BASE or fl.flow_id < 0 or fl.flow_id in ids:
            raise ConfigError(f"flow id {fl.flow_id} is invalid, duplicated or in the reserved anomaly range")
        ids.add(fl.flow_id)
    if observe_window is None:
        observe_window = (0.0, config.t_train)
    if not observe_window[1] > observe_window[0]:
        raise ConfigError("observation window must have t1 > t0")

    n_normal = len(flows)
    total = n_normal + n
    f_src = np.empty(total, np.int64)
    f_dst = np.empty(total, np.int64)
    f_size = np.empty(total, np.int64)
    f_gap = np.empty(total)
    f_start = np.empty(total)
    f_stop = np.empty(total)
    for i, fl in enumerate(flows):
        f_src[i], f_dst[i], f_size[i] = fl.source, fl.destination, fl.packet_size
        f_gap[i], f_start[i], f_stop[i] = fl.gap, fl.start, fl.stop
    # one reserved anomalous flow slot per node, activated on infection
    f_src[n_normal:] = np.arange(n)
    targets = np.full(n, -1, np.int64)
    if attack is not None:
        targets[:] = np.asarray(attack.targets, dtype=np.int64)
        if targets.size != n or np.any(targets >= n) or np.any(targets == np.arange(n)):
            raise ConfigError("attack targets must give one destination per node, never the node itself")
    f_dst[n_normal:] = np.where(targets >= 0, targets, 0)
    f_size[n_normal:] = attack.gibberish_size if attack is not None else 1
    f_gap[n_normal:] = math.inf
    f_start[n_normal:] = math.inf
    f_stop[n_normal:] = config.sim_time

    if attack is not None:
        seeds = np.asarray(attack.seeds, dtype=np.int64)
        if np.any((seeds < 0) | (seeds >= n)):
            raise ConfigError("attack references nodes outside the topology")
        injection, rate = float(attack.injection_time), float(attack.anomaly_rate)
    else:
        seeds, injection, rate = np.zeros(0, np.int64), math.inf, 1.0

    n_intervals = interval_count(config.sim_time, config.delta)
    out = _simulate(
        n, np.ascontiguousarray(routing.next_hop, dtype=np.int64), f_src, f_dst, f_size, f_gap, f_start, f_stop,
        n_normal, float(config.link_rate), float(config.prop_delay), int(config.queue_cap), float(config.sim_time),
        float(config.delta), n_intervals, float(observe_window[0]), float(observe_window[1]),
        seeds, injection, targets, rate, attack is not None, record_trace,
    )
    rec, vol, seen, lat_sum, link, sent, recv, drop, inflight, infected_at, maxq = out

    flow_ids = np.concatenate([np.array([fl.flow_id for fl in flows], dtype=np.int64),
                               ANOMALY_FLOW_BASE + np.arange(n, dtype=np.int64)])
    trace = None
    if record_trace:
        flow_index = rec[:, 5].astype(np.int64)
        trace = Trace(rec[:, 0], rec[:, 1], rec[:, 2], rec[:, 3], rec[:, 4], flow_ids[flow_index], rec[:, 6])
    stats = NodeStats(vol, seen, lat_sum, link, (float(observe_window[0]), float(observe_window[1])), config.delta)
    return SimResult(trace, stats, flow_ids, sent, recv, drop, inflight, infected_at, maxq)
