"""Constant-bit-rate flows and trace records."""

from __future__ import annotations

import csv
import enum
from collections.abc import Iterable, Iterator
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from ..errors import ConfigError

__all__ = ["Flow", "random_flows", "Event", "TraceRecord", "Trace", "TRACE_HEADER", "write_trace_csv", "read_trace_csv"]


@dataclass(frozen=True)
class Flow:
    flow_id: int
    source: int
    destination: int
    rate: float  # bits/s
    packet_size: int  # bytes
    start: float
    stop: float
    anomalous: bool = False

    @property
    def gap(self) -> float:
        """Inter-packet gap in seconds."""
        return self.packet_size * 8.0 / self.rate

    def check(self, n: int) -> None:
        if not (0 <= self.source < n and 0 <= self.destination < n):
            raise ConfigError(f"flow {self.flow_id} references a node outside [0, {n})")
        if self.source == self.destination:
            raise ConfigError(f"flow {self.flow_id} has identical source and destination")
        if not self.rate > 0 or not self.packet_size > 0:
            raise ConfigError(f"flow {self.flow_id} needs positive rate and packet size")
        if not self.stop >= self.start >= 0:
            raise ConfigError(f"flow {self.flow_id} has an invalid [start, stop] window")


def random_flows(
    n: int,
    count: int,
    rate: float,
    packet_size: int,
    stop: float,
    rng: np.random.Generator,
    first_id: int = 0,
) -> list[Flow]:
    """``count`` CBR flows between uniformly drawn distinct node pairs.

    Each flow starts at a random phase inside its first inter-packet gap so
    that sources are not synchronised.
    """
    gap = packet_size * 8.0 / rate
    flows = []
    for k in range(count):
        src, dst = (int(v) for v in rng.choice(n, size=2, replace=False))
        start = float(rng.uniform(0.0, gap))
        flows.append(Flow(first_id + k, src, dst, rate, packet_size, start, stop))
    return flows


class Event(enum.IntEnum):
    SEND = 0
    RECEIVE = 1
    DROP = 2
    FORWARD = 3


class TraceRecord(NamedTuple):
    event: Event
    time: float
    node: int
    packet_id: int
    size: int
    flow_id: int
    origin_time: float


TRACE_HEADER = ("event", "time", "node", "packet_id", "size", "flow_id", "origin_time")


class Trace:
    """Columnar packet-event log in emission order."""

    __slots__ = ("event", "time", "node", "packet_id", "size", "flow_id", "origin_time")

    def __init__(self, event, time, node, packet_id, size, flow_id, origin_time):
        self.event = np.asarray(event, dtype=np.int8)
        self.time = np.asarray(time, dtype=float)
        self.node = np.asarray(node, dtype=np.int64)
        self.packet_id = np.asarray(packet_id, dtype=np.int64)
        self.size = np.asarray(size, dtype=np.int64)
        self.flow_id = np.asarray(flow_id, dtype=np.int64)
        self.origin_time = np.asarray(origin_time, dtype=float)

    @classmethod
    def from_records(cls, records: Iterable[TraceRecord]) -> Trace:
        rows = list(records)
        if not rows:
            return cls.empty()
        cols = list(zip(*rows))
        return cls(*[np.asarray(c) for c in cols])

    @classmethod
    def empty(cls) -> Trace:
        return cls(*[[] for _ in range(7)])

    def __len__(self) -> int:
        return int(self.time.size)

    def __iter__(self) -> Iterator[TraceRecord]:
        for row in zip(
            self.event.tolist(), self.time.tolist(), self.node.tolist(), self.packet_id.tolist(),
            self.size.tolist(), self.flow_id.tolist(), self.origin_time.tolist(),
        ):
            yield TraceRecord(Event(row[0]), *row[1:])

    def __getitem__(self, idx: int) -> TraceRecord:
        return TraceRecord(
            Event(int(self.event[idx])), float(self.time[idx]), int(self.node[idx]), int(self.packet_id[idx]),
            int(self.size[idx]), int(self.flow_id[idx]), float(self.origin_time[idx]),
        )

    def count(self, event: Event) -> int:
        return int(np.count_nonzero(self.event == event))


def write_trace_csv(trace: Iterable[TraceRecord], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_HEADER)
        for r in trace:
            writer.writerow(
                [r.event.name.lower(), f"{r.time:.6f}", r.node, r.packet_id, r.size, r.flow_id, f"{r.origin_time:.6f}"]
            )


def read_trace_csv(path: str | Path) -> Trace:
    names = {e.name.lower(): e for e in Event}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if tuple(header or ()) != TRACE_HEADER:
            raise ConfigError(f"{path}: not a native trace (header {header})")
        return Trace.from_records(
            TraceRecord(names[row[0]], float(row[1]), int(row[2]), int(row[3]), int(row[4]), int(row[5]), float(row[6]))
            for row in reader
        )
