"""Per-node interval-volume baselines, threshold detection and detection curves."""

from __future__ import annotations

import csv
import math
from collections.abc import Iterable
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .centrality import CentralSet
from .config import interval_count
from .errors import ConfigError
from .netsim.engine import interval_index
from .netsim.flows import Event, Trace, TraceRecord

__all__ = [
    "IntervalSeries",
    "Baseline",
    "DetectionReport",
    "Curves",
    "MIN_TRAINING_INTERVALS",
    "aggregate_intervals",
    "fit_baseline",
    "detect",
    "detection_curves",
    "write_detections_csv",
    "write_curves_csv",
]

MIN_TRAINING_INTERVALS = 10


@dataclass(frozen=True)
class IntervalSeries:
    """Bytes seen per node per interval, shape ``(n, n_intervals)``."""

    volumes: np.ndarray
    delta: float

    @property
    def n(self) -> int:
        return int(self.volumes.shape[0])

    @property
    def n_intervals(self) -> int:
        return int(self.volumes.shape[1])

    def coarsen(self, factor: int) -> IntervalSeries:
        """Sum consecutive groups of ``factor`` intervals (the tail is zero-padded)."""
        if factor < 1:
            raise ConfigError("coarsening factor must be >= 1")
        m = -(-self.n_intervals // factor)
        padded = np.zeros((self.n, m * factor), dtype=self.volumes.dtype)
        padded[:, : self.n_intervals] = self.volumes
        return IntervalSeries(padded.reshape(self.n, m, factor).sum(axis=2), self.delta * factor)


def aggregate_intervals(
    trace: Trace | Iterable[TraceRecord], delta: float, n: int | None = None, sim_time: float | None = None
) -> IntervalSeries:
    """Sum receive and forward bytes per node into half-open intervals ``[m*delta, (m+1)*delta)``.

    ``n`` and ``sim_time`` default to the largest node id + 1 and the last
    event time; events at or beyond ``sim_time`` are ignored.
    """
    if not delta > 0:
        raise ConfigError("delta must be positive")
    if not isinstance(trace, Trace):
        trace = Trace.from_records(trace)
    hit = (trace.event == Event.RECEIVE) | (trace.event == Event.FORWARD)
    nodes, times, sizes = trace.node[hit], trace.time[hit], trace.size[hit]
    if n is None:
        n = int(trace.node.max()) + 1 if len(trace) else 0
    if sim_time is None:
        sim_time = float(trace.time.max()) if len(trace) else 0.0
        m_total = interval_index(sim_time, delta) + 1 if len(trace) else 0
    else:
        m_total = interval_count(sim_time, delta)
    vol = np.zeros((n, m_total), dtype=np.int64)
    for v, t, s in zip(nodes.tolist(), times.tolist(), sizes.tolist()):
        m = interval_index(t, delta)
        if m < m_total:
            vol[v, m] += s
    return IntervalSeries(vol, float(delta))


@dataclass(frozen=True)
class Baseline:
    mu: np.ndarray
    sigma: np.ndarray
    threshold: np.ndarray
    t_train: float
    k: float


def fit_baseline(series: IntervalSeries, t_train: float, k: float) -> Baseline:
    """Mean and population standard deviation over intervals fully inside ``[0, t_train]``.

    The threshold is ``max(mu + k*sigma, 1.5*mu + 1)``; the floor keeps a
    node with a perfectly flat (or silent) history from flagging on noise
    of zero width, while still flagging any traffic at an idle node.
    """
    m = int(math.floor(t_train / series.delta + 1e-9))
    if m < MIN_TRAINING_INTERVALS:
        raise ConfigError(f"training window covers {m} intervals, need at least {MIN_TRAINING_INTERVALS}")
    if m > series.n_intervals:
        raise ConfigError("training window extends past the end of the series")
    train = series.volumes[:, :m].astype(float)
    mu = train.mean(axis=1)
    sigma = train.std(axis=1)
    threshold = np.maximum(mu + k * sigma, 1.5 * mu + 1.0)
    return Baseline(mu, sigma, threshold, float(t_train), float(k))


@dataclass(frozen=True)
class DetectionReport:
    """``first_detection_time[v]`` is ``inf`` for nodes that never flag."""

    first_detection_time: np.ndarray
    delta: float
    n_intervals: int

    def detected(self) -> np.ndarray:
        return np.isfinite(self.first_detection_time)


def detect(series: IntervalSeries, baseline: Baseline) -> DetectionReport:
    """Flag the earliest interval starting at or after ``t_train`` whose volume exceeds the threshold."""
    first = interval_index(baseline.t_train, series.delta)
    if first * series.delta < baseline.t_train:
        first += 1
    over = series.volumes[:, first:] > baseline.threshold[:, None]
    out = np.full(series.n, math.inf)
    any_over = over.any(axis=1)
    idx = over.argmax(axis=1)
    out[any_over] = (first + idx[any_over]) * series.delta
    return DetectionReport(out, series.delta, series.n_intervals)


@dataclass(frozen=True)
class Curves:
    """Cumulative detection fractions sampled at the end of each post-injection interval.

    ``time`` is measured from the injection instant. ``noncentral`` is
    ``None`` when the central set covers every node.
    """

    time: np.ndarray
    central: np.ndarray
    noncentral: np.ndarray | None

    def final(self) -> tuple[float, float | None]:
        c = float(self.central[-1]) if self.central.size else 0.0
        if self.noncentral is None:
            return c, None
        return c, float(self.noncentral[-1]) if self.noncentral.size else 0.0


def detection_curves(report: DetectionReport, central: CentralSet, injection_time: float, delta: float) -> Curves:
    n = report.first_detection_time.size
    mask = np.zeros(n, dtype=bool)
    members = np.asarray(sorted(central.members), dtype=np.int64)
    if members.size and (members.min() < 0 or members.max() >= n):
        raise ConfigError("central set references nodes outside the report")
    mask[members] = True
    m0 = interval_index(injection_time, delta)
    if m0 * delta < injection_time:
        m0 += 1
    m1 = int(round(report.n_intervals * report.delta / delta))
    ends = (np.arange(m0, m1) + 1) * delta
    det = report.first_detection_time

    def frac(group: np.ndarray) -> np.ndarray:
        times = np.sort(det[group])
        # a flag raised in interval m has time m*delta, so it counts from the sample at the end of m
        return np.searchsorted(times, ends, side="left") / times.size

    cen = frac(mask) if mask.any() else np.zeros(ends.size)
    non = frac(~mask) if (~mask).any() else None
    return Curves(ends - injection_time, cen, non)


def write_detections_csv(report: DetectionReport, central: CentralSet, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["node", "is_central", "first_detection_time"])
        for v, t in enumerate(report.first_detection_time):
            writer.writerow([v, int(v in central.members), f"{t:.6f}" if math.isfinite(t) else ""])


def write_curves_csv(curves: Curves, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["time", "central_fraction", "noncentral_fraction"])
        for i, t in enumerate(curves.time):
            non = "" if curves.noncentral is None else f"{curves.noncentral[i]:.6f}"
            writer.writerow([f"{t:.6f}", f"{curves.central[i]:.6f}", non])
