"""Replicated experiments: training, central-node classification, attack and detection."""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np
from scipy.stats import rankdata

from .centrality import CentralityReport, CentralSet, information_centrality, rank_scores, select_central
from .config import SimConfig
from .detector import Curves, DetectionReport, IntervalSeries, detect, detection_curves, fit_baseline
from .errors import IcadError
from .netsim import (
    Topology,
    average_arrival_time,
    build_routing,
    generate_topology,
    observed_comm_graph,
    random_flows,
    run_simulation,
)
from .threat import AttackConfig, plan_attack

__all__ = [
    "METHODS",
    "RankAgreement",
    "RateOutcome",
    "ReplicationResult",
    "ExperimentSummary",
    "arrival_ranking",
    "classify_central",
    "rank_agreement",
    "set_overlap",
    "run_replication",
    "run_experiment",
    "emit_outputs",
]

log = logging.getLogger(__name__)

METHODS = ("ic", "arrival_time")

CurveKey = tuple[str, float, float]  # (method, fraction, anomaly rate)


def arrival_ranking(arrival: Sequence[float]) -> tuple[int, ...]:
    """Nodes by ascending mean arrival time; nodes that saw nothing (``inf``) come last by id."""
    a = np.asarray(arrival, dtype=float)
    seen = np.flatnonzero(np.isfinite(a))
    head = [int(seen[i]) for i in rank_scores(-a[seen])]
    tail = [int(v) for v in np.flatnonzero(~np.isfinite(a))]
    return tuple(head + tail)


def classify_central(method: str, inputs: CentralityReport | Sequence[float], fraction: float) -> CentralSet:
    """Top fraction by descending IC (``ic``) or by ascending arrival time (``arrival_time``)."""
    if method == "ic":
        if not isinstance(inputs, CentralityReport):
            raise IcadError("the ic method needs a CentralityReport")
        return select_central(inputs, fraction)
    if method == "arrival_time":
        return select_central(arrival_ranking(inputs), fraction)
    raise IcadError(f"unknown classification method {method!r}; expected one of {METHODS}")


class RankAgreement(NamedTuple):
    rho: float
    degenerate: bool


def rank_agreement(ic: CentralityReport | Sequence[float], arrival: Sequence[float]) -> RankAgreement:
    """Spearman correlation of IC (descending) against arrival time (ascending).

    Tied values share their average rank; ``inf`` arrival times tie for last.
    A constant ranking on either side has no defined correlation and is
    reported as ``(0.0, True)``.
    """
    scores = ic.scores if isinstance(ic, CentralityReport) else np.asarray(ic, dtype=float)
    a = np.asarray(arrival, dtype=float)
    if scores.shape != a.shape:
        raise IcadError("IC scores and arrival times cover different node sets")
    ra = rankdata(-scores)
    rb = rankdata(np.where(np.isfinite(a), a, np.inf))
    if np.ptp(ra) == 0 or np.ptp(rb) == 0:
        return RankAgreement(0.0, True)
    rho = float(np.corrcoef(ra, rb)[0, 1])
    return RankAgreement(min(1.0, max(-1.0, rho)), False)


def set_overlap(a: CentralSet, b: CentralSet) -> float:
    """Share of ``a`` also present in ``b``."""
    return len(a.members & b.members) / len(a.members) if a.members else 0.0


@dataclass
class RateOutcome:
    rate: float
    detection: DetectionReport
    infection_time: np.ndarray
    conserved: bool


@dataclass
class ReplicationResult:
    index: int
    seed: int
    error: str | None = None
    ic_report: CentralityReport | None = None
    arrival_time: np.ndarray | None = None
    central_sets: dict[tuple[str, float], CentralSet] = field(default_factory=dict)
    agreement: RankAgreement | None = None
    overlap: dict[float, float] = field(default_factory=dict)
    rates: dict[float, RateOutcome] = field(default_factory=dict)
    curves: dict[CurveKey, Curves] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.error is None

    def final_fractions(self, key: CurveKey) -> tuple[float, float | None]:
        return self.curves[key].final()

    def median_detection_time(self, key: CurveKey) -> tuple[float, float]:
        """Median first detection time over the detected members of each group (``nan`` if none)."""
        method, fraction, rate = key
        members = np.zeros(self.rates[rate].detection.first_detection_time.size, dtype=bool)
        members[list(self.central_sets[(method, fraction)].members)] = True
        det = self.rates[rate].detection.first_detection_time
        out = []
        for group in (members, ~members):
            t = det[group]
            t = t[np.isfinite(t)]
            out.append(float(np.median(t)) if t.size else math.nan)
        return out[0], out[1]


def run_replication(config: SimConfig, topology: Topology, routing, index: int) -> ReplicationResult:
    """One replication with child seed ``rng_seed + index``; module errors are recorded, not raised."""
    seed = config.rng_seed + index
    rep = ReplicationResult(index, seed)
    try:
        flows = random_flows(
            config.n, config.flow_count, config.flow_rate, config.packet_size, config.sim_time,
            np.random.default_rng([seed, 0]),
        )
        window = (0.0, config.t_train)
        stats = None
        for rate in config.anomaly_rates:
            attack = AttackConfig(config.t_seeds, config.injection_time, rate, config.gibberish_size)
            # same stream for every rate: seeds and targets are matched across rates
            plan = plan_attack(config.n, attack, [seed, 1])
            res = run_simulation(config, topology, routing, flows, plan, observe_window=window, record_trace=False)
            if stats is None:
                # the training window precedes injection, so it is identical for every rate
                stats = res.stats
            series = IntervalSeries(res.stats.bytes_per_interval, config.delta)
            report = detect(series, fit_baseline(series, config.t_train, config.k))
            rep.rates[rate] = RateOutcome(rate, report, res.infection_time, res.conserved())

        graph = observed_comm_graph(stats, topology, window)
        rep.ic_report = information_centrality(graph, method=config.ic_method, max_hops=config.max_hops)
        rep.arrival_time = average_arrival_time(stats)
        rep.agreement = rank_agreement(rep.ic_report, rep.arrival_time)
        for fraction in config.central_fractions:
            rep.central_sets[("ic", fraction)] = classify_central("ic", rep.ic_report, fraction)
            rep.central_sets[("arrival_time", fraction)] = classify_central("arrival_time", rep.arrival_time, fraction)
            rep.overlap[fraction] = set_overlap(
                rep.central_sets[("ic", fraction)], rep.central_sets[("arrival_time", fraction)]
            )
        for (method, fraction), central in rep.central_sets.items():
            for rate, outcome in rep.rates.items():
                rep.curves[(method, fraction, rate)] = detection_curves(
                    outcome.detection, central, config.injection_time, config.delta
                )
    except (IcadError, ArithmeticError, ValueError) as exc:
        log.warning("replication %d failed: %s", index, exc)
        rep.error = f"{type(exc).__name__}: {exc}"
    return rep


@dataclass
class ExperimentSummary:
    config: SimConfig
    topology: Topology
    replications: list[ReplicationResult]

    def successful(self) -> list[ReplicationResult]:
        return [r for r in self.replications if r.ok]

    def keys(self) -> list[CurveKey]:
        return [(m, f, r) for f in self.config.central_fractions for r in self.config.anomaly_rates for m in METHODS]

    def median_curves(self, key: CurveKey) -> Curves | None:
        reps = [r.curves[key] for r in self.successful()]
        if not reps:
            return None
        central = np.median(np.vstack([c.central for c in reps]), axis=0)
        if any(c.noncentral is None for c in reps):
            non = None
        else:
            non = np.median(np.vstack([c.noncentral for c in reps]), axis=0)
        return Curves(reps[0].time, central, non)

    def median_final(self, key: CurveKey) -> tuple[float, float | None]:
        finals = [r.final_fractions(key) for r in self.successful()]
        if not finals:
            return math.nan, math.nan
        c = float(np.median([f[0] for f in finals]))
        nc = [f[1] for f in finals]
        return c, None if any(v is None for v in nc) else float(np.median(nc))

    def median_spearman(self) -> float:
        vals = [r.agreement.rho for r in self.successful()]
        return float(np.median(vals)) if vals else math.nan

    def median_overlap(self, fraction: float) -> float:
        vals = [r.overlap[fraction] for r in self.successful()]
        return float(np.median(vals)) if vals else math.nan


def run_experiment(
    config: SimConfig, progress: Callable[[ReplicationResult], None] | None = None
) -> ExperimentSummary:
    """All replications over one topology generated from ``config.rng_seed``."""
    config.validate()
    topology = generate_topology(config.n, config.side, config.radio_range, config.rng_seed)
    routing = build_routing(topology)
    results = []
    for r in range(config.replications):
        rep = run_replication(config, topology, routing, r)
        results.append(rep)
        if progress is not None:
            progress(rep)
    return ExperimentSummary(config, topology, results)


def _fmt(x: float | None) -> str:
    if x is None:
        return ""
    return "nan" if math.isnan(x) else f"{x:.6f}"


def _write_curve_rows(fh, key: CurveKey, curves: Curves) -> None:
    method, fraction, rate = key
    for i, t in enumerate(curves.time):
        non = None if curves.noncentral is None else float(curves.noncentral[i])
        fh.write(f"{method},{fraction:g},{rate:g},{t:.6f},{curves.central[i]:.6f},{_fmt(non)}\n")


CURVE_HEADER = "method,fraction,rate,time,central_fraction,noncentral_fraction\n"


def emit_outputs(summary: ExperimentSummary, out_dir: str | Path) -> list[Path]:
    """Write the config echo, per-replication and median curves, centrality scores and a text summary."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    def open_new(name: str):
        path = out / name
        written.append(path)
        return open(path, "w", encoding="utf-8", newline="")

    with open_new("config.txt") as fh:
        fh.write(summary.config.to_text())

    for rep in summary.replications:
        if not rep.ok:
            continue
        with open_new(f"curves_r{rep.index}.csv") as fh:
            fh.write(CURVE_HEADER)
            for key in summary.keys():
                _write_curve_rows(fh, key, rep.curves[key])

    with open_new("curves_median.csv") as fh:
        fh.write(CURVE_HEADER)
        for key in summary.keys():
            med = summary.median_curves(key)
            if med is not None:
                _write_curve_rows(fh, key, med)

    with open_new("centrality.csv") as fh:
        fh.write("replication,node,measure,score,rank\n")
        for rep in summary.successful():
            ic_rank = rep.ic_report.rank_of()
            arr_rank = np.empty(rep.arrival_time.size, dtype=int)
            arr_rank[list(arrival_ranking(rep.arrival_time))] = np.arange(1, rep.arrival_time.size + 1)
            for v in range(rep.arrival_time.size):
                fh.write(f"{rep.index},{v},{rep.ic_report.measure.value},{rep.ic_report.scores[v]:.9e},{ic_rank[v]}\n")
            for v in range(rep.arrival_time.size):
                a = rep.arrival_time[v]
                fh.write(f"{rep.index},{v},arrival_time,{a:.9e},{arr_rank[v]}\n" if math.isfinite(a)
                         else f"{rep.index},{v},arrival_time,inf,{arr_rank[v]}\n")

    with open_new("summary.txt") as fh:
        fh.write(_summary_text(summary))
    return written


def _summary_text(summary: ExperimentSummary) -> str:
    cfg = summary.config
    ok = summary.successful()
    lines = [
        f"replications: {len(summary.replications)} run, {len(ok)} succeeded",
    ]
    for rep in summary.replications:
        if not rep.ok:
            lines.append(f"  replication {rep.index} failed: {rep.error}")
    degenerate = sum(1 for r in ok if r.agreement.degenerate)
    lines.append(f"median spearman (ic vs arrival_time): {_fmt(summary.median_spearman())} "
                 f"({degenerate} degenerate)")
    for fraction in cfg.central_fractions:
        lines.append(f"median top-set overlap at fraction {fraction:g}: {_fmt(summary.median_overlap(fraction))}")
    lines.append("per-replication spearman: " + " ".join(_fmt(r.agreement.rho) for r in ok))
    for fraction in cfg.central_fractions:
        for rate in cfg.anomaly_rates:
            lines.append("")
            lines.append(f"[fraction={fraction:g} rate={rate:g}]")
            for method in METHODS:
                key = (method, fraction, rate)
                c, nc = summary.median_final(key)
                med = summary.median_curves(key)
                dominant = med is not None and med.noncentral is not None and bool(np.all(med.central >= med.noncentral))
                delays = [r.median_detection_time(key) for r in ok]
                dc = float(np.nanmedian([d[0] for d in delays])) if any(np.isfinite(d[0]) for d in delays) else math.nan
                dn = float(np.nanmedian([d[1] for d in delays])) if any(np.isfinite(d[1]) for d in delays) else math.nan
                lines.append(
                    f"{method}: final_central={_fmt(c)} final_noncentral={_fmt(nc)} "
                    f"median_central_curve_dominates={'yes' if dominant else 'no'} "
                    f"median_detection_time_central={_fmt(dc - cfg.injection_time if math.isfinite(dc) else math.nan)} "
                    f"median_detection_time_noncentral={_fmt(dn - cfg.injection_time if math.isfinite(dn) else math.nan)}"
                )
    return "\n".join(lines) + "\n"
