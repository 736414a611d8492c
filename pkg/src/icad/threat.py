"""Adversary model: seed corruption, packet-borne infection and flooding.

A node is either safe or infected, and infection is absorbing. The attacker
corrupts ``t_seeds`` nodes at ``injection_time``; from then on any packet
that leaves an infected node carries the infection to every safe node that
receives or forwards it. Every infected node floods its own target, drawn
uniformly per replication, and all current senders share the aggregate
attack load ``anomaly_rate`` equally.

The simulator applies these rules natively during a run;
:func:`replay_infection` re-derives the infection log from a recorded trace
using the functions below, which serves as an independent check.
"""

from __future__ import annotations

import csv
import enum
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .netsim.engine import ANOMALY_FLOW_BASE
from .netsim.flows import Event, Flow, TraceRecord

__all__ = [
    "NodeState",
    "NodeStates",
    "AttackConfig",
    "AttackPlan",
    "draw_targets",
    "plan_attack",
    "seed_attack",
    "propagate_on_receive",
    "inject_anomalous_flows",
    "replay_infection",
    "write_infection_log",
]


class NodeState(enum.Enum):
    SAFE = "safe"
    INFECTED = "infected"


class NodeStates:
    """Infection state of every node; ``inf`` infection time means safe."""

    def __init__(self, n: int):
        self.infection_time = np.full(n, math.inf)

    @property
    def n(self) -> int:
        return int(self.infection_time.size)

    def state(self, node: int) -> NodeState:
        return NodeState.INFECTED if self.is_infected(node) else NodeState.SAFE

    def is_infected(self, node: int) -> bool:
        return bool(np.isfinite(self.infection_time[node]))

    def infect(self, node: int, time: float) -> None:
        if not self.is_infected(node):
            self.infection_time[node] = time

    def infected_nodes(self) -> list[int]:
        return [int(v) for v in np.flatnonzero(np.isfinite(self.infection_time))]

    def copy(self) -> NodeStates:
        other = NodeStates(self.n)
        other.infection_time = self.infection_time.copy()
        return other


@dataclass(frozen=True)
class AttackConfig:
    t_seeds: int
    injection_time: float
    anomaly_rate: float  # aggregate bits/s across all infected senders
    gibberish_packet_size: int = 512

    def __post_init__(self) -> None:
        if self.t_seeds < 1:
            raise ConfigError("an attack needs at least one seed node")
        if not self.anomaly_rate > 0 or not self.gibberish_packet_size > 0:
            raise ConfigError("anomaly_rate and gibberish_packet_size must be positive")
        if self.injection_time < 0:
            raise ConfigError("injection_time must be nonnegative")


@dataclass(frozen=True)
class AttackPlan:
    """A concrete attack: seeds, one flood target per node (``-1`` = never floods) and rates."""

    seeds: tuple[int, ...]
    targets: tuple[int, ...]
    injection_time: float
    anomaly_rate: float
    gibberish_size: int


def draw_targets(n: int, rng: np.random.Generator) -> tuple[int, ...]:
    """For every node, a destination drawn uniformly from the other ``n - 1`` nodes."""
    if n < 2:
        raise ConfigError("flood targets need at least two nodes")
    raw = rng.integers(0, n - 1, size=n)
    return tuple(int(t + (t >= v)) for v, t in enumerate(raw))


def plan_attack(n: int, attack: AttackConfig, rng_seed: int | Sequence[int]) -> AttackPlan:
    """Draw the seeds (uniform, without replacement), then every node's flood target."""
    if attack.t_seeds > n:
        raise ConfigError(f"t_seeds={attack.t_seeds} exceeds the node count {n}")
    rng = np.random.default_rng(rng_seed)
    seeds = tuple(sorted(int(v) for v in rng.choice(n, size=attack.t_seeds, replace=False)))
    targets = draw_targets(n, rng)
    return AttackPlan(seeds, targets, attack.injection_time, attack.anomaly_rate, attack.gibberish_packet_size)


def seed_attack(states: NodeStates, attack: AttackConfig, rng_seed: int | Sequence[int]) -> NodeStates:
    if states.infected_nodes():
        raise ConfigError("seeding requires every node to be safe")
    plan = plan_attack(states.n, attack, rng_seed)
    for v in plan.seeds:
        states.infect(v, attack.injection_time)
    return states


def propagate_on_receive(states: NodeStates, receiver: int, sender_infected: bool, time: float) -> NodeStates:
    """Infect a safe receiver of a contaminated packet; infected nodes never change."""
    if sender_infected:
        states.infect(receiver, time)
    return states


def inject_anomalous_flows(
    states: NodeStates, attack: AttackConfig, targets: Sequence[int], stop: float
) -> list[Flow]:
    """Flooding flows of the currently infected nodes, each towards its own target.

    The aggregate ``anomaly_rate`` is split evenly over the senders, so a
    single infected node floods at the full rate.
    """
    senders = [v for v in states.infected_nodes() if targets[v] >= 0]
    if not senders:
        return []
    rate = attack.anomaly_rate / len(senders)
    return [
        Flow(ANOMALY_FLOW_BASE + v, v, int(targets[v]), rate, attack.gibberish_packet_size,
             float(states.infection_time[v]), stop, anomalous=True)
        for v in senders
    ]


def replay_infection(trace: Iterable[TraceRecord], plan: AttackPlan, n: int) -> NodeStates:
    """Recompute infection times from a trace by applying :func:`propagate_on_receive`."""
    states = NodeStates(n)
    seeded = False
    contaminated: dict[int, bool] = {}
    for r in trace:
        if not seeded and r.time >= plan.injection_time:
            for v in plan.seeds:
                states.infect(v, plan.injection_time)
            seeded = True
        if r.event is Event.SEND:
            contaminated[r.packet_id] = states.is_infected(r.node)
        elif r.event in (Event.FORWARD, Event.RECEIVE):
            propagate_on_receive(states, r.node, contaminated[r.packet_id], r.time)
            contaminated[r.packet_id] = contaminated[r.packet_id] or states.is_infected(r.node)
    if not seeded:
        for v in plan.seeds:
            states.infect(v, plan.injection_time)
    return states


def write_infection_log(infection_time: np.ndarray | NodeStates, path: str | Path) -> None:
    """CSV ``node,infection_time``; safe nodes have an empty time."""
    times = infection_time.infection_time if isinstance(infection_time, NodeStates) else infection_time
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["node", "infection_time"])
        for v, t in enumerate(times):
            writer.writerow([v, f"{t:.6f}" if math.isfinite(t) else ""])
