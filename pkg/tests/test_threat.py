import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import unit_path
from icad.config import SimConfig
from icad.errors import ConfigError
from icad.netsim import ANOMALY_FLOW_BASE, Event, Flow, Topology, build_routing, generate_topology, random_flows
from icad.netsim import run_simulation
from icad.threat import (
    AttackConfig,
    AttackPlan,
    NodeState,
    NodeStates,
    draw_targets,
    inject_anomalous_flows,
    plan_attack,
    propagate_on_receive,
    replay_infection,
    seed_attack,
    write_infection_log,
)


def attack(t=2, rate=10e6, when=100.0):
    return AttackConfig(t, when, rate, 512)


class TestSeeding:
    def test_two_of_two_hundred_deterministic(self):
        a = seed_attack(NodeStates(200), attack(2), 7)
        b = seed_attack(NodeStates(200), attack(2), 7)
        assert len(a.infected_nodes()) == 2
        assert a.infected_nodes() == b.infected_nodes()
        assert np.all(a.infection_time[a.infected_nodes()] == 100.0)

    def test_all_nodes(self):
        s = seed_attack(NodeStates(5), attack(5), 0)
        assert s.infected_nodes() == [0, 1, 2, 3, 4]

    def test_zero_seeds_rejected(self):
        with pytest.raises(ConfigError):
            attack(0)

    def test_too_many_seeds_rejected(self):
        with pytest.raises(ConfigError):
            seed_attack(NodeStates(3), attack(4), 0)

    def test_requires_clean_start(self):
        s = NodeStates(4)
        s.infect(1, 0.0)
        with pytest.raises(ConfigError):
            seed_attack(s, attack(1), 0)

    def test_plan_matches_seeding(self):
        plan = plan_attack(50, attack(3), 11)
        states = seed_attack(NodeStates(50), attack(3), 11)
        assert list(plan.seeds) == states.infected_nodes()


class TestPropagation:
    def test_relayed_by_infected_forwarder(self):
        s = NodeStates(3)
        s.infect(0, 1.0)
        propagate_on_receive(s, 2, True, 1.5)
        assert s.state(2) is NodeState.INFECTED
        assert s.infection_time[2] == 1.5

    def test_absorbing(self):
        s = NodeStates(2)
        s.infect(1, 1.0)
        propagate_on_receive(s, 1, True, 5.0)
        propagate_on_receive(s, 1, False, 6.0)
        assert s.infection_time[1] == 1.0

    def test_clean_packets_do_not_infect(self):
        s = NodeStates(2)
        propagate_on_receive(s, 1, False, 1.0)
        assert s.state(1) is NodeState.SAFE


class TestAnomalousFlows:
    def test_single_sender_gap(self):
        s = NodeStates(4)
        s.infect(2, 100.0)
        (f,) = inject_anomalous_flows(s, attack(rate=10e6), (1, 2, 0, 0), 900.0)
        assert f.gap == pytest.approx(0.4096e-3, rel=1e-12)
        assert (f.flow_id, f.source, f.destination, f.start, f.anomalous) == (ANOMALY_FLOW_BASE + 2, 2, 0, 100.0, True)

    def test_gap_scales_with_rate(self):
        s = NodeStates(4)
        s.infect(2, 100.0)
        (f10,) = inject_anomalous_flows(s, attack(rate=10e6), (1, 2, 0, 0), 900.0)
        (f50,) = inject_anomalous_flows(s, attack(rate=50e6), (1, 2, 0, 0), 900.0)
        assert f10.gap / f50.gap == pytest.approx(5.0, rel=1e-12)

    def test_rate_is_shared(self):
        s = NodeStates(4)
        for v in (0, 1):
            s.infect(v, 100.0)
        flows = inject_anomalous_flows(s, attack(rate=10e6), (1, 2, 0, 0), 900.0)
        assert [f.rate for f in flows] == [5e6, 5e6]

    def test_nothing_infected(self):
        assert inject_anomalous_flows(NodeStates(4), attack(), (1, 2, 0, 0), 900.0) == []

    @given(st.integers(2, 60), st.integers(0, 2**32 - 1))
    def test_targets_never_self(self, n, seed):
        t = draw_targets(n, np.random.default_rng(seed))
        assert len(t) == n
        assert all(0 <= d < n and d != v for v, d in enumerate(t))


def line_config(**kw):
    base = dict(n=5, sim_time=30.0, t_train=10.0, injection_time=15.0, t_seeds=1, replications=1)
    base.update(kw)
    return SimConfig(**base)


class TestEngineInfection:
    def test_flood_rate_in_engine(self):
        cfg = line_config(n=2, sim_time=16.0)
        topo = Topology.from_graph(unit_path(2))
        plan = AttackPlan((0,), (1, -1), 15.0, 10e6, 512)
        res = run_simulation(cfg, topo, build_routing(topo), [], plan)
        sends = [r for r in res.trace if r.event is Event.SEND]
        # sends at 15 + k * 0.4096 ms for all k with time < 16
        assert len(sends) == math.floor(1.0 / 0.4096e-3) + 1
        assert all(r.flow_id == ANOMALY_FLOW_BASE for r in sends)
        assert res.infection_time[1] == pytest.approx(15.0 + 512 * 8 / cfg.link_rate + cfg.prop_delay)

    def test_chain_along_a_line(self):
        # no flooding at all: infection rides the ordinary 0 -> 4 flow only
        cfg = line_config()
        topo = Topology.from_graph(unit_path(5))
        plan = AttackPlan((0,), (-1,) * 5, 15.0, 10e6, 512)
        flow = Flow(0, 0, 4, 4096.0, 512, 0.0, 30.0)
        res = run_simulation(cfg, topo, build_routing(topo), [flow], plan)
        t = res.infection_time
        assert t[0] == 15.0
        assert np.all(np.isfinite(t))
        assert np.all(np.diff(t) > 0)

    def test_upstream_nodes_stay_safe(self):
        cfg = line_config()
        topo = Topology.from_graph(unit_path(5))
        plan = AttackPlan((2,), (-1,) * 5, 15.0, 10e6, 512)
        res = run_simulation(cfg, topo, build_routing(topo), [Flow(0, 0, 4, 4096.0, 512, 0.0, 30.0)], plan)
        assert np.isinf(res.infection_time[:2]).all()
        assert np.isfinite(res.infection_time[2:]).all()

    def test_replay_matches_engine(self):
        cfg = SimConfig(n=30, side=40, sim_time=40.0, t_train=15.0, injection_time=20.0, flow_count=8)
        topo = generate_topology(cfg.n, cfg.side, cfg.radio_range, 5)
        flows = random_flows(cfg.n, cfg.flow_count, cfg.flow_rate, cfg.packet_size, cfg.sim_time,
                             np.random.default_rng(5))
        plan = plan_attack(cfg.n, AttackConfig(cfg.t_seeds, cfg.injection_time, 1e6, 512), 5)
        res = run_simulation(cfg, topo, build_routing(topo), flows, plan)
        replayed = replay_infection(res.trace, plan, cfg.n)
        assert np.array_equal(replayed.infection_time, res.infection_time)
        assert np.all(res.infection_time[np.isfinite(res.infection_time)] >= cfg.injection_time)
        assert len(replayed.infected_nodes()) > cfg.t_seeds

    def test_anomalous_packets_only_differ_in_tag_and_size(self):
        cfg = line_config(n=3, sim_time=16.0)
        topo = Topology.from_graph(unit_path(3))
        plan = AttackPlan((0,), (2, -1, -1), 15.0, 1e6, 256)
        res = run_simulation(cfg, topo, build_routing(topo), [Flow(0, 0, 2, 4096.0, 512, 0.0, 16.0)], plan)
        bad = res.trace.flow_id >= ANOMALY_FLOW_BASE
        assert set(res.trace.size[bad].tolist()) == {256}
        assert set(res.trace.size[~bad].tolist()) == {512}
        assert res.conserved()


def test_infection_log(tmp_path):
    s = NodeStates(3)
    s.infect(1, 100.25)
    write_infection_log(s, tmp_path / "inf.csv")
    assert (tmp_path / "inf.csv").read_text() == "node,infection_time\n0,\n1,100.250000\n2,\n"
