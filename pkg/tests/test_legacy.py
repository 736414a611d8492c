import numpy as np
import pytest

from conftest import unit_path
from icad.config import SimConfig
from icad.detector import aggregate_intervals
from icad.errors import TraceFormatError
from icad.legacy import import_legacy_trace, parse_legacy_lines
from icad.netsim import Event, Flow, Topology, build_routing, run_simulation

LETTER = {Event.SEND: "s", Event.RECEIVE: "r", Event.DROP: "d", Event.FORWARD: "f"}
LAYER = {Event.SEND: "AGT", Event.RECEIVE: "AGT", Event.DROP: "MAC", Event.FORWARD: "RTR"}


def test_documented_line():
    out = parse_legacy_lines(["r 0.512000 _5_ AGT --- 12 cbr 512"])
    (r,) = out.records
    assert (r.event, r.time, r.node, r.packet_id, r.size) == (Event.RECEIVE, 0.512, 5, 12, 512)
    assert r.origin_time == 0.512
    assert out.missing_origin == 1


def test_origin_from_earliest_send():
    out = parse_legacy_lines([
        "s 1.0 _3_ AGT --- 7 cbr 512",
        "f 1.01 _4_ RTR --- 7 cbr 512",
        "s 0.5 _3_ AGT --- 7 cbr 512",
        "d 1.02 _4_ MAC --- 7 cbr 512",
    ])
    assert [r.origin_time for r in out.records] == [0.5] * 4
    assert [r.event for r in out.records] == [Event.SEND, Event.FORWARD, Event.SEND, Event.DROP]
    assert out.missing_origin == 0


def test_blank_and_comment_lines_skipped():
    out = parse_legacy_lines(["s 0.1 _0_ AGT --- 1 cbr 512", "", "# note", "r 0.2 _1_ AGT --- 1 cbr 512"])
    assert (out.lines, out.skipped, len(out.records)) == (4, 2, 2)


@pytest.mark.parametrize("line", [
    "x 0.1 _0_ AGT --- 1 cbr 512", "s abc _0_ AGT --- 1 cbr 512", "s 0.1 0 AGT --- 1 cbr 512",
    "s 0.1 _0_ APP --- 1 cbr 512", "s 0.1 _0_ AGT END 1 cbr 512", "s 0.1 _0_ AGT --- 1 cbr",
])
def test_malformed_lines_skipped(line):
    out = parse_legacy_lines(["s 0.1 _0_ AGT --- 1 cbr 512", "r 0.2 _1_ AGT --- 1 cbr 512", line])
    assert out.skipped == 1 and len(out.records) == 2


def test_mostly_garbage_is_a_format_error():
    with pytest.raises(TraceFormatError):
        parse_legacy_lines(["s 0.1 _0_ AGT --- 1 cbr 512", "junk", "more junk"])


def test_missing_file():
    with pytest.raises(OSError):
        import_legacy_trace("/nonexistent/trace.tr")


def test_import_then_aggregate_matches_native(tmp_path):
    cfg = SimConfig(n=4, sim_time=30.0, t_train=10.0, injection_time=20.0, t_seeds=1)
    topo = Topology.from_graph(unit_path(4))
    flows = [Flow(0, 0, 3, 512 * 8 * 20, 512, 0.0, 30.0), Flow(1, 2, 0, 512 * 8 * 7, 512, 0.01, 30.0)]
    native = run_simulation(cfg, topo, build_routing(topo), flows).trace
    native = type(native)(*(getattr(native, c)[:1000] for c in native.__slots__))
    assert len(native) == 1000
    path = tmp_path / "legacy.tr"
    path.write_text("".join(
        f"{LETTER[r.event]} {r.time:.9f} _{r.node}_ {LAYER[r.event]} --- {r.packet_id} cbr {r.size}\n" for r in native
    ))
    imported = import_legacy_trace(path)
    assert imported.skipped == 0 and len(imported.records) == 1000
    a = aggregate_intervals(imported.trace, cfg.delta, cfg.n, cfg.sim_time)
    b = aggregate_intervals(native, cfg.delta, cfg.n, cfg.sim_time)
    assert np.array_equal(a.volumes, b.volumes)
