import pytest

from icad import __version__
from icad.cli import main

SMALL = """
n = 30
side = 40
sim_time = 70
t_train = 20
injection_time = 30
replications = 3
flow_count = 8
anomaly_rates = 2e6
central_fractions = 0.2
"""


@pytest.fixture
def cfg_file(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text(SMALL)
    return p


def test_run(cfg_file, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg_file), "--out", str(out), "--replications", "1", "--seed", "4"]) == 0
    assert sorted(p.name for p in out.iterdir()) == [
        "centrality.csv", "config.txt", "curves_median.csv", "curves_r0.csv", "summary.txt"
    ]
    echo = (out / "config.txt").read_text()
    assert "replications = 1" in echo and "rng_seed = 4" in echo
    assert "1 of 1 replications succeeded" in capsys.readouterr().out


def test_run_config_error(tmp_path, capsys):
    p = tmp_path / "bad.cfg"
    p.write_text("unknown_key = 3\n")
    assert main(["run", "--config", str(p), "--out", str(tmp_path / "o")]) == 1
    assert "unknown key" in capsys.readouterr().err


def test_run_missing_config(tmp_path):
    assert main(["run", "--config", str(tmp_path / "none.cfg"), "--out", str(tmp_path / "o")]) == 3


def test_run_unwritable_output(cfg_file, tmp_path):
    blocker = tmp_path / "f"
    blocker.write_text("")
    assert main(["run", "--config", str(cfg_file), "--out", str(blocker / "x"), "--replications", "1"]) == 3


def test_runtime_error_exit_code(tmp_path):
    p = tmp_path / "sparse.cfg"
    p.write_text(SMALL + "radio_range = 0.01\n")
    assert main(["run", "--config", str(p), "--out", str(tmp_path / "o")]) == 2


def test_centrality(tmp_path, capsys):
    g = tmp_path / "g.txt"
    g.write_text("n 3\ne 0 1 1\ne 1 2 1\n")
    assert main(["centrality", "--graph", str(g), "--measure", "information_exact"]) == 0
    assert capsys.readouterr().out.splitlines() == [
        "node,measure,score,rank",
        "0,information_exact,1.0,2",
        "1,information_exact,1.5,1",
        "2,information_exact,1.0,3",
    ]


def test_centrality_bad_measure(tmp_path):
    g = tmp_path / "g.txt"
    g.write_text("n 2\ne 0 1 1\n")
    with pytest.raises(SystemExit) as exc:
        main(["centrality", "--graph", str(g), "--measure", "pagerank"])
    assert exc.value.code == 1


def test_centrality_disconnected_is_runtime_error(tmp_path):
    g = tmp_path / "g.txt"
    g.write_text("n 3\ne 0 1 1\n")
    assert main(["centrality", "--graph", str(g), "--measure", "information_exact"]) == 2


def test_import(tmp_path, capsys):
    src = tmp_path / "t.tr"
    src.write_text("s 0.500000 _3_ AGT --- 12 cbr 512\n\nr 0.512000 _5_ AGT --- 12 cbr 512\n")
    dst = tmp_path / "t.csv"
    assert main(["import", "--trace", str(src), "--out", str(dst)]) == 0
    assert dst.read_text().splitlines() == [
        "event,time,node,packet_id,size,flow_id,origin_time",
        "send,0.500000,3,12,512,-1,0.500000",
        "receive,0.512000,5,12,512,-1,0.500000",
    ]
    assert "1 lines skipped" in capsys.readouterr().err


def test_import_garbage(tmp_path):
    src = tmp_path / "t.tr"
    src.write_text("nonsense\nmore\n")
    assert main(["import", "--trace", str(src), "--out", str(tmp_path / "o.csv")]) == 2


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert __version__ in capsys.readouterr().out


def test_no_command():
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 1
