import csv
import re

import pytest

from manetsim import ScenarioConfig, simulate
from manetsim.cli import main
from manetsim.metrics import MetricsReport
from manetsim.plot import PlotError, plot
from manetsim.sweep import SweepError, SweepSpec, parse_param, resolve_param, run_sweep

SMALL = ScenarioConfig(n_nodes=8, duration=10.0)


def _rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_cell_arithmetic(tmp_path):
    spec = SweepSpec(SMALL, "nodes", ("6", "8", "10", "12"), seeds=3)
    agg = run_sweep(spec, tmp_path, write_traces=False)
    assert len(_rows(tmp_path / "runs.csv")) == 12
    rows = _rows(agg)
    assert [r["value"] for r in rows] == ["6", "8", "10", "12"]
    assert all(r["runs"] == "3" for r in rows)
    assert not (tmp_path / "runs").exists()


def test_single_seed_mean_equals_run(tmp_path):
    spec = SweepSpec(SMALL, "speed", (2.0,), seeds=1)
    rows = _rows(run_sweep(spec, tmp_path))
    rep = simulate(SMALL.with_(speed_max=2.0)).report
    (r,) = rows
    assert float(r["R_mean"]) == rep.roh
    assert float(r["PDR_mean"]) == rep.pdr
    assert float(r["delay_s_mean"]) == rep.delay_s
    assert r["R_std"] == "NA"
    trace = tmp_path / "runs" / "AODV" / "speed_max=2.0" / "seed1" / "trace.tr"
    assert trace.read_text() == simulate(SMALL.with_(speed_max=2.0)).trace_text()


def test_rerun_is_byte_identical(tmp_path):
    spec = SweepSpec(SMALL, "nodes", (6, 8), seeds=2, protocols=("AODV", "TORA"))
    a = open(run_sweep(spec, tmp_path / "a", write_traces=False)).read()
    b = open(run_sweep(spec, tmp_path / "b", write_traces=False)).read()
    assert a == b


def test_cell_isolation(tmp_path):
    spec = SweepSpec(SMALL, "nodes", (6, 8), seeds=2, protocols=("DSR",))
    run_sweep(spec, tmp_path, write_traces=False)
    rows = open(tmp_path / "runs.csv").read().splitlines()[1:]
    alone = simulate(SMALL.with_(n_nodes=8, seed=2, protocol="DSR")).report.csv_row()
    assert f"n_nodes,8,{alone}" in rows


def test_parallel_matches_serial(tmp_path):
    spec = SweepSpec(SMALL, "nodes", (6, 8), seeds=2)
    a = open(run_sweep(spec, tmp_path / "a", write_traces=False)).read()
    b = open(run_sweep(spec, tmp_path / "b", write_traces=False, jobs=2)).read()
    assert a == b


def test_failing_cell_is_named(tmp_path):
    spec = SweepSpec(SMALL, "nodes", (6,), seeds=1)
    (tmp_path / "runs").write_text("a file where a directory must go")
    with pytest.raises(SweepError) as ei:
        run_sweep(spec, tmp_path)
    assert ei.value.cell == ("AODV", "n_nodes", 6, 1)
    assert "n_nodes=6" in str(ei.value)


def test_spec_validation():
    with pytest.raises(ValueError):
        SweepSpec(SMALL, "nodes", (), seeds=1)
    with pytest.raises(ValueError):
        SweepSpec(SMALL, "nodes", (4,), seeds=0)
    with pytest.raises(ValueError, match="valid"):
        resolve_param("nodez")
    with pytest.raises(ValueError):
        resolve_param("protocol")
    with pytest.raises(ValueError):
        SweepSpec(SMALL, "nodes", ("1",))
    assert parse_param("nodes=20,40") == ("nodes", ["20", "40"])
    with pytest.raises(ValueError):
        parse_param("nodes")


@pytest.fixture(scope="module")
def grid_csv(tmp_path_factory):
    out = tmp_path_factory.mktemp("grid")
    spec = SweepSpec(SMALL, "nodes", (6, 8, 10, 12), seeds=1,
                     protocols=("AODV", "DSR", "DSDV", "TORA"))
    return run_sweep(spec, out, write_traces=False)


def test_plot_structure(grid_csv, tmp_path):
    svg = open(plot(grid_csv, "pdr", tmp_path / "pdr.svg")).read()
    lines = re.findall(r'<polyline class="series" data-protocol="([^"]+)"[^>]*points="([^"]+)"',
                       svg)
    assert [p for p, _ in lines] == ["AODV", "DSR", "DSDV", "TORA"]
    assert all(len(pts.split()) == 4 for _, pts in lines)
    assert "Number of nodes" in svg and "Packet delivery fraction" in svg


def test_plot_deterministic(grid_csv, tmp_path):
    a = open(plot(grid_csv, "delay", tmp_path / "a.svg")).read()
    b = open(plot(grid_csv, "delay", tmp_path / "b.svg")).read()
    assert a == b and "(s)" in a


def test_plot_errors(grid_csv, tmp_path):
    with pytest.raises(PlotError, match="pdr, delay, roh, throughput"):
        plot(grid_csv, "latency", tmp_path / "x.svg")
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    with pytest.raises(PlotError, match="empty"):
        plot(empty, "pdr", tmp_path / "x.svg")
    one = tmp_path / "one.csv"
    text = open(grid_csv).read().splitlines()
    one.write_text("\n".join([text[0]] + [t for t in text[1:] if ",AODV," in t]) + "\n")
    with pytest.raises(PlotError, match="2 protocols"):
        plot(one, "pdr", tmp_path / "x.svg")


def test_cli_end_to_end(tmp_path, capsys):
    scen = tmp_path / "s.txt"
    scen.write_text("nodes = 8\nduration = 10\n")
    assert main(["simulate", "--scenario", str(scen), "--seed", "2",
                 "--out", str(tmp_path / "run"), "--mobility-trace"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert (tmp_path / "run" / "mobility.csv").exists()
    assert main(["analyze", "--trace", str(tmp_path / "run" / "trace.tr")]) == 0
    again = capsys.readouterr().out.splitlines()
    # summation order differs, so delay may differ in the last bits
    assert MetricsReport.from_csv_row(again[1]).matches(MetricsReport.from_csv_row(out[1]))

    assert main(["sweep", "--scenario", str(scen), "--param", "nodes=6,8", "--seeds", "1",
                 "--protocols", "AODV,DSR", "--out", str(tmp_path / "sw")]) == 0
    capsys.readouterr()
    assert main(["plot", "--csv", str(tmp_path / "sw" / "aggregate.csv"), "--metric", "roh",
                 "--out", str(tmp_path / "roh.svg")]) == 0
    assert (tmp_path / "roh.svg").read_text().startswith("<svg")


def test_cli_errors(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("nodes = 1\n")
    assert main(["simulate", "--scenario", str(bad), "--out", str(tmp_path / "o")]) == 2
    assert "n_nodes" in capsys.readouterr().err
    assert main(["analyze", "--trace", str(tmp_path / "missing.tr")]) == 2
    with pytest.raises(SystemExit):
        main(["frobnicate"])
