import io

import pytest

from manetsim import ScenarioConfig, Simulation, analyze_trace
from manetsim.metrics import (
    MetricsReport, TraceFormatError, compute_avg_e2e_delay, compute_pdr, compute_roh,
    compute_throughput, read_trace, report_from_trace, windowed_metrics, write_trace,
)

from oracles import HAND_TRACE, hand_delay, oracle_metrics


def test_delay_fixture():
    pairs = [(1.0, 1.2), (2.0, 2.5)]
    assert compute_avg_e2e_delay(pairs) == pytest.approx(0.35, abs=1e-12)
    assert hand_delay(pairs) == pytest.approx(0.35, abs=1e-12)
    assert compute_avg_e2e_delay([(1.0, None)]) is None
    with pytest.raises(ValueError):
        compute_avg_e2e_delay([(2.0, 1.0)])


def test_pdr():
    assert compute_pdr(1000, 950) == 0.95
    assert compute_pdr(0, 0) is None
    with pytest.raises(ValueError):
        compute_pdr(1, 2)
    with pytest.raises(ValueError):
        compute_pdr(-1, 0)


def test_throughput():
    assert compute_throughput([(512, 1.0), (512, None)], 8.0) == 512.0
    with pytest.raises(ValueError):
        compute_throughput([], 0.0)


def test_hand_trace(tmp_path):
    p = tmp_path / "hand.tr"
    p.write_text(HAND_TRACE)
    rep = analyze_trace(p)
    assert (rep.roh, rep.pkt_s, rep.pkt_r, rep.pdr) == (3, 2, 1, 0.5)
    assert rep.delay_s == pytest.approx(0.5)
    assert rep.throughput_bps == 512 * 8 / 10.0
    _, events = read_trace(p)
    assert compute_roh(events) == 3


def test_truncated_line_reports_line_number(tmp_path):
    p = tmp_path / "bad.tr"
    lines = HAND_TRACE.splitlines()
    lines[3] = "1.1 FWD RTR 1 100"
    p.write_text("\n".join(lines))
    with pytest.raises(TraceFormatError) as ei:
        analyze_trace(p)
    assert ei.value.lineno == 4


@pytest.mark.parametrize("line,msg", [
    ("1.0 JUMP AGT 0 1 CBR 512 0 2", "action"),
    ("1.0 SEND PHY 0 1 CBR 512 0 2", "layer"),
    ("1.0 SEND AGT 0 1 CBR 512 0 2 IFQ", "reason"),
    ("nan SEND AGT 0 1 CBR 512 0 2", "time"),
    ("1.0 SEND AGT x 1 CBR 512 0 2", "x"),
])
def test_malformed_lines(tmp_path, line, msg):
    p = tmp_path / "t.tr"
    p.write_text(line + "\n")
    with pytest.raises(TraceFormatError, match=msg):
        read_trace(p)


def test_missing_duration(tmp_path):
    p = tmp_path / "t.tr"
    p.write_text(HAND_TRACE.split("\n", 1)[1])
    with pytest.raises(ValueError):
        analyze_trace(p)
    assert analyze_trace(p, duration=5.0).throughput_bps == 512 * 8 / 5.0


def test_csv_row_round_trip():
    rep = MetricsReport("s", 3, "AODV", 20, 5.0, 10, 100, 0, 0.0, None, 0.0)
    assert MetricsReport.from_csv_row(rep.csv_row()) == rep
    assert rep.csv_row().split(",")[9] == "NA"
    with pytest.raises(ValueError):
        MetricsReport("s", 1, "AODV", 2, 1.0, 0, 1, 2, 2.0, 0.0, 0.0)


@pytest.mark.parametrize("protocol", ["AODV", "DSR", "DSDV", "TORA", "MRP(AODV+DSR)"])
def test_engine_report_matches_independent_recount(tmp_path, protocol):
    cfg = ScenarioConfig(n_nodes=12, duration=20.0, protocol=protocol, seed=5)
    res = Simulation(cfg).run()
    text = res.trace_text()
    ref = oracle_metrics(text, 20.0)
    rep = res.report
    assert (rep.roh, rep.pkt_s, rep.pkt_r) == (ref["roh"], ref["pkt_s"], ref["pkt_r"])
    assert rep.pdr == pytest.approx(ref["pdr"], abs=1e-12)
    assert rep.delay_s == pytest.approx(ref["delay_s"], abs=1e-9)
    assert rep.throughput_bps == pytest.approx(ref["throughput_bps"])
    p = tmp_path / "t.tr"
    p.write_text(text)
    assert analyze_trace(p).matches(rep)


def test_standby_exclusion_follows_switches():
    cfg = ScenarioConfig(n_nodes=12, duration=30.0, protocol="MRP(AODV+DSR)",
                         mrp_policy="forced", mrp_count_standby=False, seed=2)
    sim = Simulation(cfg, trace_mac=False)
    res = sim.run()
    assert res.switches
    assert compute_roh(res.trace, "AODV") == res.report.roh == sim.roh_active
    assert compute_roh(res.trace) == sim.roh > sim.roh_active


def test_windows_partition_counts():
    cfg = ScenarioConfig(n_nodes=10, duration=20.0, seed=4)
    res = Simulation(cfg, trace_mac=False).run()
    wins = windowed_metrics(res.trace, 5.0, 20.0)
    assert len(wins) == 4
    assert sum(w.pkt_s for w in wins) == res.report.pkt_s
    assert sum(w.pkt_r for w in wins) == res.report.pkt_r
    assert sum(w.rtr for w in wins) == res.report.roh
    assert all(0.0 <= w.pdr <= 1.0 for w in wins if w.pdr is not None)
    with pytest.raises(ValueError):
        windowed_metrics([], 0.0, 1.0)


def test_report_from_trace_in_memory():
    rep = report_from_trace([
        (0.0, "SEND", "AGT", 0, 1, "CBR", 100, 0, 1, ""),
        (0.25, "RECV", "AGT", 1, 1, "CBR", 100, 0, 1, ""),
    ], 1.0)
    assert rep.delay_s == 0.25 and rep.throughput_bps == 800.0


def test_write_trace_header_and_reason():
    buf = io.StringIO()
    write_trace([(1.5, "DROP", "MAC", 3, 9, "CBR", 512, 0, 1, "IFQ")], buf, {"seed": 1})
    assert buf.getvalue() == "# seed=1\n1.5 DROP MAC 3 9 CBR 512 0 1 IFQ\n"
