import pytest

from manetsim import ScenarioConfig, Simulation
from manetsim.rng import RngStream
from manetsim.traffic import Flow, default_flows


def test_count_includes_start_and_stop():
    assert Flow(0, 1).count() == 801
    assert Flow(0, 1, rate=4, start=2.0, stop=3.0).count() == 5
    assert Flow(0, 1, rate=3, start=0.0, stop=1.0).count() == 4


def test_flow_validation():
    with pytest.raises(ValueError):
        Flow(1, 1)
    with pytest.raises(ValueError):
        Flow(0, 1, rate=0)
    with pytest.raises(ValueError):
        Flow(0, 1, start=5, stop=4)


def test_default_flow_selection():
    flows = default_flows(20, RngStream(1, "traffic"))
    assert len(flows) == 5
    ends = [e for f in flows for e in (f.src, f.dst)]
    assert len(set(ends)) == 10
    assert default_flows(20, RngStream(1, "traffic")) == flows
    assert len(default_flows(3, RngStream(1, "traffic"))) == 1
    assert default_flows(10, RngStream(1, "t"), n_flows=0) == []


def test_single_flow_generates_801_sends():
    cfg = ScenarioConfig(n_nodes=2, mobility="static", flows=())
    sim = Simulation(cfg, positions=[[0, 0], [100, 0]], flows=[Flow(0, 1)], trace_mac=False)
    res = sim.run()
    sends = [e for e in res.trace if e[1] == "SEND" and e[2] == "AGT" and e[5] == "CBR"]
    assert len(sends) == 801
    assert sends[0][0] == 0.0 and sends[-1][0] == 100.0
    # the t=100 packet is still on the air when the horizon hits
    assert res.report.pkt_r == 800
    assert len(sim.in_flight()) == 1


def test_delivery_csv(tmp_path):
    cfg = ScenarioConfig(n_nodes=2, mobility="static", duration=1.0)
    sim = Simulation(cfg, positions=[[0, 0], [100, 0]], flows=[Flow(0, 1, rate=2, stop=1.0)])
    res = sim.run()
    paths = sim.write_outputs(res, tmp_path)
    lines = open(paths["deliveries.csv"]).read().splitlines()
    assert lines[0] == "packet_id,flow,src,dst,sent,received,delay"
    assert len(lines) == 4
