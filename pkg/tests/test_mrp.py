import pytest

from manetsim import ScenarioConfig, Simulation
from manetsim.metrics import MetricsWindow
from manetsim.mrp import (
    STAY, SWITCH, MrpConfig, mrp_evaluate, mrp_standby_estimate, window_score,
)

CFG = MrpConfig()


def _window(pdr, delay=0.01, rtr=0, pkt_s=100, proto="AODV"):
    r = round(pdr * pkt_s)
    return MetricsWindow(0.0, 5.0, pkt_s, r, delay * r, rtr, {proto: rtr})


def test_config_validation():
    for bad in ({"pair": ("AODV", "AODV")}, {"margin": -0.1}, {"min_dwell": 0},
                {"epoch": 0.0}, {"policy": "sometimes"}):
        with pytest.raises(ValueError):
            MrpConfig(**bad)
    assert MrpConfig().name == "MRP(AODV+DSR)"


def test_identical_scores_stay():
    w = _window(0.8)
    assert mrp_evaluate(w, "AODV", CFG, window_score(w, "AODV", CFG), 5) == STAY


def test_clearly_better_standby_switches():
    w = _window(0.4, delay=0.5)
    standby = window_score(_window(0.9, delay=0.5), "DSR", CFG)
    assert mrp_evaluate(w, "AODV", CFG, standby, 2) == SWITCH


def test_dwell_blocks_switch():
    w = _window(0.4, delay=0.5)
    standby = window_score(_window(0.9, delay=0.5), "DSR", CFG)
    assert mrp_evaluate(w, "AODV", CFG, standby, 1) == STAY


def test_no_traffic_stays():
    assert mrp_evaluate(MetricsWindow(0.0, 5.0), "AODV", CFG, 1.0, 10) == STAY


def test_margin_is_relative():
    w = _window(0.5)
    s = window_score(w, "AODV", CFG)
    assert mrp_evaluate(w, "AODV", CFG, s * 1.09, 3) == STAY
    assert mrp_evaluate(w, "AODV", CFG, s * 1.11, 3) == SWITCH


def test_off_and_forced_policies():
    w = _window(0.4)
    assert mrp_evaluate(w, "AODV", MrpConfig(policy="off"), 1.0, 9) == STAY
    forced = MrpConfig(policy="forced", min_dwell=1)
    assert mrp_evaluate(w, "AODV", forced, 0.0, 1) == SWITCH


def test_coverage_terms():
    full = mrp_standby_estimate(1.0, 0, 100, CFG)
    none = mrp_standby_estimate(0.0, 0, 100, CFG)
    assert full.coverage == 1.0 and full.memory_term is None
    assert none.coverage == 0.0
    assert full.score == pytest.approx(1.0)
    assert none.score == pytest.approx(CFG.w_roh)
    with pytest.raises(ValueError):
        mrp_standby_estimate(1.5, 0, 100, CFG)


def test_memory_term_decays():
    est = mrp_standby_estimate(0.0, 0, 100, CFG, last_score=0.8, epochs_ago=1)
    assert est.memory_term == pytest.approx(0.4)
    assert est.score == pytest.approx(0.4 + 0.5 * CFG.w_roh)


def test_standby_overhead_cannot_beat_active():
    est = mrp_standby_estimate(1.0, 0, 100, CFG, active_roh_term=0.5)
    assert est.roh_term == 0.5


def _mrp(policy, **kw):
    cfg = ScenarioConfig(n_nodes=16, duration=40.0, protocol="MRP(AODV+DSR)",
                         mrp_policy=policy, seed=3, **kw)
    sim = Simulation(cfg, trace_mac=False)
    return sim, sim.run()


def test_forced_alternation_every_epoch():
    sim, res = _mrp("forced", mrp_dwell=1)
    times = [s.at for s in res.switches]
    assert times == [5.0 * k for k in range(1, 9)]
    for a, b in zip(res.switches, res.switches[1:]):
        assert a.dst == b.src and a.src == b.dst


def test_handover_at_fifty_seconds():
    cfg = ScenarioConfig(n_nodes=16, duration=100.0, protocol="MRP(AODV+DSR)",
                         mrp_policy="forced", mrp_dwell=10, seed=3)
    sim = Simulation(cfg, trace_mac=False)
    carried = []
    route = sim.route_data

    def spy(src, pkt):
        route(src, pkt)
        carried.append((sim.engine.now, pkt.proto))

    sim.route_data = spy
    res = sim.run()
    assert [s.at for s in res.switches] == [50.0, 100.0]
    assert {p for t, p in carried if t < 50.0} == {"AODV"}
    assert {p for t, p in carried if 50.0 < t < 100.0} == {"DSR"}


def test_switches_respect_dwell_and_alternate():
    for seed in range(1, 6):
        cfg = ScenarioConfig(n_nodes=20, duration=100.0, protocol="MRP(DSDV+AODV)", seed=seed)
        res = Simulation(cfg, trace_mac=False).run()
        gaps = [b.at - a.at for a, b in zip(res.switches, res.switches[1:])]
        assert all(g >= cfg.mrp_dwell * cfg.mrp_epoch - 1e-9 for g in gaps)
        for a, b in zip(res.switches, res.switches[1:]):
            assert a.dst == b.src


def test_switch_csv(tmp_path):
    sim, res = _mrp("forced", mrp_dwell=2)
    paths = sim.write_outputs(res, tmp_path)
    lines = open(paths["switches.csv"]).read().splitlines()
    assert lines[0] == "time,from,to,trigger"
    assert len(lines) == 1 + len(res.switches)
    assert lines[1].startswith("10.0,AODV,DSR,forced")


def test_manual_switch_only_to_standby():
    sim, _ = _mrp("off")
    with pytest.raises(ValueError):
        sim.supervisor.mrp_switch("AODV")
