"""Property-based checks over randomly drawn small scenarios."""

import math

from hypothesis import HealthCheck, given, settings, strategies as st

from manetsim import ScenarioConfig, Simulation
from manetsim.config import dump_scenario, parse_scenario
from manetsim.metrics import compute_avg_e2e_delay, compute_pdr
from manetsim.mobility import Area, make_mobility

PROTOCOLS = ["AODV", "DSR", "DSDV", "TORA", "MRP(AODV+DSR)", "MRP(TORA+DSR)", "MRP(DSDV+AODV)"]
MODELS = ["rpgm", "random_waypoint", "random_direction"]

scenarios = st.builds(
    ScenarioConfig,
    n_nodes=st.integers(2, 14),
    protocol=st.sampled_from(PROTOCOLS),
    mobility=st.sampled_from(MODELS),
    seed=st.integers(0, 2**32),
    duration=st.floats(1.0, 15.0),
    speed_max=st.floats(0.5, 20.0),
    rate=st.sampled_from([1.0, 4.0, 8.0, 16.0]),
    queue_len=st.integers(1, 50),
    mrp_policy=st.sampled_from(["adaptive", "forced", "off"]),
    mrp_epoch=st.sampled_from([1.0, 2.5, 5.0]),
)

SETTINGS = settings(max_examples=40, deadline=None,
                    suppress_health_check=[HealthCheck.too_slow])


@SETTINGS
@given(scenarios)
def test_every_data_packet_is_accounted_for(cfg):
    # delivered, dropped with a reason, or still in flight at the horizon
    sim = Simulation(cfg, trace_mac=False)
    res = sim.run()
    sent = {e[4] for e in res.trace if e[1] == "SEND" and e[2] == "AGT" and e[5] == "CBR"}
    delivered = {e[4] for e in res.trace if e[1] == "RECV" and e[2] == "AGT"}
    dropped = {e[4] for e in res.trace if e[1] == "DROP" and e[5] == "CBR" and e[9] != "DUP"}
    live = sim.in_flight()
    assert delivered <= sent
    assert not (delivered & live)
    assert sent == delivered | dropped | live
    r = res.report
    assert 0 <= r.pkt_r <= r.pkt_s
    assert r.pdr is None or 0.0 <= r.pdr <= 1.0
    assert r.delay_s is None or r.delay_s >= 0.0


@SETTINGS
@given(scenarios)
def test_switches_alternate_and_keep_dwell(cfg):
    res = Simulation(cfg, trace_mac=False).run()
    if not cfg.is_mrp or cfg.mrp_policy == "off":
        assert res.switches == []
        return
    for a, b in zip(res.switches, res.switches[1:]):
        assert a.dst == b.src
        assert b.at - a.at >= cfg.mrp_dwell * cfg.mrp_epoch - 1e-9


@settings(max_examples=60, deadline=None)
@given(scenarios)
def test_scenario_round_trip(cfg):
    assert parse_scenario(dump_scenario(cfg)) == cfg


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(MODELS), st.integers(1, 30), st.integers(0, 2**32),
       st.floats(0.0, 5.0), st.floats(50.0, 2000.0), st.floats(50.0, 2000.0))
def test_mobility_stays_in_area(model, n, seed, pause, w, h):
    m = make_mobility(model, n, Area(w, h), (0.5, 5.0), pause, seed)
    for k in range(300):
        m.step(k * 0.1, 0.1)
        assert m.pos[:, 0].min() >= 0.0 and m.pos[:, 0].max() <= w
        assert m.pos[:, 1].min() >= 0.0 and m.pos[:, 1].max() <= h


@given(st.lists(st.tuples(st.floats(0, 100), st.floats(0, 10)), min_size=1, max_size=50))
def test_delay_is_mean_of_differences(pairs):
    recs = [(s, s + d) for s, d in pairs]
    got = compute_avg_e2e_delay(recs)
    assert math.isclose(got, sum(r - s for s, r in recs) / len(recs), abs_tol=1e-9)


@given(st.integers(1, 10**6), st.data())
def test_pdr_bounds(sent, data):
    got = data.draw(st.integers(0, sent))
    assert 0.0 <= compute_pdr(sent, got) <= 1.0
