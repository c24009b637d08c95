import pytest

from manetsim.config import (
    FlowSpec, ScenarioConfig, ScenarioError, dump_scenario, load_scenario, parse_protocol,
    parse_scenario,
)


def test_empty_file_gives_reference_defaults():
    c = parse_scenario("")
    assert c == ScenarioConfig()
    assert (c.n_nodes, c.width, c.height) == (20, 600.0, 600.0)
    assert (c.speed_min, c.speed_max, c.pause) == (0.5, 5.0, 0.0)
    assert c.mobility == "rpgm" and c.duration == 100.0
    assert (c.rate, c.payload, c.radio_range, c.queue_len) == (8.0, 512, 250.0, 50)


def test_overrides_keep_other_defaults():
    c = parse_scenario("# comment\nnodes = 80\n\nspeed_max=5.0  # trailing\n")
    assert c.n_nodes == 80 and c.speed_max == 5.0
    assert c.with_(n_nodes=20) == ScenarioConfig()


def test_invariant_violation_names_field():
    with pytest.raises(ScenarioError) as ei:
        parse_scenario("nodes=1")
    assert ei.value.field == "n_nodes"
    assert "n_nodes" in str(ei.value)
    with pytest.raises(ScenarioError) as ei:
        parse_scenario("speed_min = 6")
    assert ei.value.field == "speed_min"


def test_unknown_key_reports_line():
    with pytest.raises(ScenarioError) as ei:
        parse_scenario("nodes = 20\nnodse = 40\n")
    assert ei.value.lineno == 2
    assert "nodse" in str(ei.value) and "nodes" in str(ei.value)


def test_bad_value_and_missing_equals():
    with pytest.raises(ScenarioError) as ei:
        parse_scenario("\n\nduration = soon")
    assert ei.value.lineno == 3 and ei.value.field == "duration"
    with pytest.raises(ScenarioError) as ei:
        parse_scenario("nodes 20")
    assert ei.value.lineno == 1


def test_protocol_parsing():
    assert parse_protocol("aodv") == ("AODV",)
    assert parse_protocol("TORA-lite") == ("TORA",)
    assert parse_protocol("MRP(AODV+DSR)") == ("AODV", "DSR")
    assert parse_protocol("MRP( tora + dsr )") == ("TORA", "DSR")
    for bad in ("OLSR", "MRP(AODV+AODV)", "MRP(AODV+OLSR)"):
        with pytest.raises(ScenarioError):
            parse_protocol(bad)
    assert ScenarioConfig(protocol="MRP(AODV+DSR)").is_mrp


def test_flows_in_file():
    c = parse_scenario("nodes = 5\nflow = 0,4\nflow = 1, 2, 3.0, 9.5\nflows = auto")
    assert c.flows == (FlowSpec(0, 4), FlowSpec(1, 2, 3.0, 9.5))
    with pytest.raises(ScenarioError):
        parse_scenario("nodes = 5\nflow = 0,9")
    with pytest.raises(ScenarioError):
        parse_scenario("flow = 1")


def test_round_trip(tmp_path):
    c = ScenarioConfig(n_nodes=40, speed_max=2.5, protocol="MRP(TORA+DSR)", n_flows=3,
                       mobility="random_direction", mrp_count_standby=False, seed=2**63,
                       flows=(FlowSpec(0, 3), FlowSpec(5, 1, 0.25, 7.0)))
    p = tmp_path / "s.txt"
    p.write_text(dump_scenario(c))
    assert load_scenario(p) == c
    assert parse_scenario(dump_scenario(ScenarioConfig())) == ScenarioConfig()
