import io
import math
from dataclasses import replace

import numpy as np
import pytest

from manetsim.mobility import (
    Area, GroupAssignment, GroupMobility, MobilityError, MobilityState, RandomDirection,
    RandomWaypoint, export_trace_csv, initial_state, make_mobility, record_trace,
    step_random_direction, step_random_waypoint, step_rpgm,
)
from manetsim.rng import RngStream

AREA = Area(600.0, 600.0)
SPEEDS = (0.5, 5.0)


def test_area_validation():
    with pytest.raises(ValueError):
        Area(0, 10)
    assert AREA.contains(0.0, 600.0) and not AREA.contains(-1e-9, 3.0)


def test_waypoint_arrival_and_pause():
    rng = RngStream(1, "w")
    st = MobilityState((0.0, 0.0), (1.0, 0.0), waypoint=(1.0, 0.0), speed=1.0)
    st = step_random_waypoint(st, 0.5, 2.0, rng, AREA, SPEEDS)
    assert st.position == pytest.approx((0.5, 0.0))
    st = step_random_waypoint(st, 0.5, 2.0, rng, AREA, SPEEDS)
    assert st.position == (1.0, 0.0) and st.phase == "paused"
    assert st.pause_until == pytest.approx(3.0)
    # still paused: position frozen
    st2 = step_random_waypoint(st, 1.0, 2.0, rng, AREA, SPEEDS)
    assert st2.position == st.position and st2.phase == "paused"


def test_random_direction_reflects_inward():
    rng = RngStream(2, "d")
    st = MobilityState((599.9, 300.0), (5.0, 0.0), speed=5.0)
    st = step_random_direction(st, 0.1, rng, AREA, SPEEDS)
    assert st.position[0] == 600.0
    assert st.velocity[0] <= 0.0
    assert 0.5 <= st.speed <= 5.0


def test_bad_dt():
    st = MobilityState((1.0, 1.0))
    with pytest.raises(MobilityError):
        step_random_direction(st, 0.0, RngStream(1, "x"))
    with pytest.raises(MobilityError):
        step_random_waypoint(st, 0.1, -1.0, RngStream(1, "x"))


def test_rpgm_rejects_bad_groups():
    leader = MobilityState((10.0, 10.0), waypoint=(20.0, 10.0), velocity=(1.0, 0.0), speed=1.0)
    with pytest.raises(MobilityError):
        step_rpgm(leader, [(leader, GroupAssignment(0, True))], 0.1, RngStream(1, "g"))
    with pytest.raises(MobilityError):
        step_rpgm(leader, [(leader, None)], 0.1, RngStream(1, "g"))


@pytest.mark.parametrize("pause", [0.0, 1.5])
def test_waypoint_array_matches_scalar(pause):
    n, dt = 6, 0.1
    model = RandomWaypoint(n, AREA, SPEEDS, pause, seed=9)
    rngs = [RngStream(9, ("mobility", i)) for i in range(n)]
    states = [initial_state(r, AREA, SPEEDS, "random_waypoint") for r in rngs]
    for k in range(3000):
        t = k * dt
        model.step(t, dt)
        # same clock as the array model (k*dt, not a running sum)
        states = [step_random_waypoint(replace(s, t=t), dt, pause, r, AREA, SPEEDS)
                  for s, r in zip(states, rngs)]
    for i in range(n):
        assert model.pos[i].tolist() == list(states[i].position)


def test_direction_array_matches_scalar():
    n, dt = 6, 0.1
    model = RandomDirection(n, AREA, SPEEDS, seed=4)
    rngs = [RngStream(4, ("mobility", i)) for i in range(n)]
    states = [initial_state(r, AREA, SPEEDS, "random_direction") for r in rngs]
    for k in range(3000):
        model.step(k * dt, dt)
        states = [step_random_direction(s, dt, r, AREA, SPEEDS) for s, r in zip(states, rngs)]
    for i in range(n):
        assert model.pos[i].tolist() == list(states[i].position)
        assert model.vel[i].tolist() == list(states[i].velocity)


def test_groups_partition_nodes():
    m = GroupMobility(10, AREA, SPEEDS, 0.0, seed=1, groups=4)
    assert m.group_of.tolist() == [0, 0, 0, 1, 1, 2, 2, 2, 3, 3]
    assert m.leaders.tolist() == [0, 3, 5, 8]
    a = m.assignment(1)
    assert not a.leader and a.group == 0
    assert math.hypot(*a.offset) <= 100.0
    assert m.assignment(3).leader


def _invariants(model, ticks, dt=0.1, radius=None):
    w, h = model.area.width, model.area.height
    for k in range(ticks):
        model.step(k * dt, dt)
        p = model.pos
        assert p.min() >= 0.0 and p[:, 0].max() <= w and p[:, 1].max() <= h
        sp = model.speed
        moving = sp > 0
        assert np.all((sp[moving] >= 0.5) & (sp[moving] <= 5.0))
        if radius is not None:
            d = np.hypot(*(p - model.ref)[model.is_member].T)
            assert d.max() <= radius


@pytest.mark.parametrize("name", ["random_waypoint", "random_direction", "rpgm"])
def test_invariants_short(name):
    m = make_mobility(name, 20, AREA, SPEEDS, 0.0, 5)
    _invariants(m, 2000, radius=50.0 if name == "rpgm" else None)


def test_static_and_unknown():
    with pytest.raises(MobilityError):
        make_mobility("static", 3, AREA, SPEEDS, 0, 1)
    m = make_mobility("static", 2, AREA, SPEEDS, 0, 1, positions=[[1, 2], [3, 4]])
    m.step(0.0, 0.1)
    assert m.pos.tolist() == [[1, 2], [3, 4]]
    with pytest.raises(MobilityError):
        make_mobility("levy", 3, AREA, SPEEDS, 0, 1)


def test_trace_export_deterministic():
    def rows():
        return record_trace(make_mobility("rpgm", 8, AREA, SPEEDS, 0, 3), 5.0, 0.1, every=10)

    a, b = io.StringIO(), io.StringIO()
    export_trace_csv(rows(), a)
    export_trace_csv(rows(), b)
    assert a.getvalue() == b.getvalue()
    lines = a.getvalue().splitlines()
    assert lines[0] == "time,node,x,y" and len(lines) == 1 + 6 * 8
