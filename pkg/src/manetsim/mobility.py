"""Random Direction, Random Waypoint and Reference Point Group mobility.

Two views of the same rules live here. ``step_random_direction``,
``step_random_waypoint`` and ``step_rpgm`` advance one :class:`MobilityState`
and are the reference semantics. The array models (:class:`RandomWaypoint`,
:class:`RandomDirection`, :class:`GroupMobility`) advance all nodes per tick
through :mod:`manetsim._kernels` and are what the simulator runs; per node they
consume their random stream in the same order as the scalar functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from . import _kernels as K
from .rng import RngStream

MOVING = "moving"
PAUSED = "paused"


@dataclass(frozen=True)
class Area:
    width: float = 600.0
    height: float = 600.0

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise ValueError(f"area must be positive, got {self.width}x{self.height}")

    def contains(self, x: float, y: float) -> bool:
        return 0.0 <= x <= self.width and 0.0 <= y <= self.height


@dataclass(frozen=True)
class MobilityState:
    position: tuple[float, float]
    velocity: tuple[float, float] = (0.0, 0.0)
    phase: str = MOVING
    waypoint: tuple[float, float] | None = None
    pause_until: float | None = None
    t: float = 0.0
    # drawn speed of the current leg; velocity is heading * speed
    speed: float = 0.0


@dataclass(frozen=True)
class GroupAssignment:
    group: int
    leader: bool
    offset: tuple[float, float] = (0.0, 0.0)
    radius: float = 50.0


class MobilityError(ValueError):
    pass


# ------------------------------------------------------------ scalar rules


def _draw_leg(pos, rng: RngStream, area: Area, speed_range):
    wx = rng.uniform(0.0, area.width)
    wy = rng.uniform(0.0, area.height)
    speed = _draw_speed(rng, speed_range)
    dx, dy = wx - pos[0], wy - pos[1]
    d = math.sqrt(dx * dx + dy * dy)
    vel = (dx / d * speed, dy / d * speed) if d > 0 else (speed, 0.0)
    return (wx, wy), vel, speed


def _draw_speed(rng: RngStream, speed_range) -> float:
    lo, hi = speed_range
    if hi == lo:
        return float(lo)
    return rng.uniform(lo, hi)


def _inward_heading(code: int, rng: RngStream, speed_range):
    theta = rng.uniform(0.0, 2.0 * math.pi)
    speed = _draw_speed(rng, speed_range)
    hx, hy = math.cos(theta), math.sin(theta)
    if code & 1:
        hx = abs(hx)
    if code & 2:
        hx = -abs(hx)
    if code & 4:
        hy = abs(hy)
    if code & 8:
        hy = -abs(hy)
    return (hx * speed, hy * speed), speed


def initial_state(rng: RngStream, area: Area, speed_range, model: str) -> MobilityState:
    """Uniform start position plus the first leg/heading of ``model``."""
    x = rng.uniform(0.0, area.width)
    y = rng.uniform(0.0, area.height)
    if model == "random_direction":
        vel, speed = _inward_heading(0, rng, speed_range)
        return MobilityState((x, y), vel, MOVING, None, None, 0.0, speed)
    wp, vel, speed = _draw_leg((x, y), rng, area, speed_range)
    return MobilityState((x, y), vel, MOVING, wp, None, 0.0, speed)


def step_random_direction(
    state: MobilityState,
    dt: float,
    rng: RngStream,
    area: Area = Area(),
    speed_range=(0.5, 5.0),
) -> MobilityState:
    if not dt > 0:
        raise MobilityError(f"dt must be positive, got {dt}")
    x = state.position[0] + state.velocity[0] * dt
    y = state.position[1] + state.velocity[1] * dt
    code = 0
    if x <= 0.0:
        code |= 1
    if x >= area.width:
        code |= 2
    if y <= 0.0:
        code |= 4
    if y >= area.height:
        code |= 8
    x = min(max(x, 0.0), area.width)
    y = min(max(y, 0.0), area.height)
    vel, speed = state.velocity, state.speed
    if code:
        vel, speed = _inward_heading(code, rng, speed_range)
    return MobilityState((x, y), vel, MOVING, None, None, state.t + dt, speed)


def step_random_waypoint(
    state: MobilityState,
    dt: float,
    pause: float,
    rng: RngStream,
    area: Area = Area(),
    speed_range=(0.5, 5.0),
) -> MobilityState:
    if not dt > 0:
        raise MobilityError(f"dt must be positive, got {dt}")
    if pause < 0:
        raise MobilityError(f"pause must be non-negative, got {pause}")
    t_end = state.t + dt
    pos, vel, wp, speed = state.position, state.velocity, state.waypoint, state.speed
    if state.phase == PAUSED:
        if state.t < state.pause_until:
            return replace(state, t=t_end)
        wp, vel, speed = _draw_leg(pos, rng, area, speed_range)
    dx, dy = wp[0] - pos[0], wp[1] - pos[1]
    dist = math.sqrt(dx * dx + dy * dy)
    step = speed * dt
    if step >= dist - K.ARRIVAL_EPS:
        pos = wp
        if pause > 0:
            return MobilityState(pos, (0.0, 0.0), PAUSED, None, t_end + pause, t_end, 0.0)
        wp, vel, speed = _draw_leg(pos, rng, area, speed_range)
        return MobilityState(pos, vel, MOVING, wp, None, t_end, speed)
    pos = (pos[0] + dx / dist * step, pos[1] + dy / dist * step)
    return MobilityState(pos, vel, MOVING, wp, None, t_end, speed)


def reference_point(leader_pos, offset, area: Area) -> tuple[float, float]:
    return (
        min(max(leader_pos[0] + offset[0], 0.0), area.width),
        min(max(leader_pos[1] + offset[1], 0.0), area.height),
    )


def step_rpgm(
    leader: MobilityState,
    members: Sequence[tuple[MobilityState, GroupAssignment]],
    dt: float,
    rng: RngStream,
    area: Area = Area(),
    speed_range=(0.5, 5.0),
    pause: float = 0.0,
):
    """Advance a group: leader by the waypoint rule, members around references.

    Returns ``(new_leader, [new_member_states])``.
    """
    for _, g in members:
        if g is None:
            raise MobilityError("member without a group assignment")
        if g.leader:
            raise MobilityError("group has more than one leader")
    new_leader = step_random_waypoint(leader, dt, pause, rng, area, speed_range)
    out = []
    for state, g in members:
        ref = reference_point(new_leader.position, g.offset, area)
        rho = g.radius * math.sqrt(rng.random()) * K.DISK_SHRINK
        phi = 2.0 * math.pi * rng.random()
        x = min(max(ref[0] + rho * math.cos(phi), 0.0), area.width)
        y = min(max(ref[1] + rho * math.sin(phi), 0.0), area.height)
        out.append(
            MobilityState(
                (x, y),
                new_leader.velocity,
                new_leader.phase,
                new_leader.waypoint,
                new_leader.pause_until,
                new_leader.t,
                new_leader.speed,
            )
        )
    return new_leader, out


# ------------------------------------------------------------ array models


class Mobility:
    """Positions of all nodes; ``step(now, dt)`` advances them one tick."""

    moves = True

    def __init__(self, n: int, area: Area):
        self.n = n
        self.area = area
        self.pos = np.zeros((n, 2))
        # drawn speed of the current leg, 0 while paused
        self.speed = np.zeros(n)

    def step(self, now: float, dt: float) -> None:
        raise NotImplementedError

    def positions(self) -> np.ndarray:
        return self.pos


class StaticMobility(Mobility):
    moves = False

    def __init__(self, positions, area: Area = Area()):
        positions = np.asarray(positions, dtype=float).reshape(-1, 2)
        super().__init__(len(positions), area)
        self.pos[:] = positions

    def step(self, now, dt):
        pass


def _streams(seed: int, n: int) -> list[RngStream]:
    return [RngStream(seed, ("mobility", i)) for i in range(n)]


class RandomWaypoint(Mobility):
    def __init__(self, n, area, speed_range, pause, seed, streams=None):
        super().__init__(n, area)
        self.speed_range = tuple(speed_range)
        self.pause = float(pause)
        self.rngs = streams if streams is not None else _streams(seed, n)
        self.target = np.zeros((n, 2))
        self.vel = np.zeros((n, 2))
        self.moving = np.ones(n, dtype=np.bool_)
        self.pause_until = np.zeros(n)
        for i in range(n):
            self._init_node(i)

    def _init_node(self, i):
        st = initial_state(self.rngs[i], self.area, self.speed_range, "random_waypoint")
        self.pos[i] = st.position
        self.target[i] = st.waypoint
        self.vel[i] = st.velocity
        self.speed[i] = st.speed

    def _new_leg(self, i):
        wp, vel, speed = _draw_leg(
            (self.pos[i, 0], self.pos[i, 1]), self.rngs[i], self.area, self.speed_range
        )
        self.target[i] = wp
        self.vel[i] = vel
        self.speed[i] = speed
        self.moving[i] = True

    def step(self, now, dt):
        t_end = now + dt
        if not self.moving.all():
            for i in np.flatnonzero(~self.moving):
                if now >= self.pause_until[i]:
                    self._new_leg(i)
        arrived = K.advance_waypoint(self.pos, self.target, self.speed, self.moving, dt)
        if arrived.any():
            for i in np.flatnonzero(arrived):
                if self.pause > 0:
                    self.moving[i] = False
                    self.pause_until[i] = t_end + self.pause
                    self.vel[i] = 0.0
                    self.speed[i] = 0.0
                else:
                    self._new_leg(i)

    def state(self, i: int, t: float) -> MobilityState:
        moving = bool(self.moving[i])
        return MobilityState(
            (float(self.pos[i, 0]), float(self.pos[i, 1])),
            (float(self.vel[i, 0]), float(self.vel[i, 1])),
            MOVING if moving else PAUSED,
            (float(self.target[i, 0]), float(self.target[i, 1])) if moving else None,
            None if moving else float(self.pause_until[i]),
            t,
            float(self.speed[i]),
        )


class RandomDirection(Mobility):
    def __init__(self, n, area, speed_range, seed, streams=None):
        super().__init__(n, area)
        self.speed_range = tuple(speed_range)
        self.rngs = streams if streams is not None else _streams(seed, n)
        self.vel = np.zeros((n, 2))
        self.moving = np.ones(n, dtype=np.bool_)
        for i in range(n):
            st = initial_state(self.rngs[i], area, self.speed_range, "random_direction")
            self.pos[i] = st.position
            self.vel[i] = st.velocity
            self.speed[i] = st.speed

    def step(self, now, dt):
        code = K.advance_heading(
            self.pos, self.vel, self.moving, dt, self.area.width, self.area.height
        )
        if code.any():
            for i in np.flatnonzero(code):
                vel, speed = _inward_heading(int(code[i]), self.rngs[i], self.speed_range)
                self.vel[i] = vel
                self.speed[i] = speed

    def state(self, i: int, t: float) -> MobilityState:
        return MobilityState(
            (float(self.pos[i, 0]), float(self.pos[i, 1])),
            (float(self.vel[i, 0]), float(self.vel[i, 1])),
            MOVING,
            None,
            None,
            t,
            float(self.speed[i]),
        )


class GroupMobility(Mobility):
    """RPGM: leaders follow random waypoint, members jitter around references.

    Nodes are split into ``groups`` contiguous, near-equal blocks; the first node
    of each block leads. Member offsets are drawn once, uniformly in a disk of
    ``offset_radius`` around the leader.
    """

    JITTER_BLOCK = 1024

    def __init__(
        self, n, area, speed_range, pause, seed, groups=4, radius=50.0, offset_radius=100.0
    ):
        super().__init__(n, area)
        if groups < 1:
            raise MobilityError("need at least one group")
        groups = min(groups, n)
        self.radius = float(radius)
        self.group_of = np.array([i * groups // n for i in range(n)], dtype=np.int64)
        leaders = []
        for g in range(groups):
            leaders.append(int(np.flatnonzero(self.group_of == g)[0]))
        self.leaders = np.array(leaders, dtype=np.int64)
        self.leader_of = self.leaders[self.group_of]
        self.is_member = np.ones(n, dtype=np.bool_)
        self.is_member[self.leaders] = False

        rngs = _streams(seed, n)
        self._leader_model = RandomWaypoint(
            groups, area, speed_range, pause, seed, streams=[rngs[i] for i in leaders]
        )
        self._member_rngs = rngs
        self.offset = np.zeros((n, 2))
        for i in np.flatnonzero(self.is_member):
            r = offset_radius * math.sqrt(rngs[i].random())
            phi = 2.0 * math.pi * rngs[i].random()
            self.offset[i] = (r * math.cos(phi), r * math.sin(phi))
        self._jitter = np.zeros((n, 0))
        self._jit_i = 0
        self.ref = np.zeros((n, 2))
        self._sync(jitter=True)

    def assignment(self, i: int) -> GroupAssignment:
        return GroupAssignment(
            int(self.group_of[i]),
            not bool(self.is_member[i]),
            (float(self.offset[i, 0]), float(self.offset[i, 1])),
            self.radius,
        )

    def _refill(self):
        # per-member stream, consumed pairwise in order: (u_r, u_phi) per tick
        block = np.zeros((self.n, 2 * self.JITTER_BLOCK))
        for i in np.flatnonzero(self.is_member):
            block[i] = self._member_rngs[i].random(2 * self.JITTER_BLOCK)
        self._jitter = block
        self._jit_i = 0

    def _sync(self, jitter: bool):
        lm = self._leader_model
        lpos = lm.pos[self.group_of]
        self.pos[self.leaders] = lm.pos
        ref = lpos + self.offset
        np.clip(ref[:, 0], 0.0, self.area.width, out=ref[:, 0])
        np.clip(ref[:, 1], 0.0, self.area.height, out=ref[:, 1])
        self.ref = ref
        self.speed = lm.speed[self.group_of]
        if jitter:
            if self._jit_i >= self._jitter.shape[1]:
                self._refill()
            j = self._jit_i
            self._jit_i += 2
            K.place_members(
                self.pos,
                ref,
                np.ascontiguousarray(self._jitter[:, j]),
                np.ascontiguousarray(self._jitter[:, j + 1]),
                self.radius,
                self.is_member,
                self.area.width,
                self.area.height,
            )

    def step(self, now, dt):
        self._leader_model.step(now, dt)
        self._sync(jitter=True)

    @property
    def leader_moving(self):
        return self._leader_model.moving[self.group_of]


def make_mobility(model: str, n: int, area: Area, speed_range, pause, seed, **kw) -> Mobility:
    if model == "random_waypoint":
        return RandomWaypoint(n, area, speed_range, pause, seed)
    if model == "random_direction":
        return RandomDirection(n, area, speed_range, seed)
    if model == "rpgm":
        return GroupMobility(
            n,
            area,
            speed_range,
            pause,
            seed,
            groups=kw.get("groups", 4),
            radius=kw.get("radius", 50.0),
            offset_radius=kw.get("offset_radius", 100.0),
        )
    if model == "static":
        positions = kw.get("positions")
        if positions is None:
            raise MobilityError("static mobility needs explicit positions")
        return StaticMobility(positions, area)
    raise MobilityError(f"unknown mobility model {model!r}")


def export_trace_csv(rows, fh) -> None:
    """Write ``time,node,x,y`` lines from an iterable of tuples."""
    fh.write("time,node,x,y\n")
    for t, node, x, y in rows:
        fh.write(f"{t!r},{node},{x!r},{y!r}\n")


def record_trace(model: Mobility, duration: float, dt: float = 0.1, every: int = 1):
    """Step ``model`` through ``duration`` and collect (time, node, x, y) rows."""
    rows = []
    ticks = int(round(duration / dt))
    for k in range(ticks + 1):
        t = k * dt
        if k % every == 0:
            for i in range(model.n):
                rows.append((t, i, float(model.pos[i, 0]), float(model.pos[i, 1])))
        if k < ticks:
            model.step(t, dt)
    return rows
