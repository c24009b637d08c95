"""Numeric inner loops for mobility and connectivity.

Every kernel exists twice: a numba ``@njit`` version and a pure-numpy version
with identical floating point semantics (same operation order, no fused ops).
Set ``MANETSIM_DISABLE_NUMBA=1`` to force the numpy path; the numba path is also
skipped when numba cannot be imported.
"""

from __future__ import annotations

import os

import numpy as np

# keeps disk draws strictly inside the closed radius after rounding
DISK_SHRINK = 1.0 - 1e-12
ARRIVAL_EPS = 1e-9


def _numba_requested() -> bool:
    flag = os.environ.get("MANETSIM_DISABLE_NUMBA", "").strip().lower()
    return flag not in ("1", "true", "yes", "on")


# ---------------------------------------------------------------- numpy path


def np_advance_waypoint(pos, target, speed, moving, dt):
    """Move ``moving`` nodes toward ``target``; return the arrival mask.

    Arrived nodes are snapped onto their waypoint, the rest of the tick is
    discarded.
    """
    n = pos.shape[0]
    arrived = np.zeros(n, dtype=np.bool_)
    if n == 0:
        return arrived
    dx = target[:, 0] - pos[:, 0]
    dy = target[:, 1] - pos[:, 1]
    dist = np.sqrt(dx * dx + dy * dy)
    step = speed * dt
    hit = moving & (step >= dist - ARRIVAL_EPS)
    go = moving & ~hit
    safe = np.where(go, dist, 1.0)
    pos[go, 0] = pos[go, 0] + dx[go] / safe[go] * step[go]
    pos[go, 1] = pos[go, 1] + dy[go] / safe[go] * step[go]
    pos[hit, 0] = target[hit, 0]
    pos[hit, 1] = target[hit, 1]
    arrived[hit] = True
    return arrived


def np_advance_heading(pos, vel, moving, dt, width, height):
    """Straight-line move; nodes leaving the area are clamped onto the border.

    Returns an int8 code per node: bit 0 left, bit 1 right, bit 2 bottom,
    bit 3 top border contact (0 means no contact).
    """
    n = pos.shape[0]
    code = np.zeros(n, dtype=np.int8)
    if n == 0:
        return code
    x = np.where(moving, pos[:, 0] + vel[:, 0] * dt, pos[:, 0])
    y = np.where(moving, pos[:, 1] + vel[:, 1] * dt, pos[:, 1])
    code[moving & (x <= 0.0)] |= 1
    code[moving & (x >= width)] |= 2
    code[moving & (y <= 0.0)] |= 4
    code[moving & (y >= height)] |= 8
    pos[:, 0] = np.minimum(np.maximum(x, 0.0), width)
    pos[:, 1] = np.minimum(np.maximum(y, 0.0), height)
    return code


def np_place_members(pos, ref, u_r, u_phi, radius, members, width, height):
    """Put every member at ``ref`` plus a uniform draw from a disk, clipped."""
    rho = radius * np.sqrt(u_r) * DISK_SHRINK
    phi = 2.0 * np.pi * u_phi
    x = ref[:, 0] + rho * np.cos(phi)
    y = ref[:, 1] + rho * np.sin(phi)
    x = np.minimum(np.maximum(x, 0.0), width)
    y = np.minimum(np.maximum(y, 0.0), height)
    pos[members, 0] = x[members]
    pos[members, 1] = y[members]


def np_adjacency(pos, radio_range):
    """Closed-ball connectivity matrix, no self loops."""
    dx = pos[:, 0][:, None] - pos[:, 0][None, :]
    dy = pos[:, 1][:, None] - pos[:, 1][None, :]
    adj = dx * dx + dy * dy <= radio_range * radio_range
    np.fill_diagonal(adj, False)
    return adj


# ---------------------------------------------------------------- numba path

try:
    if not _numba_requested():
        raise ImportError("numba disabled by MANETSIM_DISABLE_NUMBA")
    from numba import njit
except ImportError:
    njit = None


if njit is not None:

    @njit(cache=True)
    def nb_advance_waypoint(pos, target, speed, moving, dt):
        n = pos.shape[0]
        arrived = np.zeros(n, dtype=np.bool_)
        for i in range(n):
            if not moving[i]:
                continue
            dx = target[i, 0] - pos[i, 0]
            dy = target[i, 1] - pos[i, 1]
            dist = np.sqrt(dx * dx + dy * dy)
            step = speed[i] * dt
            if step >= dist - ARRIVAL_EPS:
                pos[i, 0] = target[i, 0]
                pos[i, 1] = target[i, 1]
                arrived[i] = True
            else:
                pos[i, 0] = pos[i, 0] + dx / dist * step
                pos[i, 1] = pos[i, 1] + dy / dist * step
        return arrived

    @njit(cache=True)
    def nb_advance_heading(pos, vel, moving, dt, width, height):
        n = pos.shape[0]
        code = np.zeros(n, dtype=np.int8)
        for i in range(n):
            if not moving[i]:
                continue
            x = pos[i, 0] + vel[i, 0] * dt
            y = pos[i, 1] + vel[i, 1] * dt
            c = 0
            if x <= 0.0:
                c |= 1
            if x >= width:
                c |= 2
            if y <= 0.0:
                c |= 4
            if y >= height:
                c |= 8
            code[i] = c
            pos[i, 0] = min(max(x, 0.0), width)
            pos[i, 1] = min(max(y, 0.0), height)
        return code

    @njit(cache=True)
    def nb_place_members(pos, ref, u_r, u_phi, radius, members, width, height):
        for i in range(pos.shape[0]):
            if not members[i]:
                continue
            rho = radius * np.sqrt(u_r[i]) * DISK_SHRINK
            phi = 2.0 * np.pi * u_phi[i]
            x = ref[i, 0] + rho * np.cos(phi)
            y = ref[i, 1] + rho * np.sin(phi)
            pos[i, 0] = min(max(x, 0.0), width)
            pos[i, 1] = min(max(y, 0.0), height)

    @njit(cache=True)
    def nb_adjacency(pos, radio_range):
        n = pos.shape[0]
        r2 = radio_range * radio_range
        adj = np.zeros((n, n), dtype=np.bool_)
        for i in range(n):
            for j in range(i + 1, n):
                dx = pos[i, 0] - pos[j, 0]
                dy = pos[i, 1] - pos[j, 1]
                if dx * dx + dy * dy <= r2:
                    adj[i, j] = True
                    adj[j, i] = True
        return adj

    USING_NUMBA = True
    advance_waypoint = nb_advance_waypoint
    advance_heading = nb_advance_heading
    place_members = nb_place_members
    adjacency = nb_adjacency
else:
    USING_NUMBA = False
    advance_waypoint = np_advance_waypoint
    advance_heading = np_advance_heading
    place_members = np_place_members
    adjacency = np_adjacency


def backend() -> str:
    return "numba" if USING_NUMBA else "numpy"
