"""Abstracted PHY/MAC: closed-ball connectivity, serialized transmission and a
drop-tail interface queue that lets routing packets jump ahead of data."""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .engine import Engine, EventKind

BROADCAST = -1

# trace vocabulary
SEND, RECV, FWD, DROP = "SEND", "RECV", "FWD", "DROP"
AGT, RTR, MAC = "AGT", "RTR", "MAC"
CBR = "CBR"
MRP_KIND = "MRP"

IP_HEADER = 20


@dataclass(frozen=True)
class RadioConfig:
    range: float = 250.0
    bit_rate: float = 2e6
    processing_delay: float = 0.001

    def __post_init__(self):
        if not self.range > 0:
            raise ValueError(f"radio range must be positive, got {self.range}")
        if not self.bit_rate > 0:
            raise ValueError(f"bit rate must be positive, got {self.bit_rate}")
        if self.processing_delay < 0:
            raise ValueError("processing delay must be non-negative")

    def hop_delay(self, size_bytes: int) -> float:
        return size_bytes * 8 / self.bit_rate + self.processing_delay


class Packet:
    """One datagram. Broadcast copies are shared between receivers, so
    receivers must :meth:`copy` before changing anything."""

    __slots__ = (
        "uid", "kind", "proto", "size", "src", "dst", "hdr",
        "sent_at", "ttl", "path", "payload", "next_hop",
    )

    def __init__(self, uid, kind, proto, size, src, dst, hdr=None,
                 sent_at=0.0, ttl=32, payload=0):
        self.uid = uid
        self.kind = kind
        self.proto = proto
        self.size = size
        self.src = src
        self.dst = dst
        self.hdr = hdr
        self.sent_at = sent_at
        self.ttl = ttl
        self.path = None
        self.payload = payload
        self.next_hop = BROADCAST

    @property
    def is_data(self) -> bool:
        return self.kind == CBR

    def copy(self, **changes) -> "Packet":
        p = Packet(self.uid, self.kind, self.proto, self.size, self.src, self.dst,
                   self.hdr, self.sent_at, self.ttl, self.payload)
        p.path = None if self.path is None else list(self.path)
        for k, v in changes.items():
            setattr(p, k, v)
        return p

    def __repr__(self):
        return (f"Packet(uid={self.uid}, kind={self.kind}, proto={self.proto}, "
                f"{self.src}->{self.dst}, size={self.size})")


class InterfaceQueue:
    """Bounded queue: routing packets FIFO ahead of data packets FIFO.

    ``on_drop(packet, reason)`` is called for every rejected or evicted packet.
    """

    __slots__ = ("capacity", "ctrl", "data", "on_drop")

    def __init__(self, capacity: int = 50, on_drop=None):
        if capacity < 1:
            raise ValueError("queue capacity must be at least 1")
        self.capacity = capacity
        self.ctrl: deque[Packet] = deque()
        self.data: deque[Packet] = deque()
        self.on_drop = on_drop

    def __len__(self):
        return len(self.ctrl) + len(self.data)

    def __bool__(self):
        return bool(self.ctrl) or bool(self.data)

    def contents(self) -> list[Packet]:
        return list(self.ctrl) + list(self.data)

    def enqueue(self, packet: Packet) -> bool:
        full = len(self.ctrl) + len(self.data) >= self.capacity
        if packet.kind == CBR:
            if full:
                if self.on_drop:
                    self.on_drop(packet, "IFQ")
                return False
            self.data.append(packet)
            return True
        if full:
            if not self.data:
                if self.on_drop:
                    self.on_drop(packet, "IFQ")
                return False
            evicted = self.data.pop()
            if self.on_drop:
                self.on_drop(evicted, "EVICT")
        self.ctrl.append(packet)
        return True

    def pop(self) -> Packet:
        if self.ctrl:
            return self.ctrl.popleft()
        return self.data.popleft()

    def remove_if(self, pred) -> list[Packet]:
        """Pull out queued packets matching ``pred`` (used on route loss)."""
        out = [p for p in itertools.chain(self.ctrl, self.data) if pred(p)]
        if out:
            ids = {id(p) for p in out}
            self.ctrl = deque(p for p in self.ctrl if id(p) not in ids)
            self.data = deque(p for p in self.data if id(p) not in ids)
        return out


def enqueue(queue: InterfaceQueue, packet: Packet) -> bool:
    return queue.enqueue(packet)


class UnknownNode(KeyError):
    pass


class Medium:
    """Connectivity from positions plus per-node serialized transmitters.

    Positions are piecewise constant between mobility ticks; ``refresh()`` must
    be called after every tick. ``deliver_up(node, packet, prev_hop)`` and
    ``link_failed(node, packet, next_hop)`` are wired by the simulator.
    """

    def __init__(self, engine: Engine, positions: np.ndarray, radio: RadioConfig,
                 queue_capacity: int = 50, tracer=None, on_drop=None, trace_mac: bool = True):
        self.engine = engine
        # MAC lines are bulky and only needed in persisted traces
        self.trace_mac = trace_mac
        self.radio = radio
        self.n = positions.shape[0]
        self._positions = positions
        self._trace = tracer if tracer is not None else []
        self._on_drop = on_drop
        self.queues = [
            InterfaceQueue(queue_capacity, self._dropper(i)) for i in range(self.n)
        ]
        self.busy_until = [0.0] * self.n
        self._servicing = [False] * self.n
        self.deliver_up = None
        self.link_failed = None
        # optional fast path: control_rx(packet) -> list of per-node callables,
        # or one batch callable(receivers, packet, sender, append, now)
        self.control_rx = None
        self.cuts: set[tuple[int, int]] = set()
        self.tx_count = 0
        self.refresh()

    def _dropper(self, node):
        def drop(pkt, reason):
            if self._on_drop is not None:
                self._on_drop(node, pkt, MAC, reason)
        return drop

    # -------------------------------------------------------------- topology

    def refresh(self) -> None:
        adj = K.adjacency(self._positions, float(self.radio.range))
        for a, b in self.cuts:
            adj[a, b] = adj[b, a] = False
        self.adj = adj
        self._nbrs = [None] * self.n
        self._rows = adj.tolist() if self.n <= 128 else None

    def cut(self, a: int, b: int) -> None:
        """Force the link a-b down until :meth:`restore` (scripted scenarios)."""
        self.cuts.add((min(a, b), max(a, b)))
        self.refresh()

    def restore(self, a: int, b: int) -> None:
        self.cuts.discard((min(a, b), max(a, b)))
        self.refresh()

    def _check(self, node):
        if not 0 <= node < self.n:
            raise UnknownNode(f"unknown node id {node}")

    def neighbors(self, node: int) -> list[int]:
        self._check(node)
        nb = self._nbrs[node]
        if nb is None:
            nb = np.flatnonzero(self.adj[node]).tolist()
            self._nbrs[node] = nb
        return nb

    def connected(self, a: int, b: int) -> bool:
        if self._rows is not None:
            return self._rows[a][b]
        return bool(self.adj[a, b])

    def links(self) -> list[tuple[int, int]]:
        ii, jj = np.nonzero(np.triu(self.adj, 1))
        return list(zip(ii.tolist(), jj.tolist()))

    # -------------------------------------------------------------- transmit

    def transmit(self, packet: Packet, frm: int, to: int) -> None:
        """Queue ``packet`` at ``frm`` for unicast ``to`` (or ``BROADCAST``)."""
        packet.next_hop = to
        if not self.queues[frm].enqueue(packet):
            return
        if self._servicing[frm]:
            return
        if self.engine.now >= self.busy_until[frm]:
            self._service(frm)
        else:
            self._servicing[frm] = True
            self.engine.at(self.busy_until[frm], self._service, frm,
                           kind=EventKind.TX_READY, target=frm)

    def _service(self, node: int) -> None:
        self._servicing[node] = True
        q = self.queues[node]
        eng = self.engine
        now = eng.now
        while q:
            pkt = q.pop()
            to = pkt.next_hop
            if to != BROADCAST and not self.connected(node, to):
                self.link_failed(node, pkt, to)
                continue
            size = pkt.size
            if self.trace_mac:
                self._trace.append((now, SEND, MAC, node, pkt.uid, pkt.kind, size, pkt.src,
                                    pkt.dst, ""))
            self.tx_count += 1
            done = now + size * 8 / self.radio.bit_rate
            self.busy_until[node] = done
            receivers = self.neighbors(node) if to == BROADCAST else (to,)
            eng.at(done + self.radio.processing_delay, self._arrive, pkt, node, receivers,
                   kind=EventKind.PACKET_ARRIVAL, target=node)
            if q:
                eng.at(done, self._service, node, kind=EventKind.TX_READY, target=node)
                return
            break
        self._servicing[node] = False

    def _arrive(self, pkt: Packet, sender: int, receivers) -> None:
        now = self.engine.now
        append = self._trace.append if self.trace_mac else None
        kind, uid, size, src, dst = pkt.kind, pkt.uid, pkt.size, pkt.src, pkt.dst
        if kind != CBR and self.control_rx is not None:
            handlers = self.control_rx(pkt)
            if not isinstance(handlers, list):
                # batch receiver: it logs the RECV lines itself
                handlers(receivers, pkt, sender, append, now)
                return
        else:
            handlers = None
        if handlers is None:
            up = self.deliver_up
            for r in receivers:
                if append is not None:
                    append((now, RECV, MAC, r, uid, kind, size, src, dst, ""))
                up(r, pkt, sender)
        else:
            for r in receivers:
                if append is not None:
                    append((now, RECV, MAC, r, uid, kind, size, src, dst, ""))
                handlers[r](pkt, sender)


def export_links_csv(medium: Medium, t: float, fh) -> None:
    fh.write("time,a,b\n")
    for a, b in medium.links():
        fh.write(f"{t!r},{a},{b}\n")
