"""CBR sources and the delivery sink."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .engine import EventKind
from .net import AGT, CBR, DROP, RECV, SEND, Packet

DUPLICATE = "DUP"


@dataclass(frozen=True)
class Flow:
    src: int
    dst: int
    rate: float = 8.0
    payload: int = 512
    start: float = 0.0
    stop: float = 100.0

    def __post_init__(self):
        if self.src == self.dst:
            raise ValueError(f"flow source and destination must differ ({self.src})")
        if not self.rate > 0:
            raise ValueError(f"flow rate must be positive, got {self.rate}")
        if not self.payload > 0:
            raise ValueError(f"payload must be positive, got {self.payload}")
        if self.stop < self.start:
            raise ValueError("flow stops before it starts")

    @property
    def interval(self) -> float:
        return 1.0 / self.rate

    def count(self) -> int:
        """Packets sent in ``[start, stop]``; the first fires at ``start``."""
        return math.floor((self.stop - self.start) * self.rate + 1e-9) + 1

    def send_time(self, k: int) -> float:
        return self.start + k / self.rate

    def active(self, now: float) -> bool:
        return self.start <= now <= self.stop


class DeliveryRecord:
    __slots__ = ("packet_id", "sent", "received", "flow", "payload")

    def __init__(self, packet_id, sent, flow, payload):
        self.packet_id = packet_id
        self.sent = sent
        self.received = None
        self.flow = flow
        self.payload = payload

    @property
    def delivered(self) -> bool:
        return self.received is not None

    @property
    def delay(self):
        return None if self.received is None else self.received - self.sent

    def __repr__(self):
        return f"DeliveryRecord({self.packet_id}, S={self.sent}, R={self.received})"


class Traffic:
    """Drives every flow and owns the delivery records.

    ``route(node, packet)`` hands a fresh data packet to the routing layer of
    its source.
    """

    def __init__(self, sim, flows, duration: float):
        self.sim = sim
        self.flows = list(flows)
        self.duration = duration
        self.records: dict[int, DeliveryRecord] = {}
        self.duplicates = 0
        self._trace = sim.trace

    def start(self) -> None:
        eng = self.sim.engine
        for idx, f in enumerate(self.flows):
            t = f.send_time(0)
            if t <= self.duration:
                eng.at(t, self._tick, idx, 0, kind=EventKind.TRAFFIC_TICK, target=f.src)

    def generate(self, flow: Flow, now: float, index: int = 0) -> Packet:
        uid = self.sim.new_uid()
        pkt = Packet(uid, CBR, None, flow.payload, flow.src, flow.dst, None,
                     sent_at=now, payload=flow.payload)
        pkt.path = [flow.src]
        self.records[uid] = DeliveryRecord(uid, now, index, flow.payload)
        self._trace.append((now, SEND, AGT, flow.src, uid, CBR, flow.payload, flow.src, flow.dst, ""))
        return pkt

    def _tick(self, idx, k):
        f = self.flows[idx]
        now = self.sim.engine.now
        pkt = self.generate(f, now, idx)
        nxt = k + 1
        if nxt < f.count():
            t = f.send_time(nxt)
            if t <= self.duration:
                self.sim.engine.at(t, self._tick, idx, nxt, kind=EventKind.TRAFFIC_TICK, target=f.src)
        self.sim.route_data(f.src, pkt)

    def deliver(self, node: int, pkt: Packet, at: float) -> bool:
        """Complete the record of ``pkt``; returns False for duplicates."""
        rec = self.records.get(pkt.uid)
        if rec is None or rec.received is not None:
            self.duplicates += 1
            self._trace.append((at, DROP, AGT, node, pkt.uid, CBR, pkt.payload, pkt.src, pkt.dst, DUPLICATE))
            return False
        rec.received = at
        self._trace.append((at, RECV, AGT, node, pkt.uid, CBR, pkt.payload, pkt.src, pkt.dst, ""))
        return True

    def completed(self) -> list[DeliveryRecord]:
        return [r for r in self.records.values() if r.received is not None]

    def export_csv(self, fh) -> None:
        fh.write("packet_id,flow,src,dst,sent,received,delay\n")
        for uid in sorted(self.records):
            r = self.records[uid]
            f = self.flows[r.flow]
            recv = "" if r.received is None else repr(r.received)
            delay = "" if r.received is None else repr(r.received - r.sent)
            fh.write(f"{uid},{r.flow},{f.src},{f.dst},{r.sent!r},{recv},{delay}\n")


def default_flows(n_nodes: int, rng, n_flows: int | None = None, rate=8.0, payload=512,
                  start=0.0, stop=100.0) -> list[Flow]:
    """``ceil(n/4)`` flows, endpoints drawn without replacement when possible."""
    k = math.ceil(n_nodes / 4) if n_flows is None else n_flows
    if k <= 0:
        return []
    if 2 * k <= n_nodes:
        ends = rng.choice(n_nodes, 2 * k, replace=False)
        pairs = [(ends[2 * i], ends[2 * i + 1]) for i in range(k)]
    else:
        pairs = []
        for _ in range(k):
            s, d = rng.choice(n_nodes, 2, replace=False)
            pairs.append((s, d))
    return [Flow(s, d, rate, payload, start, stop) for s, d in pairs]
