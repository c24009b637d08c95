"""Common surface of every routing protocol instance (one per node)."""

from __future__ import annotations

from ..net import BROADCAST, CBR, FWD, SEND, Packet

# wire sizes in bytes, IP header included
SIZES = {
    "AODV_RREQ": 48,
    "AODV_RREP": 44,
    "AODV_RERR": 32,
    "DSR_RREQ": 32,
    "DSR_RREP": 32,
    "DSR_RERR": 40,
    "DSDV_UPD": 28,
    "TORA_QRY": 36,
    "TORA_UPD": 40,
}

DATA_TTL = 32
SEND_BUFFER = 64
# discovery try counter for a priming probe: one flood, retried only if data waits
PRIME = -1


class RoutingProtocol:
    """Per-node protocol instance.

    Subclasses implement ``on_data_to_send``, ``on_packet``, ``on_link_failure``
    and may override ``start`` / ``on_tick`` for timer driven behaviour.
    Control packets leave only through :meth:`emit`, data through
    :meth:`forward`, so tracing stays uniform.
    """

    name = "BASE"
    data_header = 0
    # control kind -> factory(insts) returning a batch receive function
    # (receivers, pkt, sender, append, now); ``append`` is None when MAC lines
    # are not traced
    floods: dict = {}

    def __init__(self, node: int, sim):
        self.id = node
        self.sim = sim
        self.eng = sim.engine

    # -------------------------------------------------------------- hooks

    def start(self) -> None:
        pass

    def on_tick(self, now: float) -> None:
        pass

    def on_data_to_send(self, pkt: Packet) -> None:
        raise NotImplementedError

    def on_packet(self, pkt: Packet, prev_hop: int) -> None:
        raise NotImplementedError

    def on_link_failure(self, pkt: Packet, neighbor: int) -> None:
        raise NotImplementedError

    def handler(self, kind: str):
        """Receive callable for control packets of ``kind`` (dispatch shortcut)."""
        return self.on_packet

    def has_route(self, dest: int) -> bool:
        return self.next_hop(dest) is not None

    def next_hop(self, dest: int):
        return None

    def prime_route(self, dest: int) -> None:
        """Make sure a route to ``dest`` is being acquired, without data."""

    def table_rows(self):
        """``(dest, next_hop, metric)`` tuples for snapshot export."""
        return []

    # -------------------------------------------------------------- helpers

    def control(self, kind: str, dst: int, hdr, size: int | None = None) -> Packet:
        return Packet(self.sim.new_uid(), kind, self.name,
                      SIZES[kind] if size is None else size, self.id, dst, hdr)

    def emit(self, pkt: Packet, to: int = BROADCAST, forwarded: bool = False) -> None:
        self.sim.emit_control(self.id, pkt, to, FWD if forwarded else SEND)

    def forward(self, pkt: Packet, next_hop: int) -> None:
        self.sim.send_data(self.id, pkt, next_hop)

    def drop(self, pkt: Packet, reason: str, layer: str = "RTR") -> None:
        self.sim.drop(self.id, pkt, layer, reason)

    def deliver(self, pkt: Packet) -> None:
        self.sim.deliver_data(self.id, pkt)

    def wire_size(self, payload: int, extra: int = 0) -> int:
        return payload + 20 + self.data_header + extra


class SendBuffer:
    """Per-destination FIFO of data packets awaiting a route, bounded in total."""

    def __init__(self, owner: RoutingProtocol, capacity: int = SEND_BUFFER):
        self.owner = owner
        self.capacity = capacity
        self.by_dest: dict[int, list[Packet]] = {}
        self.size = 0

    def add(self, pkt: Packet) -> None:
        if self.size >= self.capacity:
            # drop the oldest packet of the longest queue
            dest = max(self.by_dest, key=lambda d: (len(self.by_dest[d]), -d))
            old = self.by_dest[dest].pop(0)
            if not self.by_dest[dest]:
                del self.by_dest[dest]
            self.size -= 1
            self.owner.drop(old, "BUF")
        self.by_dest.setdefault(pkt.dst, []).append(pkt)
        self.size += 1

    def pending(self, dest: int) -> bool:
        return dest in self.by_dest

    def take(self, dest: int) -> list[Packet]:
        pkts = self.by_dest.pop(dest, [])
        self.size -= len(pkts)
        return pkts

    def drop_all(self, dest: int, reason: str) -> None:
        for p in self.take(dest):
            self.owner.drop(p, reason)

    def __len__(self):
        return self.size

    def packets(self):
        for lst in self.by_dest.values():
            yield from lst


def is_data(pkt: Packet) -> bool:
    return pkt.kind == CBR
