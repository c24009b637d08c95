"""DSDV: proactive Bellman-Ford tables ordered by destination sequence numbers."""

from __future__ import annotations

import math

from ..net import BROADCAST, CBR
from .base import SIZES, RoutingProtocol

FULL_DUMP_INTERVAL = 15.0
INCREMENTAL_INTERVAL = 1.0
NEIGHBOR_TIMEOUT = 3 * FULL_DUMP_INTERVAL
INF = math.inf


class Entry:
    __slots__ = ("next", "metric", "seq", "changed")

    def __init__(self, nxt, metric, seq):
        self.next = nxt
        self.metric = metric
        self.seq = seq
        self.changed = True

    def __repr__(self):
        return f"Entry(next={self.next}, metric={self.metric}, seq={self.seq})"


def advert_size(n_entries: int) -> int:
    return SIZES["DSDV_UPD"] + 12 * n_entries


class Dsdv(RoutingProtocol):
    name = "DSDV"

    def __init__(self, node, sim):
        super().__init__(node, sim)
        self.seq = 0
        self.table: dict[int, Entry] = {node: Entry(node, 0, 0)}
        self.last_heard: dict[int, float] = {}
        self.last_advert = -INF
        self._inc_pending = False

    def start(self):
        jitter = self.sim.jitter(self.id).uniform(0.0, INCREMENTAL_INTERVAL)
        self.eng.after(jitter, self.on_tick, None)

    # ------------------------------------------------------------ adverts

    def on_tick(self, now):
        self.periodic_update()
        self.eng.after(FULL_DUMP_INTERVAL, self.on_tick, None)

    def periodic_update(self):
        now = self.eng.now
        for nb, t in list(self.last_heard.items()):
            if now - t > NEIGHBOR_TIMEOUT:
                del self.last_heard[nb]
                self._break(nb)
        self.seq += 2
        me = self.table[self.id]
        me.seq = self.seq
        entries = tuple((d, e.metric, e.seq) for d, e in sorted(self.table.items()))
        for e in self.table.values():
            e.changed = False
        self._send(entries)

    def _send(self, entries):
        self.last_advert = self.eng.now
        self.emit(self.control("DSDV_UPD", BROADCAST, entries, advert_size(len(entries))))

    def _trigger(self):
        if self._inc_pending:
            return
        self._inc_pending = True
        at = max(self.eng.now, self.last_advert + INCREMENTAL_INTERVAL)
        self.eng.at(at, self._incremental)

    def _incremental(self):
        self._inc_pending = False
        changed = [(d, e.metric, e.seq) for d, e in sorted(self.table.items()) if e.changed]
        if not changed:
            return
        for e in self.table.values():
            e.changed = False
        self._send(tuple(changed))

    def apply_update(self, entries, nb: int) -> bool:
        """Merge a neighbour's advert; returns True if the table changed."""
        self.last_heard[nb] = self.eng.now
        me = self.id
        table = self.table
        changed = False
        for dest, metric, seq in entries:
            if dest == me:
                continue
            m = metric + 1
            cur = table.get(dest)
            if cur is None:
                if m == INF:
                    continue
                table[dest] = Entry(nb, m, seq)
                changed = True
            elif seq > cur.seq or (seq == cur.seq and m < cur.metric):
                cur.next, cur.metric, cur.seq = nb, m, seq
                cur.changed = True
                changed = True
        if changed:
            self._trigger()
        return changed

    def _break(self, nb: int) -> bool:
        hit = False
        for dest, e in self.table.items():
            if dest != self.id and e.next == nb and e.metric != INF:
                e.metric = INF
                e.seq += 1
                e.changed = True
                hit = True
        if hit:
            self._trigger()
        return hit

    # ------------------------------------------------------------ routing

    def next_hop(self, dest):
        e = self.table.get(dest)
        if e is None or e.metric == INF or dest == self.id:
            return None
        return e.next

    def table_rows(self):
        return [(d, e.next, e.metric) for d, e in sorted(self.table.items())
                if d != self.id and e.metric != INF]

    def on_data_to_send(self, pkt):
        pkt.size = self.wire_size(pkt.payload)
        nh = self.next_hop(pkt.dst)
        if nh is None:
            self.drop(pkt, "NRTE")
        else:
            self.forward(pkt, nh)

    def on_packet(self, pkt, prev_hop):
        if pkt.kind == CBR:
            if pkt.dst == self.id:
                self.deliver(pkt)
                return
            nh = self.next_hop(pkt.dst)
            if nh is None:
                self.drop(pkt, "NRTE")
            else:
                self.forward(pkt, nh)
        elif pkt.kind == "DSDV_UPD":
            self.apply_update(pkt.hdr, prev_hop)

    def on_link_failure(self, pkt, neighbor):
        self.last_heard.pop(neighbor, None)
        self._break(neighbor)
        self.drop(pkt, "LINK")
