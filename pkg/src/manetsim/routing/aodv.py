"""AODV: on-demand distance vector with destination sequence numbers.

Link breaks are learned from the MAC unicast failure signal; there are no
hello beacons and no local repair.
"""

from __future__ import annotations

from ..net import BROADCAST, CBR, MAC, RECV
from .base import PRIME, RoutingProtocol, SendBuffer

ACTIVE_ROUTE_TIMEOUT = 10.0
MY_ROUTE_TIMEOUT = 2 * ACTIVE_ROUTE_TIMEOUT
NET_TRAVERSAL_TIME = 2.8
RREQ_RETRIES = 3


class Route:
    __slots__ = ("next", "hops", "seq", "valid_seq", "expires", "valid", "precursors")

    def __init__(self, nxt, hops, seq, valid_seq, expires):
        self.next = nxt
        self.hops = hops
        self.seq = seq
        self.valid_seq = valid_seq
        self.expires = expires
        self.valid = True
        self.precursors: set[int] = set()

    def __repr__(self):
        return (f"Route(next={self.next}, hops={self.hops}, seq={self.seq}, "
                f"valid={self.valid}, expires={self.expires})")


class Aodv(RoutingProtocol):
    name = "AODV"

    def __init__(self, node, sim):
        super().__init__(node, sim)
        self.seq = 0
        self.rreq_id = 0
        self.table: dict[int, Route] = {}
        self.seen: set[tuple[int, int]] = set()
        self.buffer = SendBuffer(self)
        # dest -> number of retries already used
        self.discovery: dict[int, int] = {}

    # ------------------------------------------------------------ table

    def route(self, dest):
        r = self.table.get(dest)
        if r is not None and r.valid and r.expires > self.eng.now:
            return r
        return None

    def next_hop(self, dest):
        r = self.route(dest)
        return None if r is None else r.next

    def table_rows(self):
        now = self.eng.now
        return [(d, r.next, r.hops) for d, r in sorted(self.table.items())
                if r.valid and r.expires > now]

    def _update(self, dest, nxt, hops, seq, expires) -> None:
        if dest == self.id:
            return
        r = self.table.get(dest)
        if r is None:
            self.table[dest] = Route(nxt, hops, 0 if seq is None else seq, seq is not None, expires)
            return
        live = r.valid and r.expires > self.eng.now
        if seq is None:
            # bare neighbour knowledge carries no sequence number
            if not live or hops < r.hops:
                r.next, r.hops, r.valid = nxt, hops, True
                r.expires = expires
            elif r.next == nxt and r.hops == hops:
                r.expires = max(r.expires, expires)
            return
        fresher = (
            not r.valid_seq
            or seq > r.seq
            or (seq == r.seq and (not live or hops < r.hops))
        )
        if fresher:
            r.next, r.hops, r.seq, r.valid_seq, r.valid = nxt, hops, seq, True, True
            r.expires = expires
        elif seq == r.seq and r.next == nxt and hops == r.hops:
            r.expires = max(r.expires, expires)

    # ------------------------------------------------------------ discovery

    def discover(self, dest: int) -> None:
        tries = self.discovery.get(dest, 0)
        self.discovery[dest] = tries
        self.seq += 1
        self.rreq_id += 1
        known = self.table.get(dest)
        dseq = known.seq if known is not None and known.valid_seq else -1
        self.seen.add((self.id, self.rreq_id))
        hdr = (self.id, self.seq, self.rreq_id, dest, dseq, 0)
        self.emit(self.control("AODV_RREQ", BROADCAST, hdr))
        self.eng.after(NET_TRAVERSAL_TIME * 2 ** tries, self._rreq_timeout, dest, tries)

    def _rreq_timeout(self, dest, tries):
        if self.discovery.get(dest) != tries:
            return
        if self.route(dest) is not None:
            del self.discovery[dest]
            self._flush(dest)
            return
        if tries == PRIME and not self.buffer.pending(dest):
            del self.discovery[dest]
            return
        if tries < RREQ_RETRIES:
            self.discovery[dest] = tries + 1
            self.discover(dest)
        else:
            del self.discovery[dest]
            self.buffer.drop_all(dest, "RETRY")

    def prime_route(self, dest):
        if dest != self.id and self.route(dest) is None and dest not in self.discovery:
            self.discovery[dest] = PRIME
            self.discover(dest)

    def _flush(self, dest):
        r = self.route(dest)
        if r is None:
            return
        for p in self.buffer.take(dest):
            r.expires = max(r.expires, self.eng.now + ACTIVE_ROUTE_TIMEOUT)
            self.forward(p, r.next)

    # ------------------------------------------------------------ data

    def on_data_to_send(self, pkt):
        pkt.size = self.wire_size(pkt.payload)
        r = self.route(pkt.dst)
        if r is not None:
            r.expires = max(r.expires, self.eng.now + ACTIVE_ROUTE_TIMEOUT)
            self.forward(pkt, r.next)
            return
        self.buffer.add(pkt)
        if pkt.dst not in self.discovery:
            self.discover(pkt.dst)

    def _forward_data(self, pkt, prev_hop):
        r = self.route(pkt.dst)
        if r is None:
            self.drop(pkt, "NRTE")
            known = self.table.get(pkt.dst)
            seq = known.seq if known is not None else 0
            self.emit(self.control("AODV_RERR", BROADCAST, ((pkt.dst, seq),)))
            return
        now = self.eng.now
        r.expires = max(r.expires, now + ACTIVE_ROUTE_TIMEOUT)
        back = self.table.get(pkt.src)
        if back is not None and back.valid and back.next == prev_hop:
            back.expires = max(back.expires, now + ACTIVE_ROUTE_TIMEOUT)
        self.forward(pkt, r.next)

    # ------------------------------------------------------------ receive

    def on_packet(self, pkt, prev_hop):
        kind = pkt.kind
        if kind == "AODV_RREQ":
            self._on_rreq(pkt, prev_hop)
        elif kind == CBR:
            if pkt.dst == self.id:
                self.deliver(pkt)
            else:
                self._forward_data(pkt, prev_hop)
        elif kind == "AODV_RREP":
            self._on_rrep(pkt, prev_hop)
        elif kind == "AODV_RERR":
            self._on_rerr(pkt, prev_hop)

    def _on_rreq(self, pkt, prev_hop):
        origin = pkt.hdr[0]
        if origin == self.id:
            return
        now = self.eng.now
        exp = now + ACTIVE_ROUTE_TIMEOUT
        self._refresh_neighbor(prev_hop, exp)
        key = (origin, pkt.hdr[2])
        if key not in self.seen:
            self._first_rreq(pkt, prev_hop, key, now, exp)

    def _refresh_neighbor(self, nb_id, exp):
        nb = self.table.get(nb_id)
        # hot path: refreshing an existing one-hop route (same result as _update)
        if nb is not None and nb.valid and nb.next == nb_id and nb.hops == 1:
            if nb.expires < exp:
                nb.expires = exp
        else:
            self._update(nb_id, nb_id, 1, None, exp)

    def _first_rreq(self, pkt, prev_hop, key, now, exp):
        origin, oseq, rid, dest, dseq, hops = pkt.hdr
        self.seen.add(key)
        self._update(origin, prev_hop, hops + 1, oseq, exp)
        if dest == self.id:
            self.seq = max(self.seq, dseq) + 1
            hdr = (origin, self.id, self.seq, 0, MY_ROUTE_TIMEOUT)
            self.emit(self.control("AODV_RREP", origin, hdr), prev_hop)
            return
        r = self.route(dest)
        if r is not None and r.valid_seq and dseq >= 0 and r.seq >= dseq:
            r.precursors.add(prev_hop)
            back = self.table.get(origin)
            if back is not None:
                back.precursors.add(r.next)
            hdr = (origin, dest, r.seq, r.hops, r.expires - now)
            self.emit(self.control("AODV_RREP", origin, hdr), prev_hop)
            return
        self.emit(pkt.copy(hdr=(origin, oseq, rid, dest, dseq, hops + 1)), BROADCAST,
                  forwarded=True)

    def _on_rrep(self, pkt, prev_hop):
        origin, dest, dseq, hops, lifetime = pkt.hdr
        now = self.eng.now
        self._update(prev_hop, prev_hop, 1, None, now + ACTIVE_ROUTE_TIMEOUT)
        self._update(dest, prev_hop, hops + 1, dseq, now + lifetime)
        if origin == self.id:
            if dest in self.discovery:
                del self.discovery[dest]
            self._flush(dest)
            return
        back = self.route(origin)
        if back is None:
            self.drop(pkt, "NRTE")
            return
        fwd = self.table.get(dest)
        if fwd is not None:
            fwd.precursors.add(back.next)
        back.precursors.add(prev_hop)
        self.emit(pkt.copy(hdr=(origin, dest, dseq, hops + 1, lifetime)), back.next,
                  forwarded=True)

    def _on_rerr(self, pkt, prev_hop):
        affected = []
        for dest, seq in pkt.hdr:
            r = self.table.get(dest)
            if r is not None and r.valid and r.next == prev_hop:
                r.valid = False
                r.seq = max(r.seq, seq)
                r.valid_seq = True
                if r.precursors:
                    affected.append((dest, r.seq))
                    r.precursors.clear()
        if affected:
            self.emit(self._rerr(affected))

    def _rerr(self, entries):
        entries = tuple(entries)
        return self.control("AODV_RERR", BROADCAST, entries, size=24 + 8 * len(entries))

    # ------------------------------------------------------------ failures

    def handle_link_failure(self, neighbor: int) -> list[tuple[int, int]]:
        """Invalidate routes through ``neighbor``; RERR to precursors if any."""
        broken = []
        notify = False
        for dest, r in self.table.items():
            if r.valid and r.next == neighbor:
                r.valid = False
                r.seq += 1
                broken.append((dest, r.seq))
                if r.precursors:
                    notify = True
                    r.precursors.clear()
        if broken and notify:
            self.emit(self._rerr(broken))
        return broken

    def on_link_failure(self, pkt, neighbor):
        self.handle_link_failure(neighbor)
        if pkt.kind == CBR and pkt.src == self.id:
            self.buffer.add(pkt)
            if pkt.dst not in self.discovery:
                self.discover(pkt.dst)
        else:
            self.drop(pkt, "LINK")


def rreq_flood(insts):
    """Receive function for every receiver of one RREQ broadcast, in one loop.

    Same effect and trace order as calling ``_on_rreq`` per receiver; floods
    dominate run time in dense networks, so the per-call overhead matters.
    Tables and seen-sets are bound once per simulation.
    """
    tables = [a.table for a in insts]
    seens = [a.seen for a in insts]

    def receive(receivers, pkt, sender, append, now):
        origin = pkt.hdr[0]
        key = (origin, pkt.hdr[2])
        exp = now + ACTIVE_ROUTE_TIMEOUT
        if append is not None:
            uid, kind, size, src, dst = pkt.uid, pkt.kind, pkt.size, pkt.src, pkt.dst
        for r in receivers:
            if append is not None:
                append((now, RECV, MAC, r, uid, kind, size, src, dst, ""))
            if r == origin:
                continue
            nb = tables[r].get(sender)
            if nb is not None and nb.hops == 1 and nb.next == sender and nb.valid:
                if nb.expires < exp:
                    nb.expires = exp
            else:
                insts[r]._update(sender, sender, 1, None, exp)
            if key not in seens[r]:
                insts[r]._first_rreq(pkt, sender, key, now, exp)

    return receive


Aodv.floods = {"AODV_RREQ": rreq_flood}
