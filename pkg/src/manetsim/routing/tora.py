"""TORA-lite: destination-rooted heights with Gafni-Bertsekas full reversal.

Heights are ``(level, node_id)`` pairs compared lexicographically, one per
destination. A query flood (QRY) sets the route-required flag; the destination
answers with an update (UPD) wave that assigns ``level = hop distance``. A node
left without a lower neighbour raises its level above every neighbour and
announces it. There is no IMEP and no partial reversal. Data packets carry the
sender's level so receivers keep their neighbour view fresh.
"""

from __future__ import annotations

from ..net import BROADCAST, CBR
from .base import PRIME, RoutingProtocol, SendBuffer

NET_TRAVERSAL_TIME = 2.8
QRY_RETRIES = 3


class ToraLite(RoutingProtocol):
    name = "TORA"
    data_header = 8

    def __init__(self, node, sim):
        super().__init__(node, sim)
        self.level: dict[int, int | None] = {node: 0}
        # dest -> {neighbour: level}
        self.nbr: dict[int, dict[int, int]] = {}
        self.rr: set[int] = set()
        self.seen: set[tuple[int, int]] = set()
        self.qid = 0
        self.buffer = SendBuffer(self)
        self.discovery: dict[int, int] = {}
        self.level_cap = max(32, 2 * sim.n_nodes)

    # ------------------------------------------------------------ heights

    def height(self, dest):
        lv = self.level.get(dest)
        return None if lv is None else (lv, self.id)

    def downstream(self, dest) -> list[int]:
        h = self.height(dest)
        if h is None:
            return []
        nb = self.nbr.get(dest, {})
        return sorted(n for n, lv in nb.items() if (lv, n) < h)

    def next_hop(self, dest):
        if dest == self.id:
            return None
        h = self.height(dest)
        if h is None:
            return None
        best = None
        for n, lv in self.nbr.get(dest, {}).items():
            cand = (lv, n)
            if cand < h and (best is None or cand < best):
                best = cand
        return None if best is None else best[1]

    def table_rows(self):
        rows = []
        for d in sorted(self.level):
            if d == self.id:
                continue
            nh = self.next_hop(d)
            if nh is not None:
                rows.append((d, nh, self.level[d]))
        return rows

    def _announce(self, dest):
        self.emit(self.control("TORA_UPD", BROADCAST, (dest, self.level.get(dest))))

    def reverse(self, dest) -> None:
        """Full reversal: rise above every known neighbour (or give up)."""
        if dest == self.id:
            return
        levels = list(self.nbr.get(dest, {}).values())
        new = max(levels) + 1 if levels else None
        if new is not None and new > self.level_cap:
            new = None
        self.level[dest] = new
        self._announce(dest)

    # ------------------------------------------------------------ query

    def query(self, dest):
        tries = self.discovery.get(dest, 0)
        self.discovery[dest] = tries
        self.qid += 1
        self.seen.add((self.id, self.qid))
        self.rr.add(dest)
        self.emit(self.control("TORA_QRY", BROADCAST, (dest, self.id, self.qid)))
        self.eng.after(NET_TRAVERSAL_TIME * 2 ** tries, self._qry_timeout, dest, tries)

    def _qry_timeout(self, dest, tries):
        if self.discovery.get(dest) != tries:
            return
        if self.next_hop(dest) is not None:
            del self.discovery[dest]
            self._flush(dest)
            return
        if tries == PRIME and not self.buffer.pending(dest):
            del self.discovery[dest]
            self.rr.discard(dest)
            return
        if tries < QRY_RETRIES:
            self.discovery[dest] = tries + 1
            self.query(dest)
        else:
            del self.discovery[dest]
            self.rr.discard(dest)
            self.buffer.drop_all(dest, "RETRY")

    def prime_route(self, dest):
        if dest != self.id and self.next_hop(dest) is None and dest not in self.discovery:
            self.discovery[dest] = PRIME
            self.query(dest)

    def _flush(self, dest):
        if self.next_hop(dest) is None:
            return
        for p in self.buffer.take(dest):
            self._send(p)

    # ------------------------------------------------------------ data

    def _send(self, pkt) -> bool:
        nh = self.next_hop(pkt.dst)
        if nh is None:
            return False
        pkt.hdr = self.level[pkt.dst]
        self.forward(pkt, nh)
        return True

    def on_data_to_send(self, pkt):
        pkt.size = self.wire_size(pkt.payload)
        if self._send(pkt):
            return
        self.buffer.add(pkt)
        if pkt.dst not in self.discovery:
            self.query(pkt.dst)

    def _relay(self, pkt, prev_hop):
        dest = pkt.dst
        if pkt.hdr is not None:
            self.nbr.setdefault(dest, {})[prev_hop] = pkt.hdr
        if self._send(pkt):
            return
        if self.level.get(dest) is not None and self.nbr.get(dest):
            self.reverse(dest)
            if self._send(pkt):
                return
        self.drop(pkt, "NRTE")

    # ------------------------------------------------------------ receive

    def on_packet(self, pkt, prev_hop):
        kind = pkt.kind
        if kind == CBR:
            if pkt.dst == self.id:
                self.deliver(pkt)
            else:
                self._relay(pkt, prev_hop)
        elif kind == "TORA_QRY":
            self._on_qry(pkt)
        elif kind == "TORA_UPD":
            self._on_upd(pkt, prev_hop)

    def _on_qry(self, pkt):
        dest, origin, qid = pkt.hdr
        key = (origin, qid)
        if key in self.seen:
            return
        self.seen.add(key)
        if self.level.get(dest) is not None:
            self._announce(dest)
            return
        self.rr.add(dest)
        self.emit(pkt.copy(), BROADCAST, forwarded=True)

    def _on_upd(self, pkt, prev_hop):
        dest, lv = pkt.hdr
        nb = self.nbr.setdefault(dest, {})
        if lv is None:
            nb.pop(prev_hop, None)
        else:
            nb[prev_hop] = lv
        if dest == self.id:
            return
        if dest in self.rr:
            if nb:
                self.level[dest] = min(nb.values()) + 1
                self.rr.discard(dest)
                self._announce(dest)
                if dest in self.discovery:
                    del self.discovery[dest]
                self._flush(dest)
            return
        if self.level.get(dest) is not None and not self.downstream(dest):
            self.reverse(dest)

    # ------------------------------------------------------------ failures

    def on_link_failure(self, pkt, neighbor):
        lost = []
        for dest, nb in self.nbr.items():
            if nb.pop(neighbor, None) is not None:
                lost.append(dest)
        for dest in lost:
            if dest != self.id and self.level.get(dest) is not None and not self.downstream(dest):
                if dest != pkt.dst or pkt.kind != CBR:
                    self.reverse(dest)
        if pkt.kind != CBR:
            self.drop(pkt, "LINK")
            return
        dest = pkt.dst
        if self._send(pkt):
            return
        if self.level.get(dest) is not None and self.nbr.get(dest):
            self.reverse(dest)
            if self._send(pkt):
                return
        if pkt.src == self.id:
            self.buffer.add(pkt)
            if dest not in self.discovery:
                self.query(dest)
        else:
            if self.level.get(dest) is not None:
                self.level[dest] = None
                self._announce(dest)
            self.drop(pkt, "LINK")
