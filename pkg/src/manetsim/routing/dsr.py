"""DSR: source routing with a path cache.

Only the target answers a route request, and only its first copy; cached
replies and packet salvaging are not implemented.
"""

from __future__ import annotations

from ..net import BROADCAST, CBR, MAC, RECV
from .base import PRIME, SIZES, RoutingProtocol, SendBuffer

NET_TRAVERSAL_TIME = 2.8
RREQ_RETRIES = 3


class Dsr(RoutingProtocol):
    name = "DSR"

    def __init__(self, node, sim):
        super().__init__(node, sim)
        self.rreq_id = 0
        self.cache: dict[int, list[tuple[int, ...]]] = {}
        self.seen: set[tuple[int, int]] = set()
        self.buffer = SendBuffer(self)
        self.discovery: dict[int, int] = {}

    # ------------------------------------------------------------ cache

    def add_route(self, route) -> None:
        """Cache ``route`` (starting at this node) and every prefix of it."""
        route = tuple(route)
        if len(route) < 2 or route[0] != self.id or len(set(route)) != len(route):
            return
        for k in range(1, len(route)):
            sub = route[: k + 1]
            lst = self.cache.setdefault(route[k], [])
            if sub not in lst:
                lst.append(sub)

    def best_route(self, dest):
        lst = self.cache.get(dest)
        if not lst:
            return None
        return min(lst, key=lambda r: (len(r), r))

    def next_hop(self, dest):
        r = self.best_route(dest)
        return None if r is None else r[1]

    def table_rows(self):
        rows = []
        for d in sorted(self.cache):
            r = self.best_route(d)
            if r is not None:
                rows.append((d, r[1], len(r) - 1))
        return rows

    def purge_link(self, a: int, b: int) -> None:
        cache = self.cache
        for dest in list(cache):
            lst = cache[dest]
            # membership tests are cheap and rule out most routes
            keep = [r for r in lst if not (a in r and b in r and _uses_link(r, a, b))]
            if not keep:
                del cache[dest]
            elif len(keep) != len(lst):
                cache[dest] = keep

    # ------------------------------------------------------------ discovery

    def discover(self, dest):
        tries = self.discovery.get(dest, 0)
        self.discovery[dest] = tries
        self.rreq_id += 1
        self.seen.add((self.id, self.rreq_id))
        path = (self.id,)
        hdr = (self.id, self.rreq_id, dest, path)
        self.emit(self.control("DSR_RREQ", BROADCAST, hdr, SIZES["DSR_RREQ"] + 4 * len(path)))
        self.eng.after(NET_TRAVERSAL_TIME * 2 ** tries, self._rreq_timeout, dest, tries)

    def _rreq_timeout(self, dest, tries):
        if self.discovery.get(dest) != tries:
            return
        if self.best_route(dest) is not None:
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
        if dest != self.id and self.best_route(dest) is None and dest not in self.discovery:
            self.discovery[dest] = PRIME
            self.discover(dest)

    def _flush(self, dest):
        if self.best_route(dest) is None:
            return
        for p in self.buffer.take(dest):
            self._source_send(p)

    # ------------------------------------------------------------ data

    def _source_send(self, pkt) -> bool:
        route = self.best_route(pkt.dst)
        if route is None:
            return False
        pkt.hdr = (route, 1)
        pkt.size = self.wire_size(pkt.payload, 4 + 4 * len(route))
        self.forward(pkt, route[1])
        return True

    def on_data_to_send(self, pkt):
        if self._source_send(pkt):
            return
        self.buffer.add(pkt)
        if pkt.dst not in self.discovery:
            self.discover(pkt.dst)

    # ------------------------------------------------------------ receive

    def on_packet(self, pkt, prev_hop):
        kind = pkt.kind
        if kind == CBR:
            if pkt.dst == self.id:
                self.deliver(pkt)
                return
            route, pos = pkt.hdr
            if pos + 1 >= len(route) or route[pos] != self.id:
                self.drop(pkt, "NRTE")
                return
            pkt.hdr = (route, pos + 1)
            self.forward(pkt, route[pos + 1])
        elif kind == "DSR_RREQ":
            self._on_rreq(pkt)
        elif kind == "DSR_RREP":
            self._on_rrep(pkt)
        elif kind == "DSR_RERR":
            self._on_rerr(pkt)

    def _on_rreq(self, pkt):
        origin, rid, target, path = pkt.hdr
        me = self.id
        if origin == me or me in path:
            return
        key = (origin, rid)
        if key not in self.seen:
            self._first_rreq(pkt, key)

    def _first_rreq(self, pkt, key):
        origin, rid, target, path = pkt.hdr
        me = self.id
        self.seen.add(key)
        full = path + (me,)
        self.add_route(full[::-1])
        if target == me:
            back = full[::-1]
            hdr = (full, back, 1)
            self.emit(self.control("DSR_RREP", origin, hdr, SIZES["DSR_RREP"] + 4 * len(full)),
                      back[1])
            return
        self.emit(pkt.copy(hdr=(origin, rid, target, full), size=pkt.size + 4), BROADCAST,
                  forwarded=True)

    def _on_rrep(self, pkt):
        full, back, pos = pkt.hdr
        me = self.id
        if back[pos] != me:
            return
        self.add_route(full[full.index(me):])
        self.add_route(back[pos:])
        if pos == len(back) - 1:
            target = full[-1]
            if target in self.discovery:
                del self.discovery[target]
            self._flush(target)
            return
        self.emit(pkt.copy(hdr=(full, back, pos + 1)), back[pos + 1], forwarded=True)

    def _on_rerr(self, pkt):
        a, b, back, pos = pkt.hdr
        self.purge_link(a, b)
        if pos == len(back) - 1:
            return
        self.emit(pkt.copy(hdr=(a, b, back, pos + 1)), back[pos + 1], forwarded=True)

    # ------------------------------------------------------------ failures

    def on_link_failure(self, pkt, neighbor):
        me = self.id
        self.purge_link(me, neighbor)
        if pkt.kind != CBR:
            self.drop(pkt, "LINK")
            return
        if pkt.src == me:
            if not self._source_send(pkt):
                self.buffer.add(pkt)
                if pkt.dst not in self.discovery:
                    self.discover(pkt.dst)
            return
        route, pos = pkt.hdr
        mine = route.index(me)
        back = route[: mine + 1][::-1]
        if len(back) > 1:
            hdr = (me, neighbor, back, 1)
            self.emit(self.control("DSR_RERR", pkt.src, hdr), back[1])
        self.drop(pkt, "LINK")


def _uses_link(route, a, b) -> bool:
    for x, y in zip(route, route[1:]):
        if (x == a and y == b) or (x == b and y == a):
            return True
    return False


def rreq_flood(insts):
    """Batch form of ``_on_rreq`` over all receivers of one broadcast."""
    seens = [a.seen for a in insts]

    def receive(receivers, pkt, sender, append, now):
        origin, rid, _, path = pkt.hdr
        key = (origin, rid)
        uid, kind, size, src, dst = pkt.uid, pkt.kind, pkt.size, pkt.src, pkt.dst
        for r in receivers:
            if append is not None:
                append((now, RECV, MAC, r, uid, kind, size, src, dst, ""))
            if r == origin or r in path:
                continue
            if key not in seens[r]:
                insts[r]._first_rreq(pkt, key)

    return receive


Dsr.floods = {"DSR_RREQ": rreq_flood}
