"""Routing overhead, delivery ratio, end-to-end delay and throughput.

Everything here is computed from trace events (or delivery records) and never
from simulator internals. Trace line format, one event per line::

    time action layer node pkt_id pkt_kind size src dst [reason]

``time`` is written with ``repr`` so it round-trips exactly. The optional
``reason`` token only appears on DROP lines. Lines starting with ``#`` are
header/comment lines; the writer emits ``# key=value`` pairs there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

from .net import AGT, CBR, DROP, FWD, MAC, MRP_KIND, RECV, RTR, SEND

ACTIONS = (SEND, RECV, FWD, DROP)
LAYERS = (AGT, RTR, MAC)
NO_TRAFFIC = None


class TraceEvent(NamedTuple):
    time: float
    action: str
    layer: str
    node: int
    pkt_id: int
    kind: str
    size: int
    src: int
    dst: int
    reason: str = ""


class TraceFormatError(ValueError):
    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


def kind_protocol(kind: str) -> str | None:
    """Protocol that owns a control kind (``AODV_RREQ`` -> ``AODV``)."""
    head, sep, _ = kind.partition("_")
    return head if sep else None


def is_control(kind: str) -> bool:
    return kind != CBR and kind != MRP_KIND


# ------------------------------------------------------------------ trace io


def format_event(e) -> str:
    line = f"{e[0]!r} {e[1]} {e[2]} {e[3]} {e[4]} {e[5]} {e[6]} {e[7]} {e[8]}"
    if e[1] == DROP and e[9]:
        line += f" {e[9]}"
    return line


def write_trace(events: Iterable, fh, header: dict | None = None) -> None:
    if header:
        for k, v in header.items():
            fh.write(f"# {k}={v}\n")
    fh.write("\n".join(format_event(e) for e in events))
    fh.write("\n")


def parse_line(line: str, lineno: int) -> TraceEvent:
    parts = line.split()
    if len(parts) not in (9, 10):
        raise TraceFormatError(lineno, f"expected 9 or 10 fields, got {len(parts)}")
    try:
        t = float(parts[0])
        node, pid, size, src, dst = (int(parts[i]) for i in (3, 4, 6, 7, 8))
    except ValueError as exc:
        raise TraceFormatError(lineno, str(exc)) from None
    action, layer = parts[1], parts[2]
    if action not in ACTIONS:
        raise TraceFormatError(lineno, f"unknown action {action!r}")
    if layer not in LAYERS:
        raise TraceFormatError(lineno, f"unknown layer {layer!r}")
    if len(parts) == 10 and action != DROP:
        raise TraceFormatError(lineno, "only DROP lines carry a reason")
    if not (t >= 0 and math.isfinite(t)):
        raise TraceFormatError(lineno, f"bad time {parts[0]!r}")
    reason = parts[9] if len(parts) == 10 else ""
    return TraceEvent(t, action, layer, node, pid, parts[5], size, src, dst, reason)


def read_trace(path) -> tuple[dict, list[TraceEvent]]:
    header: dict[str, str] = {}
    events: list[TraceEvent] = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, sep, val = line[1:].strip().partition("=")
                if sep:
                    header[key.strip()] = val.strip()
                continue
            events.append(parse_line(line, lineno))
    return header, events


# ------------------------------------------------------------------ metrics


def compute_roh(trace: Iterable, exclude_standby: str | None = None) -> int:
    """Routing overhead: RTR SEND/FWD lines of control packets.

    With ``exclude_standby`` set to the initially active protocol of an MRP
    run, control packets of whichever protocol is on standby at the time are
    skipped; MRP switch lines (``pkt_kind`` MRP, ``src``/``dst`` protocol codes)
    mark the swaps.
    """
    if exclude_standby is None:
        n = 0
        for e in trace:
            if e[2] == RTR and (e[1] == SEND or e[1] == FWD) and e[5] != CBR and e[5] != MRP_KIND:
                n += 1
        return n
    from .routing import CODE_PROTOCOLS

    active = exclude_standby
    n = 0
    for e in trace:
        if e[5] == MRP_KIND:
            active = CODE_PROTOCOLS[e[8]]
            continue
        if e[2] == RTR and (e[1] == SEND or e[1] == FWD) and e[5] != CBR:
            if kind_protocol(e[5]) == active:
                n += 1
    return n


def compute_pdr(pkt_s: int, pkt_r: int):
    """Delivered over sent, or ``NO_TRAFFIC`` when nothing was sent."""
    if pkt_s < 0 or pkt_r < 0:
        raise ValueError("packet counts must be non-negative")
    if pkt_s == 0:
        return NO_TRAFFIC
    if pkt_r > pkt_s:
        raise ValueError(f"received ({pkt_r}) exceeds sent ({pkt_s})")
    return pkt_r / pkt_s


def compute_avg_e2e_delay(records: Iterable):
    """Mean of (R_a - S_a) over completed records.

    Accepts ``(sent, received)`` pairs or objects with ``sent``/``received``;
    records without a receive time are skipped.
    """
    total = 0.0
    m = 0
    for r in records:
        if isinstance(r, tuple):
            s, rcv = r
        else:
            s, rcv = r.sent, r.received
        if rcv is None:
            continue
        d = rcv - s
        if d < 0:
            raise ValueError(f"receive time {rcv} precedes send time {s}")
        total += d
        m += 1
    if m == 0:
        return NO_TRAFFIC
    return total / m


def compute_throughput(records: Iterable, duration: float) -> float:
    """Delivered payload bits per second over ``duration``.

    ``records`` yields objects with ``payload``/``received`` or
    ``(payload_bytes, received)`` pairs.
    """
    if not duration > 0:
        raise ValueError(f"duration must be positive, got {duration}")
    bits = 0
    for r in records:
        if isinstance(r, tuple):
            payload, rcv = r
        else:
            payload, rcv = r.payload, r.received
        if rcv is not None:
            bits += payload * 8
    return bits / duration


@dataclass
class MetricsReport:
    scenario_id: str
    seed: int
    protocol: str
    n_nodes: int
    speed: float
    roh: int
    pkt_s: int
    pkt_r: int
    pdr: float | None
    delay_s: float | None
    throughput_bps: float

    def __post_init__(self):
        if self.pkt_r > self.pkt_s:
            raise ValueError(f"Pkt_R ({self.pkt_r}) > Pkt_S ({self.pkt_s})")

    @property
    def m(self) -> int:
        return self.pkt_r

    CSV_HEADER = ("scenario_id,seed,protocol,n_nodes,speed,R,Pkt_S,Pkt_R,PDR,delay_s,"
                  "throughput_bps")

    def csv_row(self) -> str:
        return ",".join([
            self.scenario_id, str(self.seed), self.protocol, str(self.n_nodes),
            repr(float(self.speed)), str(self.roh), str(self.pkt_s), str(self.pkt_r),
            _fmt(self.pdr), _fmt(self.delay_s), repr(float(self.throughput_bps)),
        ])

    @classmethod
    def from_csv_row(cls, row: str) -> "MetricsReport":
        f = row.strip().split(",")
        if len(f) != 11:
            raise ValueError(f"expected 11 columns, got {len(f)}")
        return cls(f[0], int(f[1]), f[2], int(f[3]), float(f[4]), int(f[5]), int(f[6]),
                   int(f[7]), _unfmt(f[8]), _unfmt(f[9]), float(f[10]))

    def matches(self, other: "MetricsReport", delay_tol: float = 1e-9) -> bool:
        if (self.roh, self.pkt_s, self.pkt_r) != (other.roh, other.pkt_s, other.pkt_r):
            return False
        if (self.delay_s is None) != (other.delay_s is None):
            return False
        if self.delay_s is not None and abs(self.delay_s - other.delay_s) > delay_tol:
            return False
        if (self.pdr is None) != (other.pdr is None):
            return False
        if self.pdr is not None and abs(self.pdr - other.pdr) > 1e-12:
            return False
        return math.isclose(self.throughput_bps, other.throughput_bps, rel_tol=1e-12, abs_tol=1e-9)


def _fmt(v) -> str:
    return "NA" if v is None else repr(float(v))


def _unfmt(s: str):
    return None if s == "NA" else float(s)


def report_from_trace(trace: Iterable, duration: float, scenario_id="run", seed=0,
                      protocol="?", n_nodes=0, speed=0.0,
                      exclude_standby: str | None = None) -> MetricsReport:
    """Single pass over the trace; all four metrics."""
    trace = list(trace)
    sent_at: dict[int, float] = {}
    pkt_r = 0
    delay_sum = 0.0
    bits = 0
    for e in trace:
        if e[2] != AGT or e[5] != CBR:
            continue
        if e[1] == SEND:
            sent_at[e[4]] = e[0]
        elif e[1] == RECV:
            pkt_r += 1
            delay_sum += e[0] - sent_at[e[4]]
            bits += e[6] * 8
    pkt_s = len(sent_at)
    return MetricsReport(
        scenario_id, seed, protocol, n_nodes, speed,
        compute_roh(trace, exclude_standby), pkt_s, pkt_r,
        compute_pdr(pkt_s, pkt_r), delay_sum / pkt_r if pkt_r else NO_TRAFFIC,
        bits / duration,
    )


def analyze_trace(path, duration: float | None = None) -> MetricsReport:
    """Recompute a run's :class:`MetricsReport` from its persisted trace."""
    header, events = read_trace(path)
    if duration is None:
        if "duration" not in header:
            raise ValueError("trace has no duration header; pass duration explicitly")
        duration = float(header["duration"])
    exclude = header.get("exclude_standby") or None
    return report_from_trace(
        events, duration,
        scenario_id=header.get("scenario_id", "run"),
        seed=int(header.get("seed", 0)),
        protocol=header.get("protocol", "?"),
        n_nodes=int(header.get("n_nodes", 0)),
        speed=float(header.get("speed", 0.0)),
        exclude_standby=exclude,
    )


# ------------------------------------------------------------------ windows


@dataclass
class MetricsWindow:
    start: float
    end: float
    pkt_s: int = 0
    pkt_r: int = 0
    delay_sum: float = 0.0
    rtr: int = 0
    rtr_by_protocol: dict = field(default_factory=dict)

    @property
    def pdr(self):
        return compute_pdr(self.pkt_s, self.pkt_r)

    @property
    def delay(self):
        return self.delay_sum / self.pkt_r if self.pkt_r else NO_TRAFFIC

    @property
    def no_traffic(self) -> bool:
        return self.pkt_s == 0

    def rtr_of(self, protocol: str) -> int:
        return self.rtr_by_protocol.get(protocol, 0)


def window_count(duration: float, epoch: float) -> int:
    return max(1, math.ceil(duration / epoch - 1e-9))


def windowed_metrics(trace: Iterable, epoch: float, duration: float) -> list[MetricsWindow]:
    """Split ``[0, duration]`` into epochs (last one closed).

    Data packets count in the window of their send time, receive included, so
    per-window PDR stays within [0, 1]; RTR transmissions count by their own
    time.
    """
    if not epoch > 0:
        raise ValueError(f"epoch must be positive, got {epoch}")
    k = window_count(duration, epoch)
    wins = [MetricsWindow(i * epoch, min((i + 1) * epoch, duration)) for i in range(k)]

    def idx(t):
        return min(int(t / epoch), k - 1)

    sent_at: dict[int, float] = {}
    for e in trace:
        if e[2] == AGT and e[5] == CBR:
            if e[1] == SEND:
                sent_at[e[4]] = e[0]
                wins[idx(e[0])].pkt_s += 1
            elif e[1] == RECV:
                s = sent_at[e[4]]
                w = wins[idx(s)]
                w.pkt_r += 1
                w.delay_sum += e[0] - s
        elif e[2] == RTR and (e[1] == SEND or e[1] == FWD) and is_control(e[5]):
            w = wins[idx(e[0])]
            w.rtr += 1
            p = kind_protocol(e[5])
            w.rtr_by_protocol[p] = w.rtr_by_protocol.get(p, 0) + 1
    return wins


def observe_window(events: Iterable, start: float, end: float, sent_at: dict) -> MetricsWindow:
    """Window ``[start, end)`` as seen at ``end`` from the events logged since
    ``start``; ``sent_at`` maps packet id to send time and is updated."""
    w = MetricsWindow(start, end)
    for e in events:
        if e[2] == AGT and e[5] == CBR:
            if e[1] == SEND:
                sent_at[e[4]] = e[0]
                if start <= e[0] < end:
                    w.pkt_s += 1
            elif e[1] == RECV:
                s = sent_at.get(e[4])
                if s is not None and start <= s < end:
                    w.pkt_r += 1
                    w.delay_sum += e[0] - s
        elif e[2] == RTR and (e[1] == SEND or e[1] == FWD) and is_control(e[5]):
            w.rtr += 1
            p = kind_protocol(e[5])
            w.rtr_by_protocol[p] = w.rtr_by_protocol.get(p, 0) + 1
    return w
