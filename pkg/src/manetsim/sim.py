"""One simulation run: wires engine, mobility, medium, protocols, traffic and MRP."""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .config import ScenarioConfig, protocol_label
from .engine import Engine, EventKind
from .metrics import (
    MetricsReport, NO_TRAFFIC, compute_pdr, write_trace,
)
from .mobility import Area, StaticMobility, export_trace_csv, make_mobility
from .mrp import MrpConfig, MrpSupervisor
from .net import CBR, DROP, RTR, Medium, RadioConfig, export_links_csv
from .rng import RngStream
from .routing import PROTOCOLS
from .traffic import Flow, Traffic, default_flows

TRACE_FORMAT = 1


@dataclass
class RunResult:
    config: ScenarioConfig
    report: MetricsReport
    trace: list
    switches: list = field(default_factory=list)
    events: int = 0

    def trace_text(self) -> str:
        import io
        buf = io.StringIO()
        write_trace(self.trace, buf, trace_header(self.config))
        return buf.getvalue()


def trace_header(cfg: ScenarioConfig) -> dict:
    h = {
        "format": TRACE_FORMAT,
        "scenario_id": cfg.scenario_id,
        "seed": cfg.seed,
        "protocol": protocol_label(cfg.protocols),
        "n_nodes": cfg.n_nodes,
        "speed": repr(float(cfg.speed_max)),
        "duration": repr(float(cfg.duration)),
    }
    if cfg.is_mrp and not cfg.mrp_count_standby:
        h["exclude_standby"] = cfg.protocols[0]
    return h


def random_placement(cfg: ScenarioConfig) -> np.ndarray:
    rng = RngStream(cfg.seed, "placement")
    pts = rng.random(2 * cfg.n_nodes).reshape(cfg.n_nodes, 2)
    return pts * np.array([cfg.width, cfg.height])


class Simulation:
    """Build with a config (plus optional explicit static ``positions`` or
    ``flows``), then :meth:`run`."""

    def __init__(self, cfg: ScenarioConfig, positions=None, flows=None, trace_mac=True):
        self.cfg = cfg
        self.n_nodes = cfg.n_nodes
        self.duration = float(cfg.duration)
        self.engine = Engine()
        self.trace: list = []
        self._uid = 0
        self._jitter: dict[int, RngStream] = {}
        self.delivered_paths: dict[int, list[int]] = {}
        self.roh = 0
        self.roh_by_protocol: dict[str, int] = {}
        self.roh_active = 0

        area = Area(cfg.width, cfg.height)
        if positions is not None or cfg.mobility == "static":
            pos = random_placement(cfg) if positions is None else np.asarray(positions, float)
            if pos.shape != (cfg.n_nodes, 2):
                raise ValueError(f"positions must have shape ({cfg.n_nodes}, 2)")
            self.mobility = StaticMobility(pos, area)
        else:
            self.mobility = make_mobility(
                cfg.mobility, cfg.n_nodes, area, (cfg.speed_min, cfg.speed_max), cfg.pause,
                cfg.seed, groups=cfg.groups, radius=cfg.group_radius,
                offset_radius=cfg.group_offset,
            )
        radio = RadioConfig(cfg.radio_range, cfg.bit_rate, cfg.proc_delay)
        self.medium = Medium(self.engine, self.mobility.pos, radio, cfg.queue_len,
                             self.trace, self.drop, trace_mac)
        self.medium.deliver_up = self._deliver_up
        self.medium.link_failed = self._link_failed

        names = cfg.protocols
        self.active = names[0]
        self.protocols = [
            {name: PROTOCOLS[name](i, self) for name in names} for i in range(cfg.n_nodes)
        ]
        self._rx = [{k: p.on_packet for k, p in node.items()} for node in self.protocols]
        self._kind_rx: dict[str, list] = {}
        self.medium.control_rx = self._control_rx

        if flows is None:
            if cfg.flows:
                flows = [
                    Flow(f.src, f.dst, cfg.rate, cfg.payload,
                         0.0 if f.start is None else f.start,
                         self.duration if f.stop is None else f.stop)
                    for f in cfg.flows
                ]
            else:
                flows = default_flows(cfg.n_nodes, RngStream(cfg.seed, "traffic"), cfg.n_flows,
                                      cfg.rate, cfg.payload, 0.0, self.duration)
        self.traffic = Traffic(self, flows, self.duration)

        self.supervisor = None
        if cfg.is_mrp:
            self.supervisor = MrpSupervisor(self, MrpConfig(
                pair=names, epoch=cfg.mrp_epoch, policy=cfg.mrp_policy,
                margin=cfg.mrp_margin, min_dwell=cfg.mrp_dwell,
                count_standby_roh=cfg.mrp_count_standby,
            ))
        self._ran = False

    # ------------------------------------------------------------ services

    def new_uid(self) -> int:
        self._uid += 1
        return self._uid

    def jitter(self, node: int) -> RngStream:
        s = self._jitter.get(node)
        if s is None:
            s = self._jitter[node] = RngStream(self.cfg.seed, ("jitter", node))
        return s

    def route_data(self, src: int, pkt) -> None:
        pkt.proto = self.active
        self.protocols[src][self.active].on_data_to_send(pkt)

    def emit_control(self, node: int, pkt, to: int, action: str) -> None:
        self.trace.append((self.engine.now, action, RTR, node, pkt.uid, pkt.kind, pkt.size,
                           pkt.src, pkt.dst, ""))
        self.roh += 1
        p = pkt.proto
        self.roh_by_protocol[p] = self.roh_by_protocol.get(p, 0) + 1
        if p == self.active:
            self.roh_active += 1
        self.medium.transmit(pkt, node, to)

    def send_data(self, node: int, pkt, next_hop: int) -> None:
        if node != pkt.src:
            pkt.ttl -= 1
            if pkt.ttl <= 0:
                self.drop(node, pkt, RTR, "TTL")
                return
        self.medium.transmit(pkt, node, next_hop)

    def drop(self, node: int, pkt, layer: str, reason: str) -> None:
        self.trace.append((self.engine.now, DROP, layer, node, pkt.uid, pkt.kind, pkt.size,
                           pkt.src, pkt.dst, reason))

    def deliver_data(self, node: int, pkt) -> None:
        if self.traffic.deliver(node, pkt, self.engine.now) and pkt.path is not None:
            self.delivered_paths[pkt.uid] = list(pkt.path)

    def _deliver_up(self, node: int, pkt, prev: int) -> None:
        if pkt.kind == CBR and pkt.path is not None:
            pkt.path.append(node)
        self._rx[node][pkt.proto](pkt, prev)

    def _control_rx(self, pkt):
        h = self._kind_rx.get(pkt.kind)
        if h is None:
            insts = [node[pkt.proto] for node in self.protocols]
            make_batch = insts[0].floods.get(pkt.kind)
            if make_batch is not None:
                h = make_batch(insts)
            else:
                h = [p.handler(pkt.kind) for p in insts]
            self._kind_rx[pkt.kind] = h
        return h

    def _link_failed(self, node: int, pkt, next_hop: int) -> None:
        self.protocols[node][pkt.proto].on_link_failure(pkt, next_hop)

    # ------------------------------------------------------------ run

    def _mobility_tick(self, k: int) -> None:
        dt = self.cfg.mobility_tick
        self.mobility.step((k - 1) * dt, dt)
        self.medium.refresh()
        nxt = (k + 1) * dt
        if nxt <= self.duration + 1e-9:
            self.engine.at(nxt, self._mobility_tick, k + 1, kind=EventKind.MOBILITY_UPDATE)

    def run(self) -> RunResult:
        if self._ran:
            raise RuntimeError("a Simulation runs once; build a new one to rerun")
        self._ran = True
        for node in self.protocols:
            for proto in node.values():
                proto.start()
        if not isinstance(self.mobility, StaticMobility):
            dt = self.cfg.mobility_tick
            if dt <= self.duration:
                self.engine.at(dt, self._mobility_tick, 1, kind=EventKind.MOBILITY_UPDATE)
        self.traffic.start()
        if self.supervisor is not None:
            self.supervisor.start()
        n = self.engine.run(self.duration)
        return RunResult(self.cfg, self.report(), self.trace,
                         list(self.supervisor.switches) if self.supervisor else [], n)

    def report(self) -> MetricsReport:
        """Metrics from the sink records and live counters (not the trace)."""
        recs = self.traffic.records.values()
        pkt_s = len(self.traffic.records)
        pkt_r = 0
        delay = 0.0
        bits = 0
        for r in recs:
            if r.received is not None:
                pkt_r += 1
                delay += r.received - r.sent
                bits += r.payload * 8
        cfg = self.cfg
        roh = self.roh if (not cfg.is_mrp or cfg.mrp_count_standby) else self.roh_active
        return MetricsReport(
            cfg.scenario_id, cfg.seed, protocol_label(cfg.protocols), cfg.n_nodes,
            float(cfg.speed_max), roh, pkt_s, pkt_r, compute_pdr(pkt_s, pkt_r),
            delay / pkt_r if pkt_r else NO_TRAFFIC, bits / self.duration,
        )

    # ------------------------------------------------------------ inspection

    def in_flight(self) -> set[int]:
        """Uids of data packets still queued, buffered or on the air."""
        live = set()
        for q in self.medium.queues:
            live.update(p.uid for p in q.contents() if p.kind == CBR)
        for node in self.protocols:
            for proto in node.values():
                buf = getattr(proto, "buffer", None)
                if buf is not None:
                    live.update(p.uid for p in buf.packets())
        for ev in self.engine._queue:
            if ev.kind == EventKind.PACKET_ARRIVAL and ev.args[0].kind == CBR:
                live.add(ev.args[0].uid)
        return live

    def table_rows(self):
        t = self.engine.now
        for i, node in enumerate(self.protocols):
            for name, proto in node.items():
                for dest, nh, metric in proto.table_rows():
                    yield (t, i, name, dest, nh, metric)

    # ------------------------------------------------------------ export

    def write_outputs(self, result: RunResult, out_dir, mobility_trace: bool = False) -> dict:
        os.makedirs(out_dir, exist_ok=True)
        paths = {}

        def path(name):
            p = os.path.join(out_dir, name)
            paths[name] = p
            return p

        with open(path("trace.tr"), "w") as fh:
            write_trace(result.trace, fh, trace_header(self.cfg))
        with open(path("metrics.csv"), "w") as fh:
            fh.write(MetricsReport.CSV_HEADER + "\n" + result.report.csv_row() + "\n")
        with open(path("deliveries.csv"), "w") as fh:
            self.traffic.export_csv(fh)
        with open(path("routes.csv"), "w") as fh:
            fh.write("time,node,protocol,dest,next_hop,metric\n")
            for t, i, name, dest, nh, metric in self.table_rows():
                fh.write(f"{t!r},{i},{name},{dest},{nh},{metric}\n")
        with open(path("links.csv"), "w") as fh:
            export_links_csv(self.medium, self.engine.now, fh)
        if self.supervisor is not None:
            with open(path("switches.csv"), "w") as fh:
                self.supervisor.export_csv(fh)
        if mobility_trace:
            from .mobility import record_trace
            cfg = self.cfg
            fresh = Simulation(cfg).mobility
            rows = record_trace(fresh, cfg.duration, cfg.mobility_tick)
            with open(path("mobility.csv"), "w") as fh:
                export_trace_csv(rows, fh)
        return paths


def simulate(cfg: ScenarioConfig, **kw) -> RunResult:
    return Simulation(cfg, **kw).run()


__all__ = ["Simulation", "RunResult", "simulate", "trace_header", "random_placement"]
