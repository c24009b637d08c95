"""Mixed Routing Protocol supervisor.

Every node runs two protocol instances. The supervisor sits above both and
decides, once per epoch and for the whole network at once, which instance
receives newly generated data packets. The other one stays warm: it keeps
answering control traffic, and is asked to acquire routes for the active
flows so a swap does not start cold.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .engine import EventKind
from .metrics import MetricsWindow, observe_window
from .net import AGT, MRP_KIND, SEND

STAY = "stay"
SWITCH = "switch"
POLICIES = ("adaptive", "forced", "off")


@dataclass(frozen=True)
class MrpConfig:
    pair: tuple[str, str] = ("AODV", "DSR")
    epoch: float = 5.0
    policy: str = "adaptive"
    w_pdr: float = 0.5
    w_delay: float = 0.3
    w_roh: float = 0.2
    # delay at (and beyond) which the delay term bottoms out
    delay_ref: float = 1.0
    margin: float = 0.1
    min_dwell: int = 2
    memory_decay: float = 0.5
    count_standby_roh: bool = True
    # standby routes are acquired only while the active window PDR is below this
    prime_below: float = 0.95

    def __post_init__(self):
        if len(self.pair) != 2 or self.pair[0] == self.pair[1]:
            raise ValueError(f"MRP needs two distinct protocols, got {self.pair}")
        if self.margin < 0:
            raise ValueError("hysteresis margin must be >= 0")
        if self.min_dwell < 1:
            raise ValueError("min dwell must be >= 1 epoch")
        if not self.epoch > 0:
            raise ValueError("epoch must be positive")
        if self.policy not in POLICIES:
            raise ValueError(f"unknown MRP policy {self.policy!r}; expected one of {POLICIES}")

    @property
    def name(self) -> str:
        return f"MRP({self.pair[0]}+{self.pair[1]})"


@dataclass(frozen=True)
class SwitchEvent:
    at: float
    src: str
    dst: str
    trigger: str
    value: float


@dataclass(frozen=True)
class StandbyEstimate:
    score: float
    coverage: float
    roh_term: float
    memory_term: float | None


def overhead_ratio(rtr: int, pkt_s: int) -> float:
    total = rtr + pkt_s
    return rtr / total if total else 0.0


def window_score(window: MetricsWindow, protocol: str, cfg: MrpConfig):
    """Weighted health of ``protocol`` over one window, in [0, 1]; None if idle."""
    if window.no_traffic:
        return None
    roh_term = 1.0 - overhead_ratio(window.rtr_of(protocol), window.pkt_s)
    return delivery_term(window, cfg) + cfg.w_roh * roh_term


def delivery_term(window: MetricsWindow, cfg: MrpConfig) -> float:
    delay = window.delay
    delay_term = 0.0 if delay is None else 1.0 - min(1.0, delay / cfg.delay_ref)
    return cfg.w_pdr * window.pdr + cfg.w_delay * delay_term


def mrp_standby_estimate(coverage: float, standby_rtr: int, pkt_s: int, cfg: MrpConfig,
                         last_score: float | None = None, epochs_ago: int = 0,
                         active_quality: float = 1.0,
                         active_roh_term: float | None = None) -> StandbyEstimate:
    """Score the idle protocol from what its control plane shows.

    Route coverage stands in for delivery and delay, scaled by the delivery
    quality the active protocol achieves per covered flow (``active_quality``).
    An idle protocol's control rate understates what it would spend carrying
    data, so its overhead term may only pull the estimate below the active's
    (``active_roh_term``), never above. Past carried scores fade by
    ``memory_decay`` per epoch and the proxy fills the remaining weight.
    """
    if not 0.0 <= coverage <= 1.0:
        raise ValueError(f"coverage must be in [0, 1], got {coverage}")
    if not 0.0 <= active_quality <= 1.0:
        raise ValueError(f"active quality must be in [0, 1], got {active_quality}")
    roh_term = 1.0 - overhead_ratio(standby_rtr, pkt_s)
    if active_roh_term is not None:
        roh_term = min(roh_term, active_roh_term)
    proxy = (cfg.w_pdr + cfg.w_delay) * coverage * active_quality + cfg.w_roh * roh_term
    if last_score is None:
        return StandbyEstimate(proxy, coverage, roh_term, None)
    keep = cfg.memory_decay ** epochs_ago
    memory = last_score * keep
    return StandbyEstimate(memory + (1.0 - keep) * proxy, coverage, roh_term, memory)


def mrp_evaluate(window: MetricsWindow, active: str, cfg: MrpConfig, standby_score: float,
                 epochs_in_place: int) -> str:
    """Stay or switch after one epoch.

    Switches when the standby estimate beats the active score by more than the
    hysteresis margin and the active protocol has held for ``min_dwell`` epochs.
    The forced policy ignores scores; ``off`` never switches.
    """
    if cfg.policy == "off":
        return STAY
    if epochs_in_place < cfg.min_dwell:
        return STAY
    if cfg.policy == "forced":
        return SWITCH
    score = window_score(window, active, cfg)
    if score is None:
        return STAY
    if standby_score > score * (1.0 + cfg.margin):
        return SWITCH
    return STAY


@dataclass
class _History:
    score: float
    epoch: int


@dataclass
class Evaluation:
    at: float
    active: str
    active_score: float | None
    standby_score: float
    coverage: float
    decision: str


class MrpSupervisor:
    """Runtime side: epoch timer, scoring, the swap itself and standby warming."""

    def __init__(self, sim, cfg: MrpConfig):
        self.sim = sim
        self.cfg = cfg
        self.active, self.standby = cfg.pair
        self.switches: list[SwitchEvent] = []
        self.evaluations: list[Evaluation] = []
        self._in_place = 0
        self._epoch_no = 0
        self._trace_idx = 0
        self._sent_at: dict[int, float] = {}
        self._history: dict[str, _History] = {}

    def start(self):
        if self.cfg.policy == "off":
            return
        self._schedule(1)

    def _schedule(self, k):
        t = k * self.cfg.epoch
        if t <= self.sim.duration + 1e-9:
            self.sim.engine.at(t, self._evaluate, k, kind=EventKind.MRP_EVALUATION)

    def coverage(self, protocol: str) -> float:
        now = self.sim.engine.now
        flows = [f for f in self.sim.traffic.flows if f.active(now)]
        if not flows:
            return 0.0
        have = sum(1 for f in flows if self.sim.protocols[f.src][protocol].has_route(f.dst))
        return have / len(flows)

    def _evaluate(self, k):
        sim = self.sim
        cfg = self.cfg
        now = sim.engine.now
        trace = sim.trace
        window = observe_window(trace[self._trace_idx:], now - cfg.epoch, now, self._sent_at)
        self._trace_idx = len(trace)
        self._epoch_no = k
        self._in_place += 1

        active_score = window_score(window, self.active, cfg)
        quality, roh_a = 1.0, None
        if active_score is not None:
            c_a = self.coverage(self.active)
            span = (cfg.w_pdr + cfg.w_delay) * c_a
            quality = 1.0 if span <= 0 else min(1.0, delivery_term(window, cfg) / span)
            roh_a = 1.0 - overhead_ratio(window.rtr_of(self.active), window.pkt_s)
        hist = self._history.get(self.standby)
        est = mrp_standby_estimate(
            self.coverage(self.standby), window.rtr_of(self.standby), window.pkt_s, cfg,
            None if hist is None else hist.score,
            0 if hist is None else k - hist.epoch,
            quality, roh_a,
        )
        decision = mrp_evaluate(window, self.active, cfg, est.score, self._in_place)
        self.evaluations.append(
            Evaluation(now, self.active, active_score, est.score, est.coverage, decision)
        )
        if active_score is not None:
            self._history[self.active] = _History(active_score, k)
        if decision == SWITCH:
            trigger = "forced" if cfg.policy == "forced" else "score"
            self.mrp_switch(self.standby, trigger, active_score if active_score is not None else 0.0)
        if cfg.policy == "forced" or (not window.no_traffic and window.pdr < cfg.prime_below):
            self._warm_standby()
        self._schedule(k + 1)

    def mrp_switch(self, to: str, trigger: str = "manual", value: float = 0.0) -> None:
        if to != self.standby:
            raise ValueError(f"can only switch to the standby protocol {self.standby!r}")
        from .routing import PROTOCOL_CODES

        sim = self.sim
        now = sim.engine.now
        ev = SwitchEvent(now, self.active, to, trigger, value)
        sim.trace.append((now, SEND, AGT, -1, len(self.switches), MRP_KIND, 0,
                          PROTOCOL_CODES[self.active], PROTOCOL_CODES[to], ""))
        self.switches.append(ev)
        self.active, self.standby = to, self.active
        sim.active = to
        self._in_place = 0

    def _warm_standby(self):
        # only flows the active protocol cannot currently serve, unless forced
        now = self.sim.engine.now
        every = self.cfg.policy == "forced"
        for f in self.sim.traffic.flows:
            if f.active(now):
                node = self.sim.protocols[f.src]
                if every or not node[self.active].has_route(f.dst):
                    node[self.standby].prime_route(f.dst)

    def export_csv(self, fh) -> None:
        fh.write("time,from,to,trigger\n")
        for s in self.switches:
            fh.write(f"{s.at!r},{s.src},{s.dst},{s.trigger}={s.value!r}\n")
