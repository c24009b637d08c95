"""Scenario files: flat ``key = value`` text, defaults from the reference setup.

Blank lines and ``#`` comments are ignored. ``flow`` may repeat
(``flow = SRC,DST[,START,STOP]``); any explicit flow replaces the automatic
flow selection.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, fields, replace

MOBILITY_MODELS = ("rpgm", "random_waypoint", "random_direction", "static")
BASE_PROTOCOLS = ("AODV", "DSR", "DSDV", "TORA")
_MRP_RE = re.compile(r"^MRP\(\s*([A-Za-z-]+)\s*\+\s*([A-Za-z-]+)\s*\)$")


class ScenarioError(ValueError):
    def __init__(self, msg: str, field_name: str | None = None, lineno: int | None = None):
        where = f"line {lineno}: " if lineno is not None else ""
        super().__init__(where + msg)
        self.field = field_name
        self.lineno = lineno


def _canon_protocol(name: str) -> str:
    n = name.strip().upper()
    if n in ("TORA-LITE", "TORA_LITE"):
        n = "TORA"
    return n


def parse_protocol(text: str) -> tuple[str, ...]:
    """``"AODV"`` -> ``("AODV",)``; ``"MRP(AODV+DSR)"`` -> ``("AODV", "DSR")``."""
    m = _MRP_RE.match(text.strip())
    if m:
        pair = (_canon_protocol(m.group(1)), _canon_protocol(m.group(2)))
        for p in pair:
            if p not in BASE_PROTOCOLS:
                raise ScenarioError(f"unknown protocol {p!r} in {text!r}", "protocol")
        if pair[0] == pair[1]:
            raise ScenarioError("MRP needs two distinct protocols", "protocol")
        return pair
    p = _canon_protocol(text)
    if p not in BASE_PROTOCOLS:
        raise ScenarioError(
            f"unknown protocol {text!r}; expected one of {BASE_PROTOCOLS} or MRP(A+B)",
            "protocol",
        )
    return (p,)


def protocol_label(protocols: tuple[str, ...]) -> str:
    if len(protocols) == 1:
        return protocols[0]
    return f"MRP({protocols[0]}+{protocols[1]})"


@dataclass(frozen=True)
class FlowSpec:
    src: int
    dst: int
    start: float | None = None
    stop: float | None = None


@dataclass(frozen=True)
class ScenarioConfig:
    scenario_id: str = "default"
    n_nodes: int = 20
    width: float = 600.0
    height: float = 600.0
    speed_min: float = 0.5
    speed_max: float = 5.0
    pause: float = 0.0
    mobility: str = "rpgm"
    protocol: str = "AODV"
    duration: float = 100.0
    seed: int = 1
    rate: float = 8.0
    payload: int = 512
    n_flows: int | None = None
    flows: tuple[FlowSpec, ...] = ()
    radio_range: float = 250.0
    bit_rate: float = 2e6
    proc_delay: float = 0.001
    queue_len: int = 50
    groups: int = 4
    group_radius: float = 50.0
    group_offset: float = 100.0
    mobility_tick: float = 0.1
    mrp_epoch: float = 5.0
    mrp_policy: str = "adaptive"
    mrp_margin: float = 0.1
    mrp_dwell: int = 2
    mrp_count_standby: bool = True

    def __post_init__(self):
        validate(self)

    @property
    def protocols(self) -> tuple[str, ...]:
        return parse_protocol(self.protocol)

    @property
    def is_mrp(self) -> bool:
        return len(self.protocols) == 2

    def with_(self, **changes) -> "ScenarioConfig":
        return replace(self, **changes)


# file key -> (dataclass field, parser)
def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _flows_count(s: str):
    return None if s.strip().lower() == "auto" else int(s)


KEYS = {
    "scenario_id": ("scenario_id", str),
    "nodes": ("n_nodes", int),
    "width": ("width", float),
    "height": ("height", float),
    "speed_min": ("speed_min", float),
    "speed_max": ("speed_max", float),
    "pause": ("pause", float),
    "mobility": ("mobility", str),
    "protocol": ("protocol", str),
    "duration": ("duration", float),
    "seed": ("seed", int),
    "rate": ("rate", float),
    "payload": ("payload", int),
    "flows": ("n_flows", _flows_count),
    "radio_range": ("radio_range", float),
    "bit_rate": ("bit_rate", float),
    "proc_delay": ("proc_delay", float),
    "queue_len": ("queue_len", int),
    "groups": ("groups", int),
    "group_radius": ("group_radius", float),
    "group_offset": ("group_offset", float),
    "mobility_tick": ("mobility_tick", float),
    "mrp_epoch": ("mrp_epoch", float),
    "mrp_policy": ("mrp_policy", str),
    "mrp_margin": ("mrp_margin", float),
    "mrp_dwell": ("mrp_dwell", int),
    "mrp_count_standby": ("mrp_count_standby", _bool),
}
FIELD_TO_KEY = {f: k for k, (f, _) in KEYS.items()}


def validate(c: ScenarioConfig) -> None:
    def bad(name, msg):
        raise ScenarioError(f"{name}: {msg}", name)

    if c.n_nodes < 2:
        bad("n_nodes", f"need at least 2 nodes, got {c.n_nodes}")
    if not (c.width > 0 and c.height > 0):
        bad("width" if c.width <= 0 else "height", "area must be positive")
    if c.speed_min < 0:
        bad("speed_min", "must be >= 0")
    if c.speed_min > c.speed_max:
        bad("speed_min", f"min speed {c.speed_min} exceeds max speed {c.speed_max}")
    if c.pause < 0:
        bad("pause", "must be >= 0")
    if c.mobility not in MOBILITY_MODELS:
        bad("mobility", f"unknown model {c.mobility!r}; expected one of {MOBILITY_MODELS}")
    if c.mobility != "static" and c.speed_max <= 0:
        bad("speed_max", "must be positive for a moving model")
    parse_protocol(c.protocol)
    if not c.duration > 0:
        bad("duration", "must be positive")
    if not 0 <= c.seed < 2**64:
        bad("seed", "must be a 64-bit unsigned integer")
    if not c.rate > 0:
        bad("rate", "must be positive")
    if c.payload <= 0:
        bad("payload", "must be positive")
    if c.n_flows is not None and c.n_flows < 0:
        bad("n_flows", "must be >= 0")
    for f in c.flows:
        if not (0 <= f.src < c.n_nodes and 0 <= f.dst < c.n_nodes):
            bad("flows", f"flow endpoint out of range: {f.src}->{f.dst}")
        if f.src == f.dst:
            bad("flows", f"flow source equals destination ({f.src})")
    if not c.radio_range > 0:
        bad("radio_range", "must be positive")
    if not c.bit_rate > 0:
        bad("bit_rate", "must be positive")
    if c.proc_delay < 0:
        bad("proc_delay", "must be >= 0")
    if c.queue_len < 1:
        bad("queue_len", "must be >= 1")
    if c.groups < 1:
        bad("groups", "must be >= 1")
    if c.group_radius < 0:
        bad("group_radius", "must be >= 0")
    if not c.mobility_tick > 0:
        bad("mobility_tick", "must be positive")
    if not c.mrp_epoch > 0:
        bad("mrp_epoch", "must be positive")
    if c.mrp_policy not in ("adaptive", "forced", "off"):
        bad("mrp_policy", f"unknown policy {c.mrp_policy!r}")
    if c.mrp_margin < 0:
        bad("mrp_margin", "must be >= 0")
    if c.mrp_dwell < 1:
        bad("mrp_dwell", "must be >= 1")


def _parse_flow(val: str) -> FlowSpec:
    parts = [p.strip() for p in val.split(",")]
    if len(parts) not in (2, 4):
        raise ValueError("flow takes SRC,DST or SRC,DST,START,STOP")
    if len(parts) == 2:
        return FlowSpec(int(parts[0]), int(parts[1]))
    return FlowSpec(int(parts[0]), int(parts[1]), float(parts[2]), float(parts[3]))


def parse_scenario(text: str, base: ScenarioConfig | None = None) -> ScenarioConfig:
    values: dict = {}
    flows: list[FlowSpec] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise ScenarioError(f"expected key=value, got {raw.strip()!r}", lineno=lineno)
        key, val = key.strip(), val.strip()
        if key == "flow":
            try:
                flows.append(_parse_flow(val))
            except ValueError as exc:
                raise ScenarioError(f"flow: {exc}", "flows", lineno) from None
            continue
        if key not in KEYS:
            raise ScenarioError(
                f"unknown key {key!r}; valid keys: {', '.join(sorted(KEYS) + ['flow'])}",
                key, lineno)
        name, conv = KEYS[key]
        try:
            values[name] = conv(val)
        except ValueError as exc:
            raise ScenarioError(f"{key}: {exc}", name, lineno) from None
    if flows:
        values["flows"] = tuple(flows)
    base = base or ScenarioConfig()
    return replace(base, **values)


def load_scenario(path) -> ScenarioConfig:
    with open(path) as fh:
        return parse_scenario(fh.read())


def dump_scenario(c: ScenarioConfig) -> str:
    lines = []
    for f in fields(c):
        if f.name == "flows":
            continue
        v = getattr(c, f.name)
        key = FIELD_TO_KEY[f.name]
        if v is None:
            v = "auto"
        elif isinstance(v, bool):
            v = "true" if v else "false"
        elif isinstance(v, float):
            v = repr(v)
        lines.append(f"{key} = {v}")
    for fl in c.flows:
        if fl.start is None:
            lines.append(f"flow = {fl.src},{fl.dst}")
        else:
            lines.append(f"flow = {fl.src},{fl.dst},{fl.start!r},{fl.stop!r}")
    return "\n".join(lines) + "\n"
