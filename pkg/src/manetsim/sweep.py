"""Parameter sweeps: every (protocol, value, seed) cell is an independent run.

Layout under the output directory::

    runs.csv                         one MetricsReport row per run
    aggregate.csv                    per (protocol, value) mean and sample std
    runs/<protocol>/<param>=<value>/seed<k>/trace.tr   (unless traces are off)

Cells share nothing, so ``jobs > 1`` farms them out to worker processes; the
merge is ordered by (protocol, value, seed) and the bytes do not depend on it.
"""

from __future__ import annotations

import math
import os
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .config import KEYS, ScenarioConfig, ScenarioError, protocol_label, parse_protocol
from .metrics import MetricsReport, write_trace
from .sim import Simulation, trace_header

# aggregate column stem -> MetricsReport attribute
METRICS = {
    "R": "roh",
    "PDR": "pdr",
    "delay_s": "delay_s",
    "throughput_bps": "throughput_bps",
}
ALIASES = {"speed": "speed_max"}


class SweepError(RuntimeError):
    def __init__(self, cell: tuple, cause: BaseException):
        protocol, param, value, seed = cell
        super().__init__(
            f"sweep cell failed: protocol={protocol} {param}={value} seed={seed}: "
            f"{type(cause).__name__}: {cause}"
        )
        self.cell = cell
        self.cause = cause


def resolve_param(name: str) -> tuple[str, object]:
    """File key or field name -> (field name, converter for string values)."""
    name = ALIASES.get(name, name)
    if name in ("protocol", "seed"):
        raise ScenarioError(f"{name} is not a sweep parameter; use the protocols list or "
                            "the seed count instead", name)
    if name in KEYS:
        return KEYS[name]
    for key, (fname, conv) in KEYS.items():
        if fname == name:
            return fname, conv
    valid = sorted((set(KEYS) | {f for f, _ in KEYS.values()} | set(ALIASES))
                   - {"protocol", "seed"})
    raise ScenarioError(f"unknown sweep parameter {name!r}; valid: {', '.join(valid)}", name)


@dataclass(frozen=True)
class SweepSpec:
    base: ScenarioConfig
    param: str
    values: tuple
    seeds: int = 1
    protocols: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.values:
            raise ValueError("sweep needs at least one value")
        if self.seeds < 1:
            raise ValueError(f"seeds must be >= 1, got {self.seeds}")
        fname, conv = resolve_param(self.param)
        object.__setattr__(self, "param", fname)
        vals = tuple(conv(v) if isinstance(v, str) else v for v in self.values)
        object.__setattr__(self, "values", vals)
        protos = self.protocols or (self.base.protocol,)
        object.__setattr__(self, "protocols",
                           tuple(protocol_label(parse_protocol(p)) for p in protos))
        # surfaces invalid combinations before any run starts
        list(self.cells())

    def seed_list(self) -> list[int]:
        return [self.base.seed + i for i in range(self.seeds)]

    def cells(self):
        """``(config, (protocol, param, value, seed))`` in merge order."""
        for proto in self.protocols:
            for v in self.values:
                for s in self.seed_list():
                    cfg = self.base.with_(protocol=proto, seed=s, **{self.param: v})
                    yield cfg, (proto, self.param, v, s)


def _value_text(v) -> str:
    return repr(v) if isinstance(v, float) else str(v)


def _run_cell(cfg: ScenarioConfig, trace_path: str | None) -> MetricsReport:
    sim = Simulation(cfg, trace_mac=trace_path is not None)
    result = sim.run()
    if trace_path is not None:
        os.makedirs(os.path.dirname(trace_path), exist_ok=True)
        with open(trace_path, "w") as fh:
            write_trace(result.trace, fh, trace_header(cfg))
    return result.report


def _trace_path(out_dir, cell) -> str:
    proto, param, value, seed = cell
    return os.path.join(out_dir, "runs", proto, f"{param}={_value_text(value)}",
                        f"seed{seed}", "trace.tr")


def _fmt(v) -> str:
    return "NA" if v is None else repr(float(v))


def aggregate(rows: list[tuple[tuple, MetricsReport]]) -> list[dict]:
    """Group run rows by (protocol, value); mean and sample std per metric."""
    groups: dict[tuple, list[MetricsReport]] = {}
    for (proto, _param, value, _seed), rep in rows:
        groups.setdefault((proto, value), []).append(rep)
    out = []
    for (proto, value), reps in groups.items():
        row = {"protocol": proto, "value": value, "runs": len(reps)}
        for stem, attr in METRICS.items():
            xs = [float(getattr(r, attr)) for r in reps if getattr(r, attr) is not None]
            row[stem + "_mean"] = math.fsum(xs) / len(xs) if xs else None
            row[stem + "_std"] = statistics.stdev(xs) if len(xs) > 1 else None
        out.append(row)
    return out


def aggregate_header() -> str:
    cols = ["param", "value", "protocol", "runs"]
    for stem in METRICS:
        cols += [stem + "_mean", stem + "_std"]
    return ",".join(cols)


def write_aggregate(fh, param: str, agg: list[dict]) -> None:
    fh.write(aggregate_header() + "\n")
    for row in agg:
        cells = [param, _value_text(row["value"]), row["protocol"], str(row["runs"])]
        for stem in METRICS:
            cells += [_fmt(row[stem + "_mean"]), _fmt(row[stem + "_std"])]
        fh.write(",".join(cells) + "\n")


def run_sweep(spec: SweepSpec, out_dir, write_traces: bool = True, jobs: int = 1) -> str:
    """Run every cell, write ``runs.csv`` and ``aggregate.csv``; return the latter's path."""
    os.makedirs(out_dir, exist_ok=True)
    cells = list(spec.cells())
    paths = [_trace_path(out_dir, c) if write_traces else None for _, c in cells]
    reports: list[MetricsReport] = []
    if jobs <= 1:
        for (cfg, cell), tp in zip(cells, paths):
            try:
                reports.append(_run_cell(cfg, tp))
            except Exception as exc:
                raise SweepError(cell, exc) from exc
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futs = [pool.submit(_run_cell, cfg, tp) for (cfg, _), tp in zip(cells, paths)]
            for fut, (_, cell) in zip(futs, cells):
                try:
                    reports.append(fut.result())
                except Exception as exc:
                    for f in futs:
                        f.cancel()
                    raise SweepError(cell, exc) from exc

    rows = [(cell, rep) for (_, cell), rep in zip(cells, reports)]
    with open(os.path.join(out_dir, "runs.csv"), "w") as fh:
        fh.write("param,value," + MetricsReport.CSV_HEADER + "\n")
        for (_, param, value, _), rep in rows:
            fh.write(f"{param},{_value_text(value)},{rep.csv_row()}\n")
    agg_path = os.path.join(out_dir, "aggregate.csv")
    with open(agg_path, "w") as fh:
        write_aggregate(fh, spec.param, aggregate(rows))
    return agg_path


def parse_param(text: str) -> tuple[str, list[str]]:
    """``"nodes=20,40"`` -> ``("nodes", ["20", "40"])``."""
    name, sep, vals = text.partition("=")
    items = [v.strip() for v in vals.split(",") if v.strip()]
    if not sep or not name.strip() or not items:
        raise ValueError(f"expected NAME=V1,V2,..., got {text!r}")
    return name.strip(), items


__all__ = ["SweepSpec", "SweepError", "run_sweep", "aggregate", "parse_param",
           "resolve_param", "METRICS"]
