"""``manetsim`` command line: simulate, sweep, analyze, plot."""

from __future__ import annotations

import argparse
import sys

from .config import ScenarioConfig, ScenarioError, load_scenario
from .metrics import MetricsReport, TraceFormatError, analyze_trace
from .plot import PLOT_METRICS, PlotError, plot
from .sim import Simulation
from .sweep import SweepError, SweepSpec, parse_param, run_sweep


def _base(args) -> ScenarioConfig:
    cfg = load_scenario(args.scenario) if args.scenario else ScenarioConfig()
    if getattr(args, "protocol", None):
        cfg = cfg.with_(protocol=args.protocol)
    if getattr(args, "seed", None) is not None:
        cfg = cfg.with_(seed=args.seed)
    return cfg


def cmd_simulate(args) -> int:
    cfg = _base(args)
    sim = Simulation(cfg)
    result = sim.run()
    sim.write_outputs(result, args.out, mobility_trace=args.mobility_trace)
    print(MetricsReport.CSV_HEADER)
    print(result.report.csv_row())
    return 0


def cmd_sweep(args) -> int:
    base = _base(args)
    name, values = parse_param(args.param)
    protocols = tuple(p for p in args.protocols.split(",") if p) if args.protocols else ()
    spec = SweepSpec(base, name, tuple(values), args.seeds, protocols)
    path = run_sweep(spec, args.out, write_traces=not args.no_traces, jobs=args.jobs)
    with open(path) as fh:
        sys.stdout.write(fh.read())
    return 0


def cmd_analyze(args) -> int:
    rep = analyze_trace(args.trace, args.duration)
    print(MetricsReport.CSV_HEADER)
    print(rep.csv_row())
    return 0


def cmd_plot(args) -> int:
    plot(args.csv, args.metric, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="manetsim", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run one scenario and write its outputs")
    s.add_argument("--scenario", help="key=value scenario file (defaults if omitted)")
    s.add_argument("--seed", type=int)
    s.add_argument("--protocol", help="override, e.g. AODV or MRP(AODV+DSR)")
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--mobility-trace", action="store_true", help="also write mobility.csv")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("sweep", help="run a parameter sweep over seeds")
    s.add_argument("--scenario")
    s.add_argument("--param", required=True, help="NAME=V1,V2,...")
    s.add_argument("--seeds", type=int, default=1, help="seeds per point (from the base seed)")
    s.add_argument("--seed", type=int, help="first seed")
    s.add_argument("--protocols", help="comma-separated; defaults to the scenario's protocol")
    s.add_argument("--out", required=True)
    s.add_argument("--no-traces", action="store_true", help="skip per-run trace files")
    s.add_argument("--jobs", type=int, default=1, help="worker processes")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("analyze", help="recompute metrics from a trace file")
    s.add_argument("--trace", required=True)
    s.add_argument("--duration", type=float, help="override the header's duration")
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("plot", help="SVG line plot of an aggregate CSV")
    s.add_argument("--csv", required=True)
    s.add_argument("--metric", required=True, help=", ".join(PLOT_METRICS))
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_plot)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, TraceFormatError, PlotError, SweepError, ValueError,
            OSError) as exc:
        print(f"manetsim {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
