"""Deterministic discrete-event MANET simulator with runtime protocol switching."""

__version__ = "0.1.0"

from .config import ScenarioConfig, load_scenario, parse_scenario  # noqa: E402
from .metrics import MetricsReport, analyze_trace  # noqa: E402
from .sim import RunResult, Simulation, simulate  # noqa: E402

__all__ = [
    "ScenarioConfig", "load_scenario", "parse_scenario", "MetricsReport", "analyze_trace",
    "Simulation", "RunResult", "simulate", "__version__",
]
