"""Graph model and execution engine."""

from .engine import (Engine, ExecutionSettings, FrameReport, PlotSeries,
                     RunCache, RunResult)
from .fingerprint import ENGINE_VERSION, fingerprint_inputs
from .model import (Connection, Graph, Node, RunOptions, collect_diagnostics,
                    graph_from_json, graph_from_text, parse_frames)

__all__ = [
    "ENGINE_VERSION",
    "Connection",
    "Engine",
    "ExecutionSettings",
    "FrameReport",
    "Graph",
    "Node",
    "PlotSeries",
    "RunCache",
    "RunOptions",
    "RunResult",
    "collect_diagnostics",
    "fingerprint_inputs",
    "graph_from_json",
    "graph_from_text",
    "parse_frames",
]
