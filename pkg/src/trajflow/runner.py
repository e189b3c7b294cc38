"""Shared execution layer behind the command line and the HTTP service.

Both front ends run graphs through run_graph() and write result files
through the same writers, so equal inputs produce byte-identical out
directories. The one exception is timings.json: it records wall-clock
durations and is documented as the only non-reproducible artifact.

Out-dir layout (frozen external contract):

    scene_%04d.json    resolved snapshot per visited frame, canonical JSON,
                       written as each frame finishes (visit order)
    attr_<name>.ssv    canonical SSV dump of each attribute over the
                       visited frames, ascending frame order
    plot_<label>.csv   one "x,y" row per plot point, no header line
    report.json        deterministic run summary (frames, cache, errors)
    timings.json       wall-clock durations for the same run
"""

from __future__ import annotations

import time
from dataclasses import replace
from pathlib import Path

from .errors import BadParam
from .graph.engine import Engine, ExecutionSettings, RunResult
from .graph.model import DIRECTIONS, Graph, graph_from_text, parse_frames
from .io import write_ssv
from .model.frame import Frame
from .model.trajectory import Trajectory
from .scene import dumps_canonical, export_snapshot

REPORT_VERSION = 1


def load_graph_file(path: str) -> Graph:
    """Parse a graph document; script paths resolve against the file's dir."""
    p = Path(path)
    return graph_from_text(p.read_text(encoding="utf-8"),
                           base_dir=str(p.resolve().parent))


def apply_overrides(graph: Graph, frames: str | None = None,
                    direction: str | None = None) -> None:
    """Fold command-line / request options into the graph's run section."""
    opts = graph.run_options
    if frames is not None:
        opts = replace(opts, frames=parse_frames(frames))
    if direction is not None:
        if direction not in DIRECTIONS:
            raise BadParam(f"direction must be forward|backward, got {direction!r}")
        opts = replace(opts, direction=direction)
    graph.run_options = opts


def run_graph(engine: Engine, graph: Graph, *, use_cache: bool = True,
              continue_on_error: bool = False, out_dir: str | None = None,
              on_frame=None, should_stop=None) -> RunResult:
    """Execute a graph, optionally writing the artifact directory.

    Scene snapshots are exported as each frame commits, so a backward run
    writes its highest-numbered scene file first; the remaining artifacts
    are written when the run ends.
    """
    out = None
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
    hits0, misses0 = engine.cache.hits, engine.cache.misses

    def frame_hook(k, report, scalars):
        if out is not None:
            snap = engine.scene.resolve(engine.trajectory, k)
            export_snapshot(snap, str(out / f"scene_{k:04d}.json"))
        if on_frame is not None:
            on_frame(k, report, scalars)

    settings = ExecutionSettings(use_cache=use_cache,
                                 continue_on_error=continue_on_error,
                                 on_frame=frame_hook, should_stop=should_stop)
    t0 = time.perf_counter()
    result = engine.run(graph, settings)
    elapsed = time.perf_counter() - t0
    if out is not None:
        cache = {"enabled": use_cache,
                 "hits": engine.cache.hits - hits0,
                 "misses": engine.cache.misses - misses0}
        attr_names = write_attr_files(out, engine, result)
        plot_entries = write_plot_files(out, result)
        write_report(out, result, graph, cache, attr_names, plot_entries)
        write_timings(out, result, elapsed)
    return result


# -- artifact writers ----------------------------------------------------

class _AttrFrameSource:
    """Presents one run attribute as the single column of an SSV dump."""

    def __init__(self, trajectory, store, name: str, frames: list[int]):
        self.trajectory = trajectory
        self.store = store
        self.name = name
        self.frames = frames

    def parse_frame(self, i: int) -> Frame:
        k = self.frames[i]
        base = self.trajectory.load_frame(k)
        values = self.store.read(self.name, k)[0]
        return Frame(positions=base.positions, atom_type=base.atom_type,
                     box=base.box, attributes={self.name: values})


def write_attr_files(out: Path, engine: Engine, result: RunResult) -> list[str]:
    frames = sorted(result.frames)
    names = sorted(engine.store.names())
    for name in names:
        source = _AttrFrameSource(engine.trajectory, engine.store, name, frames)
        view = Trajectory(source=source, frame_count=len(frames),
                          atom_count=engine.trajectory.atom_count,
                          attribute_names=(name,))
        write_ssv(view, str(out / f"attr_{name}.ssv"), attrs=[name])
    return names


def safe_name(label: str) -> str:
    cleaned = "".join(c if c.isalnum() or c in "._-" else "_"
                      for c in str(label))
    return cleaned or "series"


def plot_csv_text(series) -> str:
    return "".join(f"{repr(float(x))},{repr(float(y))}\n"
                   for x, y in series.points)


def write_plot_files(out: Path, result: RunResult) -> list[dict]:
    entries = []
    taken: set[str] = set()
    for node_id in sorted(result.plots):
        series = result.plots[node_id]
        base = safe_name(series.label)
        if base in taken:
            base = f"{base}-{node_id}"
        taken.add(base)
        filename = f"plot_{base}.csv"
        (out / filename).write_text(plot_csv_text(series), encoding="utf-8")
        entries.append({"node": node_id, "label": series.label,
                        "mode": series.mode, "file": filename,
                        "points": len(series.points)})
    return entries


def write_report(out: Path, result: RunResult, graph: Graph, cache: dict,
                 attr_names: list[str], plot_entries: list[dict]) -> None:
    doc = {
        "version": REPORT_VERSION,
        "ok": result.ok,
        "stopped": result.stopped,
        "direction": graph.run_options.direction,
        "frames": list(result.frames),
        "cache": cache,
        "frame_reports": [r.to_json() for r in result.reports],
        "errors": result.errors,
        "attributes": attr_names,
        "plots": plot_entries,
    }
    (out / "report.json").write_text(dumps_canonical(doc), encoding="utf-8")


def write_timings(out: Path, result: RunResult, elapsed: float) -> None:
    doc = {
        "version": REPORT_VERSION,
        "total": elapsed,
        "frames": [
            {"frame": r.frame, "duration": r.duration,
             "nodes": {str(n): t for n, t in r.node_timings.items()}}
            for r in result.reports
        ],
    }
    (out / "timings.json").write_text(dumps_canonical(doc), encoding="utf-8")
