"""Batch front end: run graphs over trajectories, convert formats, validate
graphs and scripts, and serve the HTTP API.

Exit codes: 0 success; 1 validation or input error; 2 a node failed during
the run and --continue-on-error was not given.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import runner
from .errors import EngineError
from .graph.engine import Engine
from .graph.model import DIRECTIONS, collect_diagnostics, graph_from_json
from .io import open_trajectory, write_ssv
from .scripting.annotations import parse_annotations

DEFAULT_PORT = 8077

LANGUAGE_BY_SUFFIX = {
    ".py": "python",
    ".cpp": "cpp", ".cc": "cpp", ".cxx": "cpp", ".hpp": "cpp", ".h": "cpp",
    ".f": "fortran", ".f90": "fortran", ".f95": "fortran",
}


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 1


def cmd_run(args) -> int:
    graph = runner.load_graph_file(args.graph)
    runner.apply_overrides(graph, frames=args.frames, direction=args.direction)
    problems = graph.validate()
    if problems:
        for p in problems:
            print(f"node {p['node']}: {p['code']}: {p['message']}",
                  file=sys.stderr)
        return 1
    trajectory = open_trajectory(args.traj)
    engine = Engine(trajectory)
    result = runner.run_graph(engine, graph, use_cache=not args.no_cache,
                              continue_on_error=args.continue_on_error,
                              out_dir=args.out)
    for err in result.errors:
        print(f"frame {err['frame']}: node {err['node']}: "
              f"{err['code']}: {err['message']}", file=sys.stderr)
    n_ok = sum(1 for r in result.reports if r.ok)
    print(f"{n_ok}/{len(result.frames)} frames ok, "
          f"cache hits {engine.cache.hits}, misses {engine.cache.misses}")
    if result.errors and not args.continue_on_error:
        return 2
    return 0


def cmd_convert(args) -> int:
    trajectory = open_trajectory(args.input)
    attrs = None
    if args.attrs is not None:
        attrs = [a for a in args.attrs.split(",") if a]
        unknown = [a for a in attrs if a not in trajectory.attribute_names]
        if unknown:
            return _fail(f"unknown attribute(s): {', '.join(unknown)}; "
                         f"available: {', '.join(trajectory.attribute_names) or 'none'}")
    write_ssv(trajectory, args.output, attrs=attrs)
    print(f"wrote {args.output}: {trajectory.frame_count} frames, "
          f"{trajectory.atom_count} atoms")
    return 0


def cmd_check(args) -> int:
    path = Path(args.graph)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        return _fail(f"{path}: not valid JSON: {exc}")
    diagnostics = collect_diagnostics(doc, base_dir=str(path.resolve().parent))
    if diagnostics:
        for d in diagnostics:
            where = f"node {d['node']}: " if d.get("node") is not None else ""
            print(f"{where}{d['code']}: {d['message']}", file=sys.stderr)
        return 1
    graph = graph_from_json(doc, base_dir=str(path.resolve().parent))
    print(f"ok: {len(graph.nodes)} nodes, {len(graph.connections)} connections")
    return 0


def cmd_check_script(args) -> int:
    path = Path(args.script)
    language = args.language or LANGUAGE_BY_SUFFIX.get(path.suffix.lower())
    if language is None:
        return _fail(f"cannot infer language from {path.suffix!r}; "
                     f"pass --language (python|cpp|fortran)")
    manifest = parse_annotations(path.read_text(encoding="utf-8"), language,
                                 name=path.stem)
    print(f"script {manifest.name or path.name} ({manifest.language})"
          + (" [stateful]" if manifest.stateful else ""))
    for port in manifest.ports:
        print(f"  {port.direction:<5} {port.name:<16} {port.dtype} rank {port.rank}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service.app import create_app

    app = create_app(ui_dir=args.ui_dir)
    config = uvicorn.Config(app, host=args.host, port=args.port,
                            log_level="warning")
    server = uvicorn.Server(config)
    try:
        server.run()
    except SystemExit as exc:  # uvicorn raises on startup failure
        return 1 if exc.code else 0
    except OSError as exc:
        return _fail(str(exc))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trajflow",
        description="Dataflow graph analysis over molecular dynamics trajectories.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute a graph over a trajectory")
    p.add_argument("graph", help="graph document (JSON)")
    p.add_argument("--traj", required=True, help="trajectory file")
    p.add_argument("--frames", metavar="A:B", help="half-open frame range")
    p.add_argument("--direction", choices=DIRECTIONS)
    p.add_argument("--out", help="artifact directory")
    p.add_argument("--no-cache", action="store_true",
                   help="recompute every node, bypassing the run cache")
    p.add_argument("--continue-on-error", action="store_true",
                   help="keep running after a frame fails")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("convert", help="re-emit a trajectory as canonical SSV")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--attrs", metavar="A,B,C",
                   help="attribute columns to carry over (default: all; "
                        "empty string: coordinates only)")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("check", help="validate a graph document")
    p.add_argument("graph")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("check-script", help="validate script annotations")
    p.add_argument("script")
    p.add_argument("--language", choices=("python", "cpp", "fortran"))
    p.set_defaults(func=cmd_check_script)

    p = sub.add_parser("serve", help="start the HTTP API (and UI, if built)")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=DEFAULT_PORT)
    p.add_argument("--ui-dir", help="directory of built UI assets to serve at /")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except EngineError as exc:
        return _fail(str(exc))
    except OSError as exc:
        return _fail(str(exc))


if __name__ == "__main__":
    raise SystemExit(main())
