"""Command-line front end.

Subcommands: run, check, slice, repair, query, explore, bench, serve.
Exit codes: 0 no violation, 1 violation found, 2 usage or parse error,
3 internal limit hit.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional

from . import wire as wire_mod
from .assertions import check_trace_async, run_checked_sync
from .bench import BenchEntry, default_corpus, report_text, rows_to_json, run_bench
from .config import load_config
from .engine import (EngineError, NodeLimitExceeded, StepLimitExceeded, execute,
                     explore)
from .module import ModuleError
from .parser import (ParseError, parse_assertions, parse_program, parse_query,
                     parse_term)
from .printer import render
from .query import query_trace
from .repair import RepairError, repair_rule
from .slicer import (EmptyCriterion, SliceError, criterion_from_roots,
                     render_slice_lines, render_trace_lines, program_slice,
                     slice_backward, synthesize_criterion)
from .terms import parse_position

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_USAGE = 2
EXIT_LIMIT = 3


def _read(path_or_text: str) -> str:
    if path_or_text.startswith("@"):
        with open(path_or_text[1:]) as f:
            return f.read()
    return path_or_text


def _load_module(path: str):
    with open(path) as f:
        return parse_program(f.read())


def _load_assertions(path: Optional[str], module):
    if not path:
        return []
    with open(path) as f:
        return parse_assertions(f.read(), module)


def _load_trace(path: str, module, limits):
    with open(path) as f:
        return wire_mod.trace_from_wire(json.load(f), module, limits)


def _emit(args, name: str, payload):
    text = wire_mod.dumps(payload)
    if getattr(args, "out", None):
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, name), "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _violating_trace(args, limits):
    module = _load_module(args.module)
    assertions = _load_assertions(args.assertions, module)
    trace = _load_trace(args.trace, module, limits)
    violation = check_trace_async(trace, assertions, module, limits)
    return module, assertions, trace, violation


def cmd_run(args, config) -> int:
    limits = config.limits()
    module = _load_module(args.module)
    assertions = _load_assertions(args.assertions, module)
    t0 = parse_term(_read(args.initial), module)
    strategy = args.strategy.split(",") if args.strategy else None
    if args.mode == "sync" and assertions:
        trace, violation = run_checked_sync(t0, module, assertions, args.bound,
                                            strategy=strategy, limits=limits)
    else:
        trace = execute(t0, module, args.bound, strategy=strategy, limits=limits)
        violation = check_trace_async(trace, assertions, module, limits) \
            if args.mode != "plain" and assertions else None
    _emit(args, "trace.json", wire_mod.trace_to_wire(trace))
    if violation is not None:
        _emit(args, "violation.json", wire_mod.violation_to_wire(violation))
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_check(args, config) -> int:
    module, _assertions, trace, violation = _violating_trace(args, config.limits())
    if violation is None:
        return EXIT_OK
    _emit(args, "violation.json", wire_mod.violation_to_wire(violation))
    return EXIT_VIOLATION


def cmd_slice(args, config) -> int:
    limits = config.limits()
    module, _assertions, trace, violation = _violating_trace(args, limits)
    if args.auto:
        if violation is None:
            print("no violation found; nothing to slice", file=sys.stderr)
            return EXIT_USAGE
        criterion = synthesize_criterion(violation, trace, module)
    else:
        if not args.criterion:
            print("--criterion STATE:POS[,POS...] or --auto required",
                  file=sys.stderr)
            return EXIT_USAGE
        state_text, _, pos_text = args.criterion.partition(":")
        state = int(state_text)
        roots = [parse_position(p) for p in pos_text.split(",")] \
            if pos_text else [()]
        criterion = criterion_from_roots(trace.states[state], roots, state)
    sl = slice_backward(trace, criterion, module, trusted=not args.untrusted,
                        limits=limits)
    payload = wire_mod.slice_to_wire(sl)
    _emit(args, "slice.json", payload)
    for line in render_slice_lines(sl):
        print(line)
    prog = program_slice(sl, module)
    print("program slice:", ", ".join(prog.labels) or "(empty)")
    return EXIT_VIOLATION if violation is not None else EXIT_OK


def cmd_repair(args, config) -> int:
    limits = config.limits()
    module, _assertions, trace, violation = _violating_trace(args, limits)
    if violation is None:
        print("no violation found; nothing to repair", file=sys.stderr)
        return EXIT_USAGE
    if violation.kind != "system" or violation.state_index == 0:
        print("repair needs a system violation caused by a rule step",
              file=sys.stderr)
        return EXIT_USAGE
    big = trace.bigsteps[violation.state_index - 1]
    suggestions = repair_rule(big, violation, module, limits)
    _emit(args, "repairs.json",
          [wire_mod.suggestion_to_wire(s) for s in suggestions])
    for s in suggestions:
        print(s.source)
    return EXIT_VIOLATION


def cmd_query(args, config) -> int:
    limits = config.limits()
    module = _load_module(args.module)
    trace = _load_trace(args.trace, module, limits)
    pattern = parse_query(_read(args.pattern), module)
    hits = query_trace(trace, pattern, module, limits)
    payload = [{"state": h.state_index, "position": list(h.position),
                "reported": {str(k): render(v) for k, v in
                             sorted(h.reported.items())}} for h in hits]
    _emit(args, "hits.json", payload)
    return EXIT_OK


def cmd_explore(args, config) -> int:
    limits = config.limits()
    module = _load_module(args.module)
    t0 = parse_term(_read(args.initial), module)
    g = explore(t0, module, args.depth, limits)
    payload = {
        "tree": [{"id": n.id, "state": render(n.state), "parent": n.parent,
                  "rule": n.rule, "depth": n.depth} for n in g.tree],
        "graph": [{"id": n.id, "state": render(n.state), "members": n.members,
                   "anchor": n.anchor} for n in g.graph],
        "edges": [{"src": a, "dst": b, "rule": r} for a, b, r in g.edges],
    }
    _emit(args, "graph.json", payload)
    return EXIT_OK


def cmd_bench(args, config) -> int:
    limits = config.limits()
    if args.corpus:
        try:
            import tomllib
        except ImportError:
            import tomli as tomllib
        with open(args.corpus, "rb") as f:
            data = tomllib.load(f)
        entries = []
        for item in data.get("entry", []):
            entries.append(BenchEntry(
                item["name"], _read(item["program"]),
                _read(item.get("assertions", "")), _read(item["initial"]),
                int(item.get("bound", 100)), item.get("strategy")))
    else:
        entries = default_corpus()
    rows = run_bench(entries, repeats=args.repeats, limits=limits)
    print(report_text(rows))
    _emit(args, "bench.json", rows_to_json(rows))
    return EXIT_OK


def cmd_serve(args, config) -> int:
    import uvicorn
    from .service import create_app
    app = create_app(config, ui_dir=args.ui)
    uvicorn.run(app, host=config.host, port=config.port, log_level="warning")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rwlab",
        description="Trace-slicing analysis toolkit for a Maude-like "
                    "rewriting language")
    parser.add_argument("--config", help="TOML config file")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, trace=False, assertions=True):
        p.add_argument("-m", "--module", required=True, help="program (.rwl)")
        if assertions:
            p.add_argument("-a", "--assertions", help="assertions (.assn)")
        if trace:
            p.add_argument("--trace", required=True, help="trace JSON file")
        p.add_argument("--out", help="directory for JSON artifacts")

    p = sub.add_parser("run", help="execute and check")
    common(p)
    p.add_argument("-i", "--initial", required=True,
                   help="initial term (or @file)")
    p.add_argument("--bound", type=int, default=100)
    p.add_argument("--mode", choices=["sync", "async", "plain"], default="sync")
    p.add_argument("--strategy", help="comma-separated rule labels")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("check", help="check a stored trace")
    common(p, trace=True)
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("slice", help="backward-slice a stored trace")
    common(p, trace=True)
    p.add_argument("--auto", action="store_true",
                   help="synthesize the criterion from the first violation")
    p.add_argument("--criterion", help="STATE:POS[,POS...] (positions dotted)")
    p.add_argument("--trusted", action="store_true", default=True)
    p.add_argument("--untrusted", action="store_true")
    p.set_defaults(fn=cmd_slice)

    p = sub.add_parser("repair", help="suggest rule repairs for a violation")
    common(p, trace=True)
    p.set_defaults(fn=cmd_repair)

    p = sub.add_parser("query", help="search a stored trace")
    common(p, trace=True, assertions=False)
    p.add_argument("-q", "--pattern", required=True)
    p.set_defaults(fn=cmd_query)

    p = sub.add_parser("explore", help="computation tree/graph")
    common(p, assertions=False)
    p.add_argument("-i", "--initial", required=True)
    p.add_argument("--depth", type=int, default=1)
    p.set_defaults(fn=cmd_explore)

    p = sub.add_parser("bench", help="benchmark harness")
    p.add_argument("--corpus", help="TOML corpus file (default: bundled)")
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--out", help="directory for JSON artifacts")
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.add_argument("--session-dir")
    p.add_argument("--ui", help="directory of built UI files to serve at /ui")
    p.set_defaults(fn=cmd_serve)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else 0
    overrides = {
        "host": getattr(args, "host", None),
        "port": getattr(args, "port", None),
        "session_dir": getattr(args, "session_dir", None),
    }
    config = load_config(args.config, overrides)
    try:
        return args.fn(args, config)
    except (ParseError, ModuleError, wire_mod.MalformedTrace) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (StepLimitExceeded, NodeLimitExceeded) as e:
        print(f"limit: {e}", file=sys.stderr)
        return EXIT_LIMIT
    except (EngineError, SliceError, EmptyCriterion, RepairError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
