"""Benchmark harness: checking overhead and slice reduction per program.

Each corpus entry is executed with and without synchronous assertion
checking (median of several runs on a monotonic clock, warm-up discarded).
Reported per entry: execution times, number of assertion checks, overhead
OV = (T_ExChk - T_Ex) / T_Ex, rendered byte sizes of the extended trace and
slice, the reduction rate, and criterion-synthesis/repair times.
"""

from __future__ import annotations

import statistics
import time
from dataclasses import dataclass, field
from typing import Optional

from .assertions import CheckStats, check_trace_async, run_checked_sync
from .engine import Limits, execute
from .parser import parse_assertions, parse_program, parse_term
from .repair import RepairError, repair_rule
from .slicer import (render_slice_extended, render_trace_extended,
                     slice_backward, synthesize_criterion)


@dataclass
class BenchEntry:
    name: str
    program: str
    assertions: str
    initial: str
    bound: int
    strategy: Optional[list[str]] = None


@dataclass
class BenchRow:
    name: str
    t_ex_ms: float = 0.0
    t_exchk_ms: float = 0.0
    checks: int = 0
    overhead: Optional[float] = None
    t_synth_ms: Optional[float] = None
    t_fix_ms: Optional[float] = None
    size_trace: int = 0
    size_slice: Optional[int] = None
    reduction: Optional[float] = None
    bigsteps: int = 0
    violation: bool = False
    error: Optional[str] = None


def overhead(t_ex: float, t_exchk: float) -> float:
    return (t_exchk - t_ex) / t_ex


def _timed(fn, repeats: int) -> tuple[float, object]:
    fn()  # warm-up, discarded
    times = []
    result = None
    for _ in range(repeats):
        start = time.perf_counter()
        result = fn()
        times.append((time.perf_counter() - start) * 1000.0)
    return statistics.median(times), result


def run_entry(entry: BenchEntry, repeats: int = 5,
              limits: Optional[Limits] = None) -> BenchRow:
    row = BenchRow(entry.name)
    try:
        module = parse_program(entry.program)
        assertions = parse_assertions(entry.assertions, module) \
            if entry.assertions.strip() else []
        t0 = parse_term(entry.initial, module)

        def plain():
            return execute(t0, module, entry.bound, strategy=entry.strategy,
                           limits=limits)

        row.t_ex_ms, _ = _timed(plain, repeats)

        stats = CheckStats()

        def checked():
            stats.checks = 0
            return run_checked_sync(t0, module, assertions, entry.bound,
                                    strategy=entry.strategy, limits=limits,
                                    stats=stats)

        row.t_exchk_ms, (trace, violation) = _timed(checked, repeats)
        row.checks = stats.checks
        row.bigsteps = len(trace.bigsteps)
        if row.t_ex_ms > 0:
            row.overhead = max(0.0, overhead(row.t_ex_ms, row.t_exchk_ms))
        row.size_trace = len(render_trace_extended(trace).encode())
        row.violation = violation is not None
        if violation is not None:
            start = time.perf_counter()
            criterion = synthesize_criterion(violation, trace, module)
            row.t_synth_ms = (time.perf_counter() - start) * 1000.0
            sl = slice_backward(trace, criterion, module, trusted=True,
                                limits=limits)
            row.size_slice = len(render_slice_extended(sl).encode())
            row.reduction = 1.0 - row.size_slice / row.size_trace
            if violation.state_index > 0:
                try:
                    start = time.perf_counter()
                    repair_rule(trace.bigsteps[violation.state_index - 1],
                                violation, module, limits)
                    row.t_fix_ms = (time.perf_counter() - start) * 1000.0
                except RepairError:
                    row.t_fix_ms = None
    except Exception as e:  # per-entry failures recorded, run continues
        row.error = f"{type(e).__name__}: {e}"
    return row


def run_bench(entries: list[BenchEntry], repeats: int = 5,
              limits: Optional[Limits] = None) -> list[BenchRow]:
    return [run_entry(e, repeats, limits) for e in entries]


def rows_to_json(rows: list[BenchRow]) -> list[dict]:
    return [{
        "name": r.name, "T_Ex": r.t_ex_ms, "T_ExChk": r.t_exchk_ms,
        "Chk": r.checks, "OV": r.overhead, "T_synth": r.t_synth_ms,
        "T_fix": r.t_fix_ms, "sizeT": r.size_trace, "sizeTslice": r.size_slice,
        "Red": r.reduction, "bigsteps": r.bigsteps,
        "violation": r.violation, "error": r.error,
    } for r in rows]


def report_text(rows: list[BenchRow]) -> str:
    header = (f"{'Program':<16} {'T_Ex':>8} {'T_ExChk':>8} {'#Chk':>6} "
              f"{'OV':>6} {'T_synth':>8} {'T_fix':>7} {'Size T':>9} "
              f"{'Size T*':>9} {'%Red':>6}")
    lines = [header, "-" * len(header)]
    for r in rows:
        if r.error:
            lines.append(f"{r.name:<16} error: {r.error}")
            continue

        def fmt(v, pattern="{:.1f}"):
            return "-" if v is None else pattern.format(v)
        lines.append(
            f"{r.name:<16} {r.t_ex_ms:>8.1f} {r.t_exchk_ms:>8.1f} "
            f"{r.checks:>6} {fmt(r.overhead, '{:.2f}'):>6} "
            f"{fmt(r.t_synth_ms):>8} {fmt(r.t_fix_ms):>7} "
            f"{r.size_trace:>9} {fmt(r.size_slice, '{:.0f}'):>9} "
            f"{fmt(None if r.reduction is None else 100 * r.reduction, '{:.0f}%'):>6}")
    return "\n".join(lines)


def default_corpus() -> list[BenchEntry]:
    import importlib.resources as resources
    bundled = resources.files("rwlab") / "bundled"

    def text(name: str) -> str:
        return (bundled / name).read_text()

    init_paper = ("1 : (st('S1,23), st('S2,8)) | (tr('T1,9), tr('T2,20)) | "
                  "ord('O1,'T1,'S2,12,4,3,closed)")
    init_long = ("0 : (st('S1,23), st('S2,50)) | (tr('T1,9), tr('T2,20)) | "
                 "ord('O1,'T1,'S2,12,4,3,closed)")
    init_small = "1 : st('S,8) | tr('T,9) | ord('O,'T,'S,12,4,3,closed)"
    return [
        BenchEntry("stock", text("stock.rwl"), text("stock.assn"),
                   init_small, 60),
        BenchEntry("stock-paper", text("stock_paper.rwl"), text("stock.assn"),
                   init_paper, 2, strategy=["next-rnd", "open-ord"]),
        BenchEntry("stock-long", text("stock_long.rwl"), text("stock.assn"),
                   init_long, 200),
        BenchEntry("stock-guarded", text("stock_guarded.rwl"), text("stock.assn"),
                   init_long, 120),
    ]
