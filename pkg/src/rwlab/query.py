"""Trace querying with `_` (hidden) and `?` (reported) wildcards."""

from __future__ import annotations

from dataclasses import dataclass

from .engine import Limits, Trace
from .matching import match_modulo
from .module import ProgramModule
from .terms import Position, Term


@dataclass
class QueryHit:
    state_index: int
    position: Position
    reported: dict[int, Term]


def query_trace(trace: Trace, pattern: Term, module: ProgramModule,
                limits: Limits | None = None) -> list[QueryHit]:
    """Match the pattern at every position of every state, modulo axioms.

    One hit per (state, position); `?` bindings are reported in pattern
    order.  Wildcards match any subterm (a `?` under a flattened operator may
    report an absorbed block)."""
    lim = (limits or Limits()).ac_assignments
    hits: list[QueryHit] = []
    for i, state in enumerate(trace.states):
        for pos in state.positions():
            sub = state.subterm_at(pos)
            for m in match_modulo(pattern, sub, module, limit=lim):
                hits.append(QueryHit(i, pos, dict(m.reported)))
                break
    return hits
